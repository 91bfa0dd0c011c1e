//! Seeded random inputs for property checks and randomized trials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{kron_power, permutations, permute_slots, CMatrix, CVector, Metric, C64};

pub type TrialRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

pub fn ket<R: Rng>(rng: &mut R, d: usize) -> CVector {
    CVector::from_fn(d, |_, _| complex(rng))
}

pub fn hermitian<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let a = matrix(rng, d, d);
    (&a + a.adjoint()).scale(0.5)
}

/// Average of `T_π A T_π⁻¹` over all slot permutations of an `m`-fold power of `C^d`.
pub fn symmetrize_slots(a: &CMatrix, d: usize, m: usize) -> CMatrix {
    let perms = permutations(m);
    let mut out = CMatrix::zeros(a.nrows(), a.ncols());
    for (perm, _) in &perms {
        out += permute_slots(a, d, perm).expect("dimension checked by caller");
    }
    out / C64::new(perms.len() as f64, 0.0)
}

/// A random `m`-body interaction that commutes with slot permutations and is
/// Hermitian with respect to `J^⊗m`: `W = (J^⊗m)⁻¹ K` for permutation-symmetric Hermitian `K`.
pub fn symmetric_interaction<R: Rng>(rng: &mut R, metric: &Metric, m: usize) -> CMatrix {
    let d = metric.d();
    let dim = d.pow(m as u32);
    let k = symmetrize_slots(&hermitian(rng, dim), d, m);
    if metric.is_identity() {
        return k;
    }
    kron_power(metric.inverse(), m).expect("small power") * k
}

/// A random single-particle operator Hermitian with respect to the metric: `J⁻¹ K`.
pub fn metric_hermitian<R: Rng>(rng: &mut R, metric: &Metric) -> CMatrix {
    let k = hermitian(rng, metric.d());
    metric.inverse() * k
}

/// A random metric-Hermitian density `K J` (the form taken by `ψψ*`).
pub fn density<R: Rng>(rng: &mut R, metric: &Metric) -> CMatrix {
    let k = hermitian(rng, metric.d());
    k * metric.matrix()
}
