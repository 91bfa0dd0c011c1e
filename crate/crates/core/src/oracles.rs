//! Independent reference computations for tests.
//!
//! Nothing here goes through the sector machinery: the Fock oracle builds its
//! own occupation lists and ladder operators, and evolves a coherent state in
//! a number-capped Fock space.

use std::collections::HashMap;

use crate::algebra::HamiltonianFunctionalSpec;
use crate::tensor::{CMatrix, CVector, C64};
use crate::{Error, Result};

fn occupations(d: usize, total: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in occupations(d - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn digits(mut index: usize, d: usize, m: usize) -> Vec<usize> {
    let mut w = vec![0; m];
    for slot in (0..m).rev() {
        w[slot] = index % d;
        index /= d;
    }
    w
}

/// `(1/m!) Σ W[i, k] a†_{i1}…a†_{im} a_{km}…a_{k1}` on the fixed-number block `states`.
fn block_term(w: &CMatrix, d: usize, m: usize, states: &[Vec<usize>], index: &HashMap<Vec<usize>, usize>) -> CMatrix {
    let dim = states.len();
    let mut out = CMatrix::zeros(dim, dim);
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    let wdim = d.pow(m as u32);
    for (col, occ) in states.iter().enumerate() {
        for k in 0..wdim {
            let mut state = occ.clone();
            let mut amp = 1.0;
            let mut alive = true;
            for mode in digits(k, d, m) {
                if state[mode] == 0 {
                    alive = false;
                    break;
                }
                amp *= (state[mode] as f64).sqrt();
                state[mode] -= 1;
            }
            if !alive {
                continue;
            }
            for i in 0..wdim {
                let entry = w[(i, k)];
                if entry == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut target = state.clone();
                let mut a2 = amp;
                for mode in digits(i, d, m) {
                    target[mode] += 1;
                    a2 *= (target[mode] as f64).sqrt();
                }
                let row = index[&target];
                out[(row, col)] += entry * (a2 / fact);
            }
        }
    }
    out
}

/// `√ε ⟨z(t)| a_x |z(t)⟩` for the coherent state `z = φ/√ε` evolved by the
/// Fock Hamiltonian `Σ_m ε^{m−1} (1/m!) Σ W^(m) a†…a`, with all sectors up to
/// `cap` particles. Returns the amplitudes and the coherent weight beyond `cap`.
pub fn fock_coherent_evolution(
    spec: &HamiltonianFunctionalSpec,
    phi: &CVector,
    epsilon: f64,
    t: f64,
    cap: usize,
) -> Result<(CVector, f64)> {
    let terms = spec.terms().ok_or_else(|| Error::RealizationMismatch("quantum functional expected".into()))?;
    let metric = spec.metric().expect("quantum functional");
    if !metric.is_identity() || spec.is_time_dependent() {
        return Err(Error::InvalidArgument("oracle runs with the Euclidean metric and constant terms".into()));
    }
    let d = metric.d();
    let z: Vec<C64> = phi.iter().map(|p| p / epsilon.sqrt()).collect();
    let z_norm2: f64 = z.iter().map(|v| v.norm_sqr()).sum();
    let mut blocks: Vec<(Vec<Vec<usize>>, HashMap<Vec<usize>, usize>, CVector)> = Vec::new();
    let mut kept = 0.0;
    for total in 0..=cap {
        let states = occupations(d, total);
        let index: HashMap<Vec<usize>, usize> = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut h = CMatrix::zeros(states.len(), states.len());
        for (idx, op) in terms.iter().enumerate() {
            let m = idx + 1;
            if m <= total {
                h += block_term(&op.matrix, d, m, &states, &index) * C64::new(epsilon.powi(m as i32 - 1), 0.0);
            }
        }
        let amps = CVector::from_iterator(
            states.len(),
            states.iter().map(|occ| {
                let mut a = C64::new((-0.5 * z_norm2).exp(), 0.0);
                for (x, &m) in occ.iter().enumerate() {
                    let fact: f64 = (1..=m).map(|k| k as f64).product();
                    a *= z[x].powu(m as u32) / fact.sqrt();
                }
                a
            }),
        );
        kept += amps.norm_squared();
        let herm = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let phases = CVector::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * t)),
        );
        let coeffs = eig.eigenvectors.adjoint() * &amps;
        let evolved = &eig.eigenvectors * coeffs.component_mul(&phases);
        blocks.push((states, index, evolved));
    }
    let mut out = CVector::zeros(d);
    for total in 1..=cap {
        let (upper, _, c_upper) = &blocks[total];
        let (_, lower_index, c_lower) = &blocks[total - 1];
        for (i, occ) in upper.iter().enumerate() {
            for x in 0..d {
                if occ[x] == 0 {
                    continue;
                }
                let mut rest = occ.clone();
                rest[x] -= 1;
                let j = lower_index[&rest];
                out[x] += c_lower[j].conj() * c_upper[i] * (occ[x] as f64).sqrt();
            }
        }
    }
    Ok((out * C64::new(epsilon.sqrt(), 0.0), (1.0 - kept).max(0.0)))
}

/// Coherent expectation for `H = Σ s_k n_k + (εg/2) Σ n_k(n_k − 1)`:
/// `φ_k e^{−i s_k t} exp((|φ_k|²/ε)(e^{−iεgt} − 1))`.
pub fn kerr_closed_form(phi: &CVector, s: &[f64], g: f64, epsilon: f64, t: f64) -> CVector {
    let rot = C64::from_polar(1.0, -epsilon * g * t) - C64::new(1.0, 0.0);
    CVector::from_fn(phi.len(), |k, _| {
        phi[k] * C64::from_polar(1.0, -s[k] * t) * (rot * (phi[k].norm_sqr() / epsilon)).exp()
    })
}

/// Hartree solution of the same diagonal model: `φ_k e^{−i(s_k + g|φ_k|²)t}`.
pub fn kerr_hartree(phi: &CVector, s: &[f64], g: f64, t: f64) -> CVector {
    CVector::from_fn(phi.len(), |k, _| phi[k] * C64::from_polar(1.0, -(s[k] + g * phi[k].norm_sqr()) * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Metric;

    fn two_mode(g: f64) -> HamiltonianFunctionalSpec {
        let c = |v: f64| C64::new(v, 0.0);
        let w1 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let mut w2 = CMatrix::zeros(4, 4);
        w2[(0, 0)] = c(g);
        w2[(3, 3)] = c(g);
        HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![w1, w2]).unwrap()
    }

    #[test]
    fn fock_oracle_matches_kerr_form() {
        let phi = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let eps = 0.25;
        let (psi, tail) = fock_coherent_evolution(&two_mode(1.0), &phi, eps, 0.5, 40).unwrap();
        assert!(tail < 1e-12);
        let exact = kerr_closed_form(&phi, &[1.0, -1.0], 1.0, eps, 0.5);
        assert!((psi - exact).norm() < 1e-10);
    }
}
