//! ε-uniformization: the linear n-particle Hamiltonians
//! `H^(n) = Σ_m C(n,m) ε^(m-1) Sym(I^⊗(n-m) ⊗ W^(m))`, number observables on a
//! truncated Fock space, and the representing-functional calculus.
//!
//! `Sym` is the average over all `n!` slot permutations, so `C(n,m)·Sym(I ⊗ W)`
//! is the sum of `W` over all `m`-element slot subsets. Sector Hamiltonians are
//! assembled in the occupation basis from that subset-sum form, which is the
//! normal-ordered `(1/m!) Σ W_{x,y} a†_{x1}…a†_{xm} a_{ym}…a_{y1}`; this reaches
//! sector sizes far beyond explicit permutation sums. The literal
//! permutation-sum construction is kept as [`full_power_hamiltonian`].

mod appendix;
mod fock;
mod functional;

pub use appendix::{appendix_identity_suite, random_spec, traceless_density, AppendixReport};
pub use fock::{number_observable, BlockOperator, FockTruncation};
pub use functional::{
    derivative_tensor, functional_jordan_expansion, functional_poisson_expansion, tensor_jordan, tensor_poisson,
    uniformized_jordan, uniformized_poisson, PolyFunctional, Storage,
};

use nalgebra::DMatrix;

use crate::algebra::HamiltonianFunctionalSpec;
use crate::tensor::{
    binomial, embed_slot, kron_matrices, permutations, permute_slots, second_quantize, CMatrix, Metric, Operator,
    Parity, SectorBasis, SpaceLabel, C64, FULL_POWER_DIM_CAP, MAX_SYMMETRIZER_POWER,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformizationParams {
    pub epsilon: f64,
    pub n_max: usize,
    pub parity: Parity,
}

impl UniformizationParams {
    pub fn new(epsilon: f64, n_max: usize, parity: Parity) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        if n_max == 0 {
            return Err(Error::InvalidArgument("n_max must be at least 1".into()));
        }
        Ok(Self { epsilon, n_max, parity })
    }

    pub fn bosonic(epsilon: f64, n_max: usize) -> Result<Self> {
        Self::new(epsilon, n_max, Parity::Boson)
    }
}

fn quantum_terms(spec: &HamiltonianFunctionalSpec) -> Result<(&[Operator], &Metric)> {
    match (spec.terms(), spec.metric()) {
        (Some(t), Some(m)) => Ok((t, m)),
        _ => Err(Error::RealizationMismatch("uniformization needs a quantum functional".into())),
    }
}

/// `H^(n)` on the parity sector `n` at time `t`, for any `n` and `ε > 0`.
pub fn sector_hamiltonian(
    spec: &HamiltonianFunctionalSpec,
    n: usize,
    epsilon: f64,
    parity: Parity,
    t: f64,
) -> Result<Operator> {
    let basis = SectorBasis::new(spec.d().unwrap_or(0).max(1), n, parity);
    sector_hamiltonian_on(spec, &basis, epsilon, t)
}

/// [`sector_hamiltonian`] on a prebuilt occupation basis.
pub fn sector_hamiltonian_on(
    spec: &HamiltonianFunctionalSpec,
    basis: &SectorBasis,
    epsilon: f64,
    t: f64,
) -> Result<Operator> {
    let (terms, metric) = quantum_terms(spec)?;
    if basis.d() != metric.d() {
        return Err(Error::DimensionMismatch { expected: metric.d(), got: basis.d() });
    }
    let dim = basis.dim();
    let mut h = CMatrix::zeros(dim, dim);
    for (idx, w) in terms.iter().enumerate() {
        let m = idx + 1;
        if m > basis.n() {
            break;
        }
        let coeff = epsilon.powi(m as i32 - 1) * spec.coefficient(m, t);
        if coeff == 0.0 {
            continue;
        }
        h += second_quantize(&w.matrix, m, basis)? * C64::new(coeff, 0.0);
    }
    Operator::new(basis.space(), h, metric.clone())
}

/// `H^(n)` on the parity sector, within the truncation of `params`.
pub fn build_hn(spec: &HamiltonianFunctionalSpec, n: usize, params: &UniformizationParams) -> Result<Operator> {
    build_hn_at(spec, n, params, 0.0)
}

pub fn build_hn_at(
    spec: &HamiltonianFunctionalSpec,
    n: usize,
    params: &UniformizationParams,
    t: f64,
) -> Result<Operator> {
    if n > params.n_max {
        return Err(Error::Truncation { requested: n, n_max: params.n_max });
    }
    sector_hamiltonian(spec, n, params.epsilon, params.parity, t)
}

/// `Sym(A) = (1/n!) Σ_π T_π A T_π⁻¹` on an `n`-fold full power.
pub fn symmetrize(a: &CMatrix, d: usize, n: usize) -> Result<CMatrix> {
    if n > MAX_SYMMETRIZER_POWER {
        return Err(Error::TooLarge { what: format!("permutation sum over {n} slots"), limit: MAX_SYMMETRIZER_POWER });
    }
    let perms = permutations(n);
    let mut out = CMatrix::zeros(a.nrows(), a.ncols());
    for (perm, _) in &perms {
        out += permute_slots(a, d, perm)?;
    }
    Ok(out / C64::new(perms.len() as f64, 0.0))
}

/// `H^(n)` on the full tensor power, literally `Σ_m C(n,m) ε^(m-1) Sym(I^⊗(n-m) ⊗ W^(m))`.
pub fn full_power_hamiltonian(spec: &HamiltonianFunctionalSpec, n: usize, epsilon: f64, t: f64) -> Result<Operator> {
    let (terms, metric) = quantum_terms(spec)?;
    let d = metric.d();
    let space = SpaceLabel::full(d, n);
    let dim = d
        .checked_pow(n as u32)
        .filter(|&v| v <= FULL_POWER_DIM_CAP)
        .ok_or_else(|| Error::TooLarge { what: format!("full tensor power {d}^{n}"), limit: FULL_POWER_DIM_CAP })?;
    let mut h = CMatrix::zeros(dim, dim);
    for (idx, w) in terms.iter().enumerate() {
        let m = idx + 1;
        if m > n {
            break;
        }
        let rest = d.pow((n - m) as u32);
        let padded = kron_matrices(&CMatrix::identity(rest, rest), &w.matrix);
        let coeff = binomial(n, m) as f64 * epsilon.powi(m as i32 - 1) * spec.coefficient(m, t);
        h += symmetrize(&padded, d, n)? * C64::new(coeff, 0.0);
    }
    Operator::new(space, h, metric.clone())
}

/// `Σ_i A_i` on the `n`-fold full power.
pub fn one_body_sum(a: &CMatrix, n: usize) -> Result<CMatrix> {
    let d = a.nrows();
    let dim = d.pow(n as u32);
    let mut out = CMatrix::zeros(dim, dim);
    for slot in 0..n {
        out += embed_slot(a, slot, n)?;
    }
    Ok(out)
}

/// `-Δ` of the periodic ring with stencil `2ψ_x − ψ_{x+1} − ψ_{x−1}`. On two
/// sites both neighbours coincide, so the single bond is counted twice.
pub fn ring_laplacian(l: usize) -> DMatrix<f64> {
    let mut lap = DMatrix::zeros(l, l);
    for x in 0..l {
        lap[(x, x)] += 2.0;
        lap[(x, (x + 1) % l)] -= 1.0;
        lap[(x, (x + l - 1) % l)] -= 1.0;
    }
    lap
}

/// Lattice Hartree functional on a periodic ring of `L` sites:
/// `W¹ = hopping·(−Δ) + onsite·I` and `⟨x₁x₂|W²|x₁x₂⟩ = ω(x₁, x₂)`.
pub fn build_lattice_hartree(
    l: usize,
    hopping: f64,
    omega: &DMatrix<f64>,
    onsite: f64,
) -> Result<HamiltonianFunctionalSpec> {
    if l < 2 {
        return Err(Error::InvalidArgument("the ring needs at least two sites".into()));
    }
    if omega.nrows() != l || omega.ncols() != l {
        return Err(Error::DimensionMismatch { expected: l, got: omega.nrows() });
    }
    let asym = (omega - omega.transpose()).abs().max();
    if asym > 1e-12 * omega.abs().max().max(1.0) {
        return Err(Error::NotPermutationSymmetric { norm: asym });
    }
    let lap = ring_laplacian(l);
    let w1 = CMatrix::from_fn(l, l, |r, c| C64::new(hopping * lap[(r, c)] + if r == c { onsite } else { 0.0 }, 0.0));
    let mut w2 = CMatrix::zeros(l * l, l * l);
    for x1 in 0..l {
        for x2 in 0..l {
            let idx = x1 * l + x2;
            w2[(idx, idx)] = C64::new(omega[(x1, x2)], 0.0);
        }
    }
    HamiltonianFunctionalSpec::quantum(Metric::identity(l), vec![w1, w2])
}

/// On-site kernel `ω = g·δ_{x₁x₂}`.
pub fn onsite_kernel(l: usize, g: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal_element(l, l, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{compress, frobenius, sector_isometry};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn sz() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
    }

    fn sigma_spec() -> HamiltonianFunctionalSpec {
        HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![sz(), kron_matrices(&sz(), &sz())]).unwrap()
    }

    #[test]
    fn two_particle_sigma_model() {
        let h = full_power_hamiltonian(&sigma_spec(), 2, 0.5, 0.0).unwrap();
        let expect = [2.5, -0.5, -0.5, -1.5];
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { expect[i] } else { 0.0 };
                assert!((h.matrix[(i, j)] - c(e)).norm() < 1e-14);
            }
        }
        let params = UniformizationParams::bosonic(0.5, 4).unwrap();
        let sector = build_hn(&sigma_spec(), 2, &params).unwrap();
        let compressed = compress(&h, Parity::Boson).unwrap();
        assert!(frobenius(&(sector.matrix - compressed.matrix)) < 1e-13);
    }

    #[test]
    fn truncation_is_enforced() {
        let params = UniformizationParams::bosonic(0.5, 2).unwrap();
        assert!(matches!(build_hn(&sigma_spec(), 3, &params), Err(Error::Truncation { requested: 3, n_max: 2 })));
        assert!(UniformizationParams::bosonic(0.0, 2).is_err());
    }

    #[test]
    fn ring_laplacian_on_two_sites_double_counts() {
        let spec = build_lattice_hartree(2, 1.0, &onsite_kernel(2, 0.0), 0.0).unwrap();
        let w1 = &spec.term(1).unwrap().matrix;
        let expect = CMatrix::from_row_slice(2, 2, &[c(2.0), c(-2.0), c(-2.0), c(2.0)]);
        assert_eq!(w1, &expect);
        let four = ring_laplacian(4);
        assert_eq!(four.row(0).iter().copied().collect::<Vec<_>>(), vec![2.0, -1.0, 0.0, -1.0]);
    }

    #[test]
    fn onsite_pair_term_is_diagonal() {
        let spec = build_lattice_hartree(3, 1.0, &onsite_kernel(3, -2.0), 0.5).unwrap();
        let w2 = &spec.term(2).unwrap().matrix;
        for idx in 0..9 {
            let expect = if idx / 3 == idx % 3 { -2.0 } else { 0.0 };
            assert_eq!(w2[(idx, idx)], c(expect));
        }
        let mut bad = onsite_kernel(3, 1.0);
        bad[(0, 1)] = 0.3;
        assert!(build_lattice_hartree(3, 1.0, &bad, 0.0).is_err());
    }

    #[test]
    fn fermionic_two_body_matches_compression() {
        let omega = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 1.0 / (1.0 + (i as f64 - j as f64).abs()) });
        let spec = build_lattice_hartree(4, 0.7, &omega, 0.2).unwrap();
        for parity in [Parity::Boson, Parity::Fermion] {
            for n in 1..=3 {
                let full = full_power_hamiltonian(&spec, n, 0.3, 0.0).unwrap();
                let s = sector_isometry(4, n, parity).unwrap();
                let reference = s.adjoint() * &full.matrix * &s;
                let sector = sector_hamiltonian(&spec, n, 0.3, parity, 0.0).unwrap();
                assert!(frobenius(&(reference - &sector.matrix)) < 1e-12, "{parity:?} n={n}");
            }
        }
    }
}
