use super::{full_power_hamiltonian, sector_hamiltonian};
use crate::algebra::{HamiltonianFunctionalSpec, StateDensity};
use crate::tensor::{
    contract_matrix, frobenius, partial_transpose, permute_slots, sector_dim, sector_power, CMatrix, Metric, Parity,
    Sector, C64, COMMUTATION_TOL,
};
use crate::{Error, Result};

/// Where the components of a representing functional live, which also fixes
/// the product law.
///
/// `Full` components are permutation-commuting operators on `(C^d)^⊗n` and
/// multiply by the tensor-power law, slot by slot:
/// `(⊗H_i)·(⊗A_i) = ⊗(H_i·A_i)` and `{⊗H_i, ⊗A_i} = Σ_j …⊗{H_j, A_j}⊗…`.
/// `Sector` components are operators on the symmetric or antisymmetric sector
/// and multiply as Fock-space operators, `(HA + AH)/2` and `i[H, A]`.
/// Evaluation on a sector uses `S†ρ^⊗nS`, which agrees with the full-power
/// trace for pure bosonic states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Storage {
    Full,
    Sector(Parity),
}

impl Storage {
    fn sector(self) -> Sector {
        match self {
            Storage::Full => Sector::Full,
            Storage::Sector(p) => p.sector(),
        }
    }
}

/// A representing functional
/// `f(ρ) = e^{−⟨ρ,I⟩/ε} Σ_n ⟨ρ^⊗n, A^(n)⟩ / (n! ε^(n−1))`, stored by its components.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFunctional {
    epsilon: f64,
    storage: Storage,
    metric: Metric,
    components: Vec<CMatrix>,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

impl PolyFunctional {
    /// Wrap components `A^(0), …, A^(n_max)`; `A^(0)` is a 1×1 matrix.
    pub fn encode(components: Vec<CMatrix>, epsilon: f64, storage: Storage, metric: Metric) -> Result<Self> {
        check_epsilon(epsilon)?;
        if components.is_empty() {
            return Err(Error::InvalidArgument("a functional needs at least the n = 0 component".into()));
        }
        let d = metric.d();
        for (n, a) in components.iter().enumerate() {
            let dim = sector_dim(d, n, storage.sector());
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: a.nrows() });
            }
            if storage == Storage::Full {
                let scale = frobenius(a).max(1.0);
                for slot in 0..n.saturating_sub(1) {
                    let mut perm: Vec<usize> = (0..n).collect();
                    perm.swap(slot, slot + 1);
                    let norm = frobenius(&(permute_slots(a, d, &perm)? - a));
                    if norm > COMMUTATION_TOL * scale {
                        return Err(Error::NotPermutationSymmetric { norm });
                    }
                }
            }
        }
        Ok(Self { epsilon, storage, metric, components })
    }

    /// The uniformization of `γ`: `A^(n) = H^(n)` and `A^(0) = 0`.
    pub fn from_spec(spec: &HamiltonianFunctionalSpec, epsilon: f64, n_max: usize, storage: Storage) -> Result<Self> {
        check_epsilon(epsilon)?;
        let metric = spec
            .metric()
            .ok_or_else(|| Error::RealizationMismatch("representing functionals need a quantum functional".into()))?
            .clone();
        let mut components = vec![CMatrix::zeros(1, 1)];
        for n in 1..=n_max {
            let h = match storage {
                Storage::Full => full_power_hamiltonian(spec, n, epsilon, 0.0)?,
                Storage::Sector(parity) => sector_hamiltonian(spec, n, epsilon, parity, 0.0)?,
            };
            components.push(h.matrix);
        }
        Ok(Self { epsilon, storage, metric, components })
    }

    /// Components `Σ_i A_i` of the linear observable `⟨ρ, A⟩`.
    pub fn linear_observable(
        a: &CMatrix,
        metric: Metric,
        epsilon: f64,
        n_max: usize,
        storage: Storage,
    ) -> Result<Self> {
        let spec = HamiltonianFunctionalSpec::quantum(metric, vec![a.clone()])?;
        Self::from_spec(&spec, epsilon, n_max, storage)
    }

    /// Identity components; the functional is the constant `ε`.
    pub fn unit(metric: Metric, epsilon: f64, n_max: usize, storage: Storage) -> Result<Self> {
        let d = metric.d();
        let components = (0..=n_max)
            .map(|n| {
                let dim = sector_dim(d, n, storage.sector());
                CMatrix::identity(dim, dim)
            })
            .collect();
        Self::encode(components, epsilon, storage, metric)
    }

    pub fn decode(&self) -> &[CMatrix] {
        &self.components
    }

    pub fn into_components(self) -> Vec<CMatrix> {
        self.components
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn storage(&self) -> Storage {
        self.storage
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn n_max(&self) -> usize {
        self.components.len() - 1
    }

    /// `⟨ρ^⊗n, A^(n)⟩` for each stored `n`.
    pub fn power_pairings(&self, rho: &StateDensity) -> Result<Vec<C64>> {
        let r = rho
            .matrix()
            .ok_or_else(|| Error::RealizationMismatch("representing functionals act on quantum states".into()))?;
        if r.nrows() != self.metric.d() {
            return Err(Error::DimensionMismatch { expected: self.metric.d(), got: r.nrows() });
        }
        let d = self.metric.d();
        self.components
            .iter()
            .enumerate()
            .map(|(n, a)| match self.storage {
                Storage::Full => Ok(contract_matrix(a, d, &vec![r.clone(); n])[(0, 0)]),
                Storage::Sector(parity) => {
                    let p = sector_power(r, n, parity)?;
                    Ok(trace_product(&p, a))
                }
            })
            .collect()
    }

    /// The truncated series at `ρ`.
    pub fn eval(&self, rho: &StateDensity) -> Result<C64> {
        let pairings = self.power_pairings(rho)?;
        let u = rho.mass();
        let mut total = C64::new(0.0, 0.0);
        let mut coeff = self.epsilon;
        for (n, value) in pairings.into_iter().enumerate() {
            if n > 0 {
                coeff /= n as f64 * self.epsilon;
            }
            total += value * coeff;
        }
        Ok(total * (-u / self.epsilon).exp())
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.epsilon != other.epsilon {
            return Err(Error::InvalidArgument(format!(
                "functionals use different epsilon ({} vs {})",
                self.epsilon, other.epsilon
            )));
        }
        if self.storage != other.storage || self.metric != other.metric {
            return Err(Error::InvalidArgument("functionals use different storage or metric".into()));
        }
        if self.components.len() != other.components.len() {
            return Err(Error::Truncation { requested: other.n_max(), n_max: self.n_max() });
        }
        Ok(())
    }

    fn combine(
        &self,
        other: &Self,
        tensor: impl Fn(&CMatrix, &CMatrix, usize, usize) -> CMatrix,
        op: impl Fn(&CMatrix, &CMatrix) -> CMatrix,
    ) -> Result<Self> {
        self.compatible(other)?;
        let d = self.metric.d();
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .enumerate()
            .map(|(n, (a, b))| match self.storage {
                Storage::Full => tensor(a, b, d, n),
                Storage::Sector(_) => op(a, b),
            })
            .collect();
        Ok(Self { epsilon: self.epsilon, storage: self.storage, metric: self.metric.clone(), components })
    }
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `Z_S(X, Y)`: the product `XY` in the slots of `S` and `YX` in the others.
fn ordered_product(x: &CMatrix, y: &CMatrix, d: usize, n: usize, s: u32) -> CMatrix {
    let full: u32 = if n == 0 { 0 } else { (1u32 << n) - 1 };
    let flip = full & !s;
    if flip == 0 {
        return x * y;
    }
    let xt = partial_transpose(x, d, n, flip);
    let yt = partial_transpose(y, d, n, flip);
    partial_transpose(&(xt * yt), d, n, flip)
}

/// Tensor-power Jordan product: `⊗(H_i·A_i)` on product tensors, extended linearly.
pub fn tensor_jordan(x: &CMatrix, y: &CMatrix, d: usize, n: usize) -> CMatrix {
    let mut out = CMatrix::zeros(x.nrows(), x.ncols());
    for s in 0..(1u32 << n) {
        out += ordered_product(x, y, d, n, s);
    }
    out / C64::new((1u64 << n) as f64, 0.0)
}

/// Tensor-power bracket: `Σ_j …⊗(H_i·A_i)⊗{H_j, A_j}⊗(H_k·A_k)⊗…` on product tensors.
pub fn tensor_poisson(x: &CMatrix, y: &CMatrix, d: usize, n: usize) -> CMatrix {
    let mut out = CMatrix::zeros(x.nrows(), x.ncols());
    if n == 0 {
        return out;
    }
    let norm = (1u64 << (n - 1)) as f64;
    for s in 0..(1u32 << n) {
        let weight = (2.0 * s.count_ones() as f64 - n as f64) / norm;
        if weight != 0.0 {
            out += ordered_product(x, y, d, n, s) * C64::new(0.0, weight);
        }
    }
    out
}

/// Componentwise Jordan product of two representing functionals.
pub fn uniformized_jordan(f: &PolyFunctional, g: &PolyFunctional) -> Result<PolyFunctional> {
    f.combine(g, tensor_jordan, |a, b| (a * b + b * a).scale(0.5))
}

/// Componentwise Poisson bracket of two representing functionals.
pub fn uniformized_poisson(f: &PolyFunctional, g: &PolyFunctional) -> Result<PolyFunctional> {
    f.combine(g, tensor_poisson, |a, b| (a * b - b * a) * C64::new(0.0, 1.0))
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `δ^kγ(ρ) = Σ_{m≥k} ⟨ρ^⊗(m−k), W^(m)⟩ / (m−k)!` as an operator on `k` slots
/// (a 1×1 matrix holding `γ(ρ)` for `k = 0`).
pub fn derivative_tensor(spec: &HamiltonianFunctionalSpec, rho: &CMatrix, k: usize) -> Result<CMatrix> {
    let d = spec.d().ok_or_else(|| Error::RealizationMismatch("derivatives need a quantum functional".into()))?;
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: rho.nrows() });
    }
    let dim = d.pow(k as u32);
    let mut out = CMatrix::zeros(dim, dim);
    for m in k.max(1)..=spec.degree() {
        let w = spec.scaled_term(m, 0.0).expect("term exists");
        let contracted = contract_matrix(&w, d, &vec![rho.clone(); m - k]);
        out += contracted.scale(1.0 / factorial(m - k));
    }
    Ok(out)
}

fn expansion(
    gamma: &HamiltonianFunctionalSpec,
    alpha: &HamiltonianFunctionalSpec,
    rho: &StateDensity,
    epsilon: f64,
    first: usize,
    product: impl Fn(&CMatrix, &CMatrix, usize, usize) -> CMatrix,
) -> Result<C64> {
    check_epsilon(epsilon)?;
    if gamma.realization() != alpha.realization() || gamma.realization() != &rho.realization {
        return Err(Error::RealizationMismatch("functionals and state use different realizations".into()));
    }
    let r = rho.matrix().ok_or_else(|| Error::RealizationMismatch("expansion needs a quantum state".into()))?;
    let d = r.nrows();
    let top = gamma.degree().min(alpha.degree());
    let mut total = C64::new(0.0, 0.0);
    for k in first..=top {
        let x = derivative_tensor(gamma, r, k)?;
        let y = derivative_tensor(alpha, r, k)?;
        let z = product(&x, &y, d, k);
        let paired = contract_matrix(&z, d, &vec![r.clone(); k])[(0, 0)];
        total += paired * (epsilon.powi(k as i32 - 1) / factorial(k));
    }
    Ok(total)
}

/// `(γ·α)(ρ) = Σ_k ε^(k−1)/k! ⟨ρ^⊗k, δ^kγ(ρ) · δ^kα(ρ)⟩` with the tensor-power Jordan product.
pub fn functional_jordan_expansion(
    gamma: &HamiltonianFunctionalSpec,
    alpha: &HamiltonianFunctionalSpec,
    rho: &StateDensity,
    epsilon: f64,
) -> Result<C64> {
    expansion(gamma, alpha, rho, epsilon, 0, tensor_jordan)
}

/// `{γ, α}(ρ) = Σ_{k≥1} ε^(k−1)/k! ⟨ρ^⊗k, {δ^kγ(ρ), δ^kα(ρ)}⟩` with the tensor-power bracket.
pub fn functional_poisson_expansion(
    gamma: &HamiltonianFunctionalSpec,
    alpha: &HamiltonianFunctionalSpec,
    rho: &StateDensity,
    epsilon: f64,
) -> Result<C64> {
    expansion(gamma, alpha, rho, epsilon, 1, tensor_poisson)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::tensor::kron_matrices;

    fn traceless_density(rng: &mut random::TrialRng, d: usize) -> StateDensity {
        let mut r = random::hermitian(rng, d);
        let shift = r.trace() / C64::new(d as f64, 0.0);
        for i in 0..d {
            r[(i, i)] -= shift;
        }
        StateDensity::quantum(&Metric::identity(d), r).unwrap()
    }

    #[test]
    fn encode_decode_roundtrip() {
        let mut rng = random::rng(1);
        let comps = vec![CMatrix::from_element(1, 1, C64::new(0.5, 0.0)), random::hermitian(&mut rng, 2)];
        let f = PolyFunctional::encode(comps.clone(), 0.25, Storage::Full, Metric::identity(2)).unwrap();
        assert_eq!(f.decode(), comps.as_slice());
        assert!(PolyFunctional::encode(comps, 0.0, Storage::Full, Metric::identity(2)).is_err());
    }

    #[test]
    fn vacuum_component_weights_by_epsilon() {
        let eps = 0.4;
        let c = C64::new(1.3, 0.0);
        let f = PolyFunctional::encode(
            vec![CMatrix::from_element(1, 1, c), CMatrix::zeros(2, 2)],
            eps,
            Storage::Full,
            Metric::identity(2),
        )
        .unwrap();
        let rho = StateDensity::quantum(&Metric::identity(2), CMatrix::identity(2, 2).scale(0.3)).unwrap();
        let expect = c * eps * (-0.6f64 / eps).exp();
        assert!((f.eval(&rho).unwrap() - expect).norm() < 1e-15);
    }

    #[test]
    fn unit_evaluates_to_epsilon_and_is_neutral() {
        let mut rng = random::rng(2);
        let eps = 0.3;
        for storage in [Storage::Full, Storage::Sector(Parity::Boson)] {
            let unit = PolyFunctional::unit(Metric::identity(2), eps, 4, storage).unwrap();
            let amp = 0.05f64.sqrt();
            let rho = StateDensity::pure(&Metric::identity(2), &[C64::new(amp, 0.0), C64::new(0.0, amp)]).unwrap();
            let tail: f64 = 1.0
                - (0..=4).map(|n| (0.1f64 / eps).powi(n) / factorial(n as usize)).sum::<f64>() * (-0.1f64 / eps).exp();
            assert!((unit.eval(&rho).unwrap().re - eps * (1.0 - tail)).abs() < 1e-14);
            let a = random::hermitian(&mut rng, 2);
            let f = PolyFunctional::linear_observable(&a, Metric::identity(2), eps, 4, storage).unwrap();
            let prod = uniformized_jordan(&f, &unit).unwrap();
            for (x, y) in prod.decode().iter().zip(f.decode()) {
                assert!(frobenius(&(x - y)) < 1e-13);
            }
        }
    }

    #[test]
    fn tensor_products_factor_on_product_tensors() {
        let mut rng = random::rng(4);
        let (h1, h2, a1, a2) = (
            random::hermitian(&mut rng, 2),
            random::hermitian(&mut rng, 2),
            random::hermitian(&mut rng, 2),
            random::hermitian(&mut rng, 2),
        );
        let jordan = |x: &CMatrix, y: &CMatrix| (x * y + y * x).scale(0.5);
        let bracket = |x: &CMatrix, y: &CMatrix| (x * y - y * x) * C64::new(0.0, 1.0);
        let x = kron_matrices(&h1, &h2);
        let y = kron_matrices(&a1, &a2);
        let j = tensor_jordan(&x, &y, 2, 2);
        assert!(frobenius(&(j - kron_matrices(&jordan(&h1, &a1), &jordan(&h2, &a2)))) < 1e-13);
        let b = tensor_poisson(&x, &y, 2, 2);
        let expect =
            kron_matrices(&bracket(&h1, &a1), &jordan(&h2, &a2)) + kron_matrices(&jordan(&h1, &a1), &bracket(&h2, &a2));
        assert!(frobenius(&(b - expect)) < 1e-13);
    }

    #[test]
    fn encoded_functional_reproduces_gamma_on_traceless_states() {
        let mut rng = random::rng(6);
        let metric = Metric::identity(2);
        let spec = HamiltonianFunctionalSpec::quantum(
            metric.clone(),
            vec![random::hermitian(&mut rng, 2), random::symmetric_interaction(&mut rng, &metric, 2)],
        )
        .unwrap();
        let f = PolyFunctional::from_spec(&spec, 0.2, 3, Storage::Full).unwrap();
        let rho = traceless_density(&mut rng, 2);
        let g = crate::algebra::gamma_eval(&spec, &rho, 0.0).unwrap();
        assert!((f.eval(&rho).unwrap().re - g).abs() < 1e-12);
    }
}
