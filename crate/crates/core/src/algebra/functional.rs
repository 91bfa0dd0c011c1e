use nalgebra::DMatrix;

use super::{pairing, poisson, Element, Field, GridSpec, Realization, StateDensity};
use crate::tensor::{
    frobenius, partial_contract, permute_slots, CMatrix, Metric, Operator, SpaceLabel, Tolerances, C64,
};
use crate::{Error, Result};

/// Highest interaction order supported.
pub const MAX_DEGREE: usize = 3;

/// Scalar time modulation `s_m(t)` multiplying `W^(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Modulation {
    #[default]
    Constant,
    /// `1 + amplitude·sin(frequency·t + phase)`.
    Harmonic { amplitude: f64, frequency: f64, phase: f64 },
}

impl Modulation {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Modulation::Constant => 1.0,
            Modulation::Harmonic { amplitude, frequency, phase } => 1.0 + amplitude * (frequency * t + phase).sin(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Modulation::Constant)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Terms {
    /// `W^(m)` on the `m`-fold full power, index `m - 1`.
    Quantum(Vec<Operator>),
    /// One-body field `W¹(q, p)` and an optional pair kernel `ω(q, q')`.
    Classical { one_body: Field, pair: Option<DMatrix<f64>> },
}

/// The polynomial functional `γ(t, ρ) = Σ_m s_m(t)/m! ⟨ρ^⊗m, W^(m)⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianFunctionalSpec {
    realization: Realization,
    terms: Terms,
    modulation: Vec<Modulation>,
}

impl HamiltonianFunctionalSpec {
    pub fn quantum(metric: Metric, w: Vec<CMatrix>) -> Result<Self> {
        Self::quantum_with(metric, w, &Tolerances::default())
    }

    /// Interactions must commute with slot permutations and be Hermitian with
    /// respect to `J^⊗m`.
    pub fn quantum_with(metric: Metric, w: Vec<CMatrix>, tol: &Tolerances) -> Result<Self> {
        if w.is_empty() || w.len() > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "interaction degree must be between 1 and {MAX_DEGREE}, got {}",
                w.len()
            )));
        }
        let d = metric.d();
        let mut terms = Vec::with_capacity(w.len());
        for (idx, matrix) in w.into_iter().enumerate() {
            let m = idx + 1;
            let op = Operator::new(SpaceLabel::full(d, m), matrix, metric.clone())?;
            let scale = frobenius(&op.matrix).max(1.0);
            for slot in 0..m.saturating_sub(1) {
                let mut perm: Vec<usize> = (0..m).collect();
                perm.swap(slot, slot + 1);
                let swapped = permute_slots(&op.matrix, d, &perm)?;
                let norm = frobenius(&(swapped - &op.matrix));
                if norm > tol.commutation * scale {
                    return Err(Error::NotPermutationSymmetric { norm });
                }
            }
            op.ensure_metric_hermitian(tol.hermiticity)?;
            terms.push(op);
        }
        let n = terms.len();
        Ok(Self {
            realization: Realization::with_metric(metric),
            terms: Terms::Quantum(terms),
            modulation: vec![Modulation::Constant; n],
        })
    }

    /// The functional with `W¹ = 0`.
    pub fn zero(metric: Metric) -> Self {
        let d = metric.d();
        Self::quantum(metric, vec![CMatrix::zeros(d, d)]).expect("zero interaction is valid")
    }

    pub fn classical(grid: GridSpec, one_body: Field, pair: Option<DMatrix<f64>>) -> Result<Self> {
        grid.validate()?;
        if !grid.shape_matches(&one_body) {
            return Err(Error::RealizationMismatch("one-body field does not match the grid".into()));
        }
        if let Some(k) = &pair {
            if k.nrows() != grid.n_q || k.ncols() != grid.n_q {
                return Err(Error::DimensionMismatch { expected: grid.n_q, got: k.nrows() });
            }
            let asym = (k - k.transpose()).abs().max();
            if asym > 1e-12 * k.abs().max().max(1.0) {
                return Err(Error::NotPermutationSymmetric { norm: asym });
            }
        }
        if one_body.iter().chain(pair.iter().flat_map(|k| k.iter())).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("classical kernels must be finite".into()));
        }
        let degree = if pair.is_some() { 2 } else { 1 };
        Ok(Self {
            realization: Realization::Classical(grid),
            terms: Terms::Classical { one_body, pair },
            modulation: vec![Modulation::Constant; degree],
        })
    }

    pub fn with_modulation(mut self, m: usize, modulation: Modulation) -> Result<Self> {
        if m == 0 || m > self.degree() {
            return Err(Error::InvalidArgument(format!("no interaction of order {m}")));
        }
        self.modulation[m - 1] = modulation;
        Ok(self)
    }

    pub fn realization(&self) -> &Realization {
        &self.realization
    }

    pub fn metric(&self) -> Option<&Metric> {
        self.realization.metric()
    }

    /// The degree `N`.
    pub fn degree(&self) -> usize {
        self.modulation.len()
    }

    /// Single-particle dimension of a quantum spec.
    pub fn d(&self) -> Option<usize> {
        self.metric().map(|m| m.d())
    }

    /// All `W^(m)` of a quantum spec, index `m - 1`.
    pub fn terms(&self) -> Option<&[Operator]> {
        match &self.terms {
            Terms::Quantum(t) => Some(t),
            Terms::Classical { .. } => None,
        }
    }

    pub fn term(&self, m: usize) -> Option<&Operator> {
        self.terms().and_then(|t| t.get(m.checked_sub(1)?))
    }

    pub fn one_body_field(&self) -> Option<&Field> {
        match &self.terms {
            Terms::Classical { one_body, .. } => Some(one_body),
            Terms::Quantum(_) => None,
        }
    }

    pub fn pair_kernel(&self) -> Option<&DMatrix<f64>> {
        match &self.terms {
            Terms::Classical { pair, .. } => pair.as_ref(),
            Terms::Quantum(_) => None,
        }
    }

    pub fn modulation(&self, m: usize) -> Modulation {
        self.modulation.get(m.wrapping_sub(1)).copied().unwrap_or_default()
    }

    pub fn coefficient(&self, m: usize, t: f64) -> f64 {
        self.modulation(m).value(t)
    }

    pub fn is_time_dependent(&self) -> bool {
        self.modulation.iter().any(|m| !m.is_constant())
    }

    /// `s_m(t)·W^(m)` as a matrix.
    pub fn scaled_term(&self, m: usize, t: f64) -> Option<CMatrix> {
        self.term(m).map(|w| w.matrix.scale(self.coefficient(m, t)))
    }

    /// The same functional with every modulation frozen at time `t`.
    pub fn frozen_at(&self, t: f64) -> Self {
        let terms = match &self.terms {
            Terms::Quantum(ws) => Terms::Quantum(
                ws.iter().enumerate().map(|(i, w)| w.with_matrix(w.matrix.scale(self.coefficient(i + 1, t)))).collect(),
            ),
            Terms::Classical { one_body, pair } => Terms::Classical {
                one_body: one_body * self.coefficient(1, t),
                pair: pair.as_ref().map(|k| k * self.coefficient(2, t)),
            },
        };
        Self { realization: self.realization.clone(), terms, modulation: vec![Modulation::Constant; self.degree()] }
    }

    fn ensure_same(&self, rho: &StateDensity) -> Result<()> {
        if self.realization != rho.realization {
            return Err(Error::RealizationMismatch("functional and state use different realizations".into()));
        }
        Ok(())
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Marginal `m(q_i) = Σ_j ρ(q_i, p_j) h_q h_p`.
fn q_marginal(grid: &GridSpec, rho: &Field) -> Vec<f64> {
    (0..grid.n_q).map(|i| rho.row(i).sum() * grid.cell_area()).collect()
}

/// `γ(t, ρ)` as a complex number; the imaginary part vanishes for metric-Hermitian input.
pub fn gamma_eval_complex(spec: &HamiltonianFunctionalSpec, rho: &StateDensity, t: f64) -> Result<C64> {
    spec.ensure_same(rho)?;
    match (&spec.terms, &rho.data) {
        (Terms::Quantum(ws), Element::Quantum(r)) => {
            let mut total = C64::new(0.0, 0.0);
            for (idx, w) in ws.iter().enumerate() {
                let m = idx + 1;
                let densities = vec![r.clone(); m];
                let scalar = partial_contract(w, &densities)?.matrix[(0, 0)];
                total += scalar * (spec.coefficient(m, t) / factorial(m));
            }
            Ok(total)
        }
        (Terms::Classical { one_body, pair }, Element::Classical(r)) => {
            let grid = spec.realization.grid().expect("classical");
            let mut total = r.component_mul(one_body).sum() * grid.cell_area() * spec.coefficient(1, t);
            if let Some(k) = pair {
                let m = q_marginal(grid, r);
                let mut quad = 0.0;
                for i in 0..grid.n_q {
                    for j in 0..grid.n_q {
                        quad += m[i] * k[(i, j)] * m[j];
                    }
                }
                total += 0.5 * quad * spec.coefficient(2, t);
            }
            Ok(C64::new(total, 0.0))
        }
        _ => Err(Error::RealizationMismatch("functional and state use different realizations".into())),
    }
}

/// `γ(t, ρ)`.
pub fn gamma_eval(spec: &HamiltonianFunctionalSpec, rho: &StateDensity, t: f64) -> Result<f64> {
    let z = gamma_eval_complex(spec, rho, t)?;
    if z.im.abs() > 1e-10 * z.re.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "γ has imaginary part {:.3e}; the state is not metric-Hermitian",
            z.im
        )));
    }
    Ok(z.re)
}

/// The mean-field Hamiltonian `H(t, ρ) = δγ(t, ρ) = Σ_{m<N} s_{m+1}(t)/m! ⟨ρ^⊗m, W^(m+1)⟩`.
pub fn vlasov_hamiltonian(spec: &HamiltonianFunctionalSpec, rho: &StateDensity, t: f64) -> Result<Element> {
    spec.ensure_same(rho)?;
    match (&spec.terms, &rho.data) {
        (Terms::Quantum(ws), Element::Quantum(r)) => {
            let d = r.nrows();
            let mut h = CMatrix::zeros(d, d);
            for (m, w) in ws.iter().enumerate() {
                let densities = vec![r.clone(); m];
                let part = partial_contract(w, &densities)?;
                h += part.matrix.scale(spec.coefficient(m + 1, t) / factorial(m));
            }
            Ok(Element::Quantum(h))
        }
        (Terms::Classical { one_body, pair }, Element::Classical(r)) => {
            let grid = spec.realization.grid().expect("classical");
            let mut h = one_body * spec.coefficient(1, t);
            if let Some(k) = pair {
                let m = q_marginal(grid, r);
                let s = spec.coefficient(2, t);
                for i in 0..grid.n_q {
                    let potential: f64 = (0..grid.n_q).map(|j| k[(i, j)] * m[j]).sum::<f64>() * s;
                    for col in 0..grid.n_p {
                        h[(i, col)] += potential;
                    }
                }
            }
            Ok(Element::Classical(h))
        }
        _ => Err(Error::RealizationMismatch("functional and state use different realizations".into())),
    }
}

/// `{γ, α}(ρ) = ⟨ρ, {δγ(ρ), δα(ρ)}⟩`.
pub fn classical_bracket_functionals(
    gamma: &HamiltonianFunctionalSpec,
    alpha: &HamiltonianFunctionalSpec,
    rho: &StateDensity,
    t: f64,
) -> Result<C64> {
    if gamma.realization != alpha.realization {
        return Err(Error::RealizationMismatch("functionals use different realizations".into()));
    }
    let dg = vlasov_hamiltonian(gamma, rho, t)?;
    let da = vlasov_hamiltonian(alpha, rho, t)?;
    let bracket = poisson(&rho.realization, &dg, &da)?;
    pairing(rho, &bracket)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::tensor::kron_matrices;

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
    fn diagonal_gamma_and_hamiltonian() {
        let spec = sigma_spec();
        let up = StateDensity::pure(&Metric::identity(2), &[c(1.0), c(0.0)]).unwrap();
        assert!((gamma_eval(&spec, &up, 0.0).unwrap() - 1.5).abs() < 1e-15);
        let h = vlasov_hamiltonian(&spec, &up, 0.0).unwrap();
        assert!(frobenius(&(h.as_matrix().unwrap() - sz().scale(2.0))) < 1e-15);
        let zero = StateDensity::quantum(&Metric::identity(2), CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(gamma_eval(&spec, &zero, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_hamiltonian_ignores_state() {
        let mut rng = random::rng(5);
        let w1 = random::hermitian(&mut rng, 3);
        let spec = HamiltonianFunctionalSpec::quantum(Metric::identity(3), vec![w1.clone()]).unwrap();
        let rho = StateDensity::quantum(&Metric::identity(3), random::hermitian(&mut rng, 3)).unwrap();
        let h = vlasov_hamiltonian(&spec, &rho, 0.0).unwrap();
        assert!(frobenius(&(h.as_matrix().unwrap() - w1)) < 1e-15);
    }

    #[test]
    fn rejects_asymmetric_and_non_hermitian_terms() {
        let id = CMatrix::identity(2, 2);
        let lopsided = kron_matrices(&sz(), &id);
        let err = HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![sz(), lopsided]).unwrap_err();
        assert!(matches!(err, Error::NotPermutationSymmetric { .. }));
        let raising = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let err = HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![raising]).unwrap_err();
        assert!(matches!(err, Error::NotPseudoHermitian { .. }));
        assert!(HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![]).is_err());
    }

    #[test]
    fn modulation_scales_terms() {
        let spec = sigma_spec()
            .with_modulation(2, Modulation::Harmonic { amplitude: 0.5, frequency: 2.0, phase: 0.0 })
            .unwrap();
        let up = StateDensity::pure(&Metric::identity(2), &[c(1.0), c(0.0)]).unwrap();
        let t: f64 = 0.3;
        let expect = 1.0 + 0.5 * (1.0 + 0.5 * (2.0 * t).sin());
        assert!((gamma_eval(&spec, &up, t).unwrap() - expect).abs() < 1e-14);
        let frozen = spec.frozen_at(t);
        assert!(!frozen.is_time_dependent());
        assert!((gamma_eval(&frozen, &up, 123.0).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn pauli_linear_bracket() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let y = CMatrix::from_row_slice(2, 2, &[c(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), c(0.0)]);
        let g = HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![x]).unwrap();
        let a = HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![y]).unwrap();
        let up = StateDensity::pure(&Metric::identity(2), &[c(1.0), c(0.0)]).unwrap();
        let v = classical_bracket_functionals(&g, &a, &up, 0.0).unwrap();
        assert!((v - c(-2.0)).norm() < 1e-14);
    }

    #[test]
    fn classical_pair_kernel_potential() {
        let grid = GridSpec::new((0.0, 1.0, 8, true), (-1.0, 1.0, 8, false)).unwrap();
        let kernel = DMatrix::from_fn(8, 8, |i, j| if i == j { 2.0 } else { 0.0 });
        let spec = HamiltonianFunctionalSpec::classical(grid, grid.zeros(), Some(kernel)).unwrap();
        let rho = StateDensity::classical(&grid, Field::from_element(8, 8, 0.5)).unwrap();
        // marginal = 8 · 0.5 · h_q h_p = 0.125 per row; potential = 2 · 0.125
        let h = vlasov_hamiltonian(&spec, &rho, 0.0).unwrap();
        assert!(h.as_field().unwrap().iter().all(|v| (v - 0.25).abs() < 1e-15));
        let g = gamma_eval(&spec, &rho, 0.0).unwrap();
        assert!((g - 0.5 * 8.0 * 2.0 * 0.125 * 0.125).abs() < 1e-15);
    }
}
