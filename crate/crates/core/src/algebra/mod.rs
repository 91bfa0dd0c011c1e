//! Realizations of the Hamiltonian (Lie–Jordan) algebra and its state space.
//!
//! Two realizations are provided. The quantum one acts on `d × d` complex
//! matrices with Jordan product `(AB + BA)/2` and bracket `{H, A} = i[H, A]`;
//! a non-identity metric `J` makes it the pseudo-Hermitian variant. The
//! classical one acts on real fields over a `(q, p)` grid with the pointwise
//! product and the finite-difference bracket `∂_p H ∂_q A − ∂_q H ∂_p A`.
//!
//! With these signs `dρ/dt = {ρ, H}` is the physical flow in both cases:
//! von Neumann `i[ρ, H]`, and Liouville transport `ρ(q − pt, p)` for `H = p²/2`.

mod functional;
mod grid;

pub use functional::{
    classical_bracket_functionals, gamma_eval, gamma_eval_complex, vlasov_hamiltonian, HamiltonianFunctionalSpec,
    Modulation, MAX_DEGREE,
};
pub use grid::{derivative, Field, GridSpec, MIN_GRID_POINTS};

use crate::tensor::{frobenius, CMatrix, Metric, Operator, SpaceLabel, C64, HERMITICITY_TOL};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Realization {
    Quantum { metric: Metric },
    Classical(GridSpec),
}

impl Realization {
    pub fn quantum(d: usize) -> Self {
        Realization::Quantum { metric: Metric::identity(d) }
    }

    pub fn with_metric(metric: Metric) -> Self {
        Realization::Quantum { metric }
    }

    pub fn classical(grid: GridSpec) -> Self {
        Realization::Classical(grid)
    }

    pub fn metric(&self) -> Option<&Metric> {
        match self {
            Realization::Quantum { metric } => Some(metric),
            Realization::Classical(_) => None,
        }
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        match self {
            Realization::Classical(g) => Some(g),
            Realization::Quantum { .. } => None,
        }
    }

    /// The unit element.
    pub fn identity(&self) -> Element {
        match self {
            Realization::Quantum { metric } => Element::Quantum(CMatrix::identity(metric.d(), metric.d())),
            Realization::Classical(g) => Element::Classical(Field::from_element(g.n_q, g.n_p, 1.0)),
        }
    }

    pub fn zero(&self) -> Element {
        match self {
            Realization::Quantum { metric } => Element::Quantum(CMatrix::zeros(metric.d(), metric.d())),
            Realization::Classical(g) => Element::Classical(g.zeros()),
        }
    }

    pub fn check(&self, a: &Element) -> Result<()> {
        match (self, a) {
            (Realization::Quantum { metric }, Element::Quantum(m)) => {
                if m.nrows() != metric.d() || m.ncols() != metric.d() {
                    return Err(Error::DimensionMismatch { expected: metric.d(), got: m.nrows() });
                }
                Ok(())
            }
            (Realization::Classical(g), Element::Classical(f)) => {
                if !g.shape_matches(f) {
                    return Err(Error::RealizationMismatch(format!(
                        "field of shape {}x{} on a {}x{} grid",
                        f.nrows(),
                        f.ncols(),
                        g.n_q,
                        g.n_p
                    )));
                }
                Ok(())
            }
            _ => Err(Error::RealizationMismatch("quantum and classical elements do not mix".into())),
        }
    }
}

/// An algebra element: a `d × d` matrix or a real grid field.
#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    Quantum(CMatrix),
    Classical(Field),
}

impl Element {
    pub fn as_matrix(&self) -> Option<&CMatrix> {
        match self {
            Element::Quantum(m) => Some(m),
            Element::Classical(_) => None,
        }
    }

    pub fn as_field(&self) -> Option<&Field> {
        match self {
            Element::Classical(f) => Some(f),
            Element::Quantum(_) => None,
        }
    }

    pub fn scale(&self, s: f64) -> Element {
        match self {
            Element::Quantum(m) => Element::Quantum(m.scale(s)),
            Element::Classical(f) => Element::Classical(f * s),
        }
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        match (self, other) {
            (Element::Quantum(a), Element::Quantum(b)) if a.shape() == b.shape() => Ok(Element::Quantum(a + b)),
            (Element::Classical(a), Element::Classical(b)) if a.shape() == b.shape() => Ok(Element::Classical(a + b)),
            _ => Err(Error::RealizationMismatch("cannot add elements of different shapes".into())),
        }
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.add(&other.scale(-1.0))
    }

    /// Frobenius norm (matrix) or Euclidean norm of the samples (field).
    pub fn norm(&self) -> f64 {
        match self {
            Element::Quantum(m) => frobenius(m),
            Element::Classical(f) => f.norm(),
        }
    }
}

/// A state ρ in the predual space. Normalization `⟨ρ, I⟩` is reported, never imposed.
#[derive(Clone, Debug, PartialEq)]
pub struct StateDensity {
    pub realization: Realization,
    pub data: Element,
}

impl StateDensity {
    /// A metric-Hermitian density matrix (`Jρ = ρ†J`).
    pub fn quantum(metric: &Metric, rho: CMatrix) -> Result<Self> {
        let d = metric.d();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: rho.nrows() });
        }
        let op = Operator::new(SpaceLabel::single(d), rho, metric.clone())?;
        op.ensure_metric_hermitian(HERMITICITY_TOL)?;
        Ok(Self { realization: Realization::with_metric(metric.clone()), data: Element::Quantum(op.matrix) })
    }

    /// The rank-one state `ψψ*`.
    pub fn pure(metric: &Metric, psi: &[C64]) -> Result<Self> {
        if psi.len() != metric.d() {
            return Err(Error::DimensionMismatch { expected: metric.d(), got: psi.len() });
        }
        let v = crate::tensor::CVector::from_column_slice(psi);
        let rho = &v * (metric.matrix().adjoint() * &v).adjoint();
        Ok(Self { realization: Realization::with_metric(metric.clone()), data: Element::Quantum(rho) })
    }

    pub fn classical(grid: &GridSpec, field: Field) -> Result<Self> {
        if !grid.shape_matches(&field) {
            return Err(Error::RealizationMismatch("field shape does not match the grid".into()));
        }
        if field.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("density samples must be finite".into()));
        }
        Ok(Self { realization: Realization::Classical(*grid), data: Element::Classical(field) })
    }

    /// `ν(ρ) = ⟨ρ, I⟩`.
    pub fn mass(&self) -> f64 {
        pairing(self, &self.realization.identity()).map(|z| z.re).unwrap_or(f64::NAN)
    }

    pub fn matrix(&self) -> Option<&CMatrix> {
        self.data.as_matrix()
    }

    pub fn field(&self) -> Option<&Field> {
        self.data.as_field()
    }
}

/// `⟨ρ, A⟩`: `Tr(ρA)` or the quadrature `Σ ρ A h_q h_p`.
pub fn pairing(rho: &StateDensity, a: &Element) -> Result<C64> {
    rho.realization.check(a)?;
    match (&rho.data, a) {
        (Element::Quantum(r), Element::Quantum(m)) => {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..r.nrows() {
                for k in 0..r.ncols() {
                    acc += r[(i, k)] * m[(k, i)];
                }
            }
            Ok(acc)
        }
        (Element::Classical(r), Element::Classical(f)) => {
            let g = rho.realization.grid().expect("classical realization");
            Ok(C64::new(r.component_mul(f).sum() * g.cell_area(), 0.0))
        }
        _ => Err(Error::RealizationMismatch("state and observable live in different realizations".into())),
    }
}

/// Jordan product: `(AB + BA)/2` or the pointwise product.
pub fn jordan(realization: &Realization, a: &Element, b: &Element) -> Result<Element> {
    realization.check(a)?;
    realization.check(b)?;
    match (a, b) {
        (Element::Quantum(x), Element::Quantum(y)) => Ok(Element::Quantum((x * y + y * x).scale(0.5))),
        (Element::Classical(x), Element::Classical(y)) => Ok(Element::Classical(x.component_mul(y))),
        _ => unreachable!("checked against the realization"),
    }
}

/// Poisson bracket `{H, A}`: `i[H, A]` or `∂_p H ∂_q A − ∂_q H ∂_p A`.
pub fn poisson(realization: &Realization, h: &Element, a: &Element) -> Result<Element> {
    realization.check(h)?;
    realization.check(a)?;
    match (realization, h, a) {
        (_, Element::Quantum(x), Element::Quantum(y)) => Ok(Element::Quantum((x * y - y * x) * C64::new(0.0, 1.0))),
        (Realization::Classical(g), Element::Classical(x), Element::Classical(y)) => {
            let dp_h = g.d_dp(x);
            let dq_h = g.d_dq(x);
            let dq_a = g.d_dq(y);
            let dp_a = g.d_dp(y);
            Ok(Element::Classical(dp_h.component_mul(&dq_a) - dq_h.component_mul(&dp_a)))
        }
        _ => unreachable!("checked against the realization"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli() -> [CMatrix; 3] {
        [
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
        ]
    }

    #[test]
    fn pauli_products() {
        let r = Realization::quantum(2);
        let [x, y, z] = pauli();
        let jxy = jordan(&r, &Element::Quantum(x.clone()), &Element::Quantum(y.clone())).unwrap();
        assert!(jxy.norm() < 1e-15);
        let b = poisson(&r, &Element::Quantum(x), &Element::Quantum(y)).unwrap();
        let expect = Element::Quantum(z.scale(-2.0));
        assert!(b.sub(&expect).unwrap().norm() < 1e-15);
    }

    #[test]
    fn quantum_pairings() {
        let metric = Metric::identity(2);
        let [_, _, z] = pauli();
        let half = StateDensity::quantum(&metric, CMatrix::identity(2, 2).scale(0.5)).unwrap();
        assert!(pairing(&half, &Element::Quantum(z.clone())).unwrap().norm() < 1e-15);
        let up = StateDensity::pure(&metric, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(pairing(&up, &Element::Quantum(z)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn non_hermitian_density_rejected() {
        let metric = Metric::identity(2);
        let rho = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(StateDensity::quantum(&metric, rho), Err(Error::NotPseudoHermitian { .. })));
    }

    #[test]
    fn mixing_realizations_is_an_error() {
        let g = GridSpec::new((0.0, 1.0, 8, true), (0.0, 1.0, 8, true)).unwrap();
        let q = Realization::quantum(2);
        let field = Element::Classical(g.zeros());
        assert!(matches!(jordan(&q, &field, &field), Err(Error::RealizationMismatch(_))));
    }

    #[test]
    fn classical_products() {
        let g = GridSpec::new((-1.0, 1.0, 16, false), (-2.0, 2.0, 16, false)).unwrap();
        let r = Realization::classical(g);
        let q = Element::Classical(g.sample(|q, _| q));
        let p = Element::Classical(g.sample(|_, p| p));
        let qp = jordan(&r, &q, &p).unwrap();
        assert!(qp.sub(&Element::Classical(g.sample(|q, p| q * p))).unwrap().norm() < 1e-14);
        let kinetic = Element::Classical(g.sample(|_, p| 0.5 * p * p));
        let b = poisson(&r, &kinetic, &q).unwrap();
        assert!(b.sub(&p).unwrap().norm() < 1e-10);
    }

    #[test]
    fn classical_mass_of_uniform_density() {
        let g = GridSpec::new((0.0, 2.0, 16, true), (0.0, 4.0, 16, true)).unwrap();
        let rho = StateDensity::classical(&g, Field::from_element(16, 16, 1.0 / 8.0)).unwrap();
        assert!((rho.mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bracket_with_unit_vanishes() {
        let mut rng = random::rng(3);
        let r = Realization::quantum(3);
        let h = Element::Quantum(random::hermitian(&mut rng, 3));
        assert!(poisson(&r, &h, &r.identity()).unwrap().norm() < 1e-15);
    }
}
