use crate::algebra::{vlasov_hamiltonian, HamiltonianFunctionalSpec, StateDensity};
use crate::tensor::{hermitian_eigh, CMatrix, CVector, Metric, MetricClass, Operator, Parity, C64};
use crate::uniformize::sector_hamiltonian;
use crate::{Error, Result};

pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITER: usize = 10_000;
const DAMPING: f64 = 0.5;

/// Eigenpairs of an operator that is Hermitian for a positive definite metric
/// `J`, eigenvalues ascending, eigenvectors `J`-orthonormal.
pub fn definite_eigh(h: &CMatrix, j: &CMatrix, class: MetricClass) -> Result<(Vec<f64>, CMatrix)> {
    match class {
        MetricClass::Identity => Ok(hermitian_eigh(h)),
        MetricClass::Definite { sign } if sign > 0.0 => {
            let (vals, vecs) = hermitian_eigh(j);
            let root = |p: f64| {
                let diag = CMatrix::from_diagonal(&CVector::from_iterator(
                    vals.len(),
                    vals.iter().map(|v| C64::new(v.powf(p), 0.0)),
                ));
                &vecs * diag * vecs.adjoint()
            };
            let (s, s_inv) = (root(0.5), root(-0.5));
            let (values, w) = hermitian_eigh(&(&s * h * &s_inv));
            Ok((values, s_inv * w))
        }
        _ => Err(Error::InvalidArgument("ground states need a positive definite metric".into())),
    }
}

/// Lowest eigenvalue of a sector operator.
pub fn ground_energy(op: &Operator) -> Result<f64> {
    let j = op.metric.sector_matrix(&op.space)?;
    let (vals, _) = definite_eigh(&op.matrix, &j, op.metric.class_on(&op.space))?;
    vals.first().copied().ok_or_else(|| Error::InvalidArgument("empty sector".into()))
}

/// A self-consistent stationary state `H(φφ*)φ = ωφ` with `φ*φ = ν`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub phi: CVector,
    pub omega: f64,
    pub nu: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn j_inner(j: &CMatrix, a: &CVector, b: &CVector) -> C64 {
    a.dotc(&(j * b))
}

fn rescale(j: &CMatrix, v: &CVector, nu: f64) -> Result<CVector> {
    let norm = j_inner(j, v, v).re;
    if !(norm > 0.0) {
        return Err(Error::NumericalGuard("iterate has vanishing norm".into()));
    }
    Ok(v * C64::new((nu / norm).sqrt(), 0.0))
}

/// Mean-field Hamiltonian `H(φφ*)` of a pure state.
pub fn hartree_operator(spec: &HamiltonianFunctionalSpec, metric: &Metric, phi: &CVector) -> Result<CMatrix> {
    let h = vlasov_hamiltonian(spec, &StateDensity::pure(metric, phi.as_slice())?, 0.0)?;
    Ok(h.as_matrix().expect("quantum realization").clone())
}

/// Damped self-consistent iteration: `φ ← ½φ + ½v` with `v` the lowest
/// eigenvector of `H(φφ*)` (degenerate levels resolved by overlap with `φ`),
/// phase-aligned and rescaled to `φ*φ = ν`.
pub fn hartree_fixed_point(spec: &HamiltonianFunctionalSpec, nu: f64, seed: &CVector) -> Result<FixedPoint> {
    let metric = spec
        .metric()
        .cloned()
        .ok_or_else(|| Error::RealizationMismatch("fixed points need a quantum functional".into()))?;
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::InvalidArgument(format!("ν must be positive, got {nu}")));
    }
    if seed.len() != metric.d() {
        return Err(Error::DimensionMismatch { expected: metric.d(), got: seed.len() });
    }
    let j = metric.matrix().clone();
    let class = metric.class();
    let mut phi = rescale(&j, seed, nu)?;
    let mut history = Vec::new();
    for iteration in 0..FIXED_POINT_MAX_ITER {
        let h = hartree_operator(spec, &metric, &phi)?;
        let hphi = &h * &phi;
        let omega = j_inner(&j, &phi, &hphi).re / nu;
        let residual = (&hphi - &phi * C64::new(omega, 0.0)).norm();
        history.push(residual);
        if residual <= FIXED_POINT_TOL {
            return Ok(FixedPoint { phi, omega, nu, iterations: iteration, residual });
        }
        let (vals, vecs) = definite_eigh(&h, &j, class)?;
        let tie = 1e-9 * vals[0].abs().max(1.0);
        let mut v = CVector::zeros(phi.len());
        for k in (0..vals.len()).take_while(|&k| vals[k] - vals[0] <= tie) {
            let col = vecs.column(k).into_owned();
            v += &col * j_inner(&j, &col, &phi);
        }
        if v.norm() < 1e-12 {
            v = vecs.column(0).into_owned();
        }
        let overlap = j_inner(&j, &v, &phi);
        if overlap.norm() > 0.0 {
            v *= overlap / overlap.norm();
        }
        let v = rescale(&j, &v, nu)?;
        phi = rescale(&j, &(&phi * C64::new(DAMPING, 0.0) + v * C64::new(1.0 - DAMPING, 0.0)), nu)?;
        if phi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericalGuard("fixed-point iterate became non-finite".into()));
        }
    }
    let residual = history.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::NoConvergence { iterations: FIXED_POINT_MAX_ITER, residual, history })
}

/// Adjacent bosonic sector ground energies at `ε = ν/n` and their difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapPoint {
    pub n: usize,
    pub epsilon: f64,
    pub lambda_n: f64,
    pub lambda_n1: f64,
    pub gap: f64,
}

pub fn spectral_gap_frequency(spec: &HamiltonianFunctionalSpec, nu: f64, n: usize) -> Result<GapPoint> {
    if n == 0 {
        return Err(Error::InvalidArgument("the gap needs n ≥ 1".into()));
    }
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::InvalidArgument(format!("ν must be positive, got {nu}")));
    }
    let epsilon = nu / n as f64;
    let lambda_n = ground_energy(&sector_hamiltonian(spec, n, epsilon, Parity::Boson, 0.0)?)?;
    let lambda_n1 = ground_energy(&sector_hamiltonian(spec, n + 1, epsilon, Parity::Boson, 0.0)?)?;
    Ok(GapPoint { n, epsilon, lambda_n, lambda_n1, gap: lambda_n1 - lambda_n })
}

/// One row of a gap table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapRow {
    pub n: usize,
    pub epsilon: f64,
    pub lambda_n: f64,
    pub lambda_n1: f64,
    pub gap: f64,
    pub omega_hartree: f64,
    pub abs_diff: f64,
}

impl GapRow {
    pub fn new(point: GapPoint, omega: f64) -> Self {
        Self {
            n: point.n,
            epsilon: point.epsilon,
            lambda_n: point.lambda_n,
            lambda_n1: point.lambda_n1,
            gap: point.gap,
            omega_hartree: omega,
            abs_diff: (point.gap - omega).abs(),
        }
    }
}

/// Gaps at each `n` against the frequency of the fixed point reached from `seed`.
pub fn gap_study(spec: &HamiltonianFunctionalSpec, nu: f64, ns: &[usize], seed: &CVector) -> Result<Vec<GapRow>> {
    let fp = hartree_fixed_point(spec, nu, seed)?;
    let mut rows = ns
        .iter()
        .map(|&n| Ok(GapRow::new(spectral_gap_frequency(spec, nu, n)?, fp.omega)))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.n);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn two_mode(g: f64) -> HamiltonianFunctionalSpec {
        let w1 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let mut w2 = CMatrix::zeros(4, 4);
        w2[(0, 0)] = c(g);
        w2[(3, 3)] = c(g);
        HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![w1, w2]).unwrap()
    }

    #[test]
    fn diagonal_fixed_point() {
        let g = 0.7;
        let seed = CVector::from_vec(vec![c(0.3), c(1.0)]);
        let fp = hartree_fixed_point(&two_mode(g), 1.0, &seed).unwrap();
        assert!((fp.omega - (-1.0 + g)).abs() < 1e-9);
        assert!(fp.phi[0].norm() < 1e-9 && (fp.phi[1].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn linear_fixed_point_is_ground_state() {
        let w1 = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let spec = HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![w1]).unwrap();
        let fp = hartree_fixed_point(&spec, 2.0, &CVector::from_vec(vec![c(1.0), c(0.0)])).unwrap();
        assert!((fp.omega + 1.0).abs() < 1e-9);
        assert!((fp.phi[0] + fp.phi[1]).norm() < 1e-9);
    }

    #[test]
    fn diagonal_gap_closed_form() {
        let g = 1.0;
        for n in [2, 4, 8] {
            let p = spectral_gap_frequency(&two_mode(g), 1.0, n).unwrap();
            let eps = 1.0 / n as f64;
            let binom = |k: usize| (k * k.saturating_sub(1)) as f64 / 2.0;
            assert!((p.lambda_n - (-(n as f64) + eps * g * binom(n))).abs() < 1e-10);
            assert!((p.gap - (-1.0 + g)).abs() < 1e-10);
        }
        let w1 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let linear = HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![w1]).unwrap();
        assert!((spectral_gap_frequency(&linear, 3.0, 3).unwrap().gap + 1.0).abs() < 1e-12);
    }
}
