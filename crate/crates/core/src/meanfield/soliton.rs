use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::euclidean_distance;
use super::stationary::{hartree_fixed_point, hartree_operator};
use crate::algebra::{gamma_eval, HamiltonianFunctionalSpec, StateDensity};
use crate::dynamics::{hartree_evolve, TimeGrid, Trajectory};
use crate::tensor::{
    commutator, expm, frobenius, hermitian_eigh, max_abs, CMatrix, CVector, Metric, MetricClass, Parity, SectorBasis,
    C64,
};
use crate::uniformize::sector_hamiltonian;
use crate::{Error, Result};

pub const COMMUTING_TOL: f64 = 1e-12;
const EXTREMAL_TOL: f64 = 1e-10;
const EXTREMAL_MAX_ITER: usize = 10_000;
const EIGEN_GROUP_TOL: f64 = 1e-8;
/// Relative step of the centered difference of `h` along the ray `s·p`.
pub const RAY_STEP: f64 = 1e-3;

/// Where the ground value `h(p)` of `γ` on a constraint set comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `γ` at the constrained extremal reached from the problem's state.
    MeanField,
    /// `ε` times the lowest energy of `H^(n)` at `n = p₀/ε` on the joint
    /// eigenspace of the number observables of the further integrals.
    Sectors,
}

/// A constrained extremal problem: integrals `P₀ = I, P₁, …` and a state `φ`
/// with its Lagrange multipliers.
#[derive(Clone, Debug)]
pub struct SolitonProblem {
    pub spec: HamiltonianFunctionalSpec,
    pub integrals: Vec<CMatrix>,
    pub targets: Vec<f64>,
    pub phi: CVector,
    pub multipliers: Vec<f64>,
    pub profile: Profile,
}

fn euclidean_spec(spec: &HamiltonianFunctionalSpec) -> Result<Metric> {
    let metric = spec
        .metric()
        .cloned()
        .ok_or_else(|| Error::RealizationMismatch("soliton problems need a quantum functional".into()))?;
    if metric.class() != MetricClass::Identity {
        return Err(Error::InvalidArgument("soliton problems are posed with the Euclidean metric".into()));
    }
    Ok(metric)
}

fn with_identity(d: usize, extra: Vec<CMatrix>) -> Result<Vec<CMatrix>> {
    let mut integrals = vec![CMatrix::identity(d, d)];
    for p in extra {
        if p.nrows() != d || p.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.nrows() });
        }
        if max_abs(&(&p - p.adjoint())) > 1e-12 * frobenius(&p).max(1.0) {
            return Err(Error::NotPseudoHermitian { residual: max_abs(&(&p - p.adjoint())) });
        }
        integrals.push(p);
    }
    for a in &integrals {
        for b in &integrals {
            let c = max_abs(&commutator(a, b));
            if c > COMMUTING_TOL {
                return Err(Error::InvalidArgument(format!("integrals do not commute (|[P_i, P_j]| = {c:.3e})")));
            }
        }
    }
    Ok(integrals)
}

fn expectations(integrals: &[CMatrix], phi: &CVector) -> Vec<f64> {
    integrals.iter().map(|p| phi.dotc(&(p * phi)).re).collect()
}

/// Real least-squares `ν` (minimum norm) for `H φ ≈ Σ ν_j P_j φ`, and the residual.
pub fn lagrange_multipliers(h: &CMatrix, integrals: &[CMatrix], phi: &CVector) -> (Vec<f64>, f64) {
    let d = phi.len();
    let k = integrals.len();
    let hphi = h * phi;
    let cols: Vec<CVector> = integrals.iter().map(|p| p * phi).collect();
    let a = DMatrix::from_fn(2 * d, k, |r, c| if r < d { cols[c][r].re } else { cols[c][r - d].im });
    let b = DVector::from_fn(2 * d, |r, _| if r < d { hphi[r].re } else { hphi[r - d].im });
    let scale = a.abs().max().max(1.0);
    let nu = a.svd(true, true).solve(&b, 1e-12 * scale).expect("both factors computed");
    let mut fit = CVector::zeros(d);
    for (j, col) in cols.iter().enumerate() {
        fit += col * C64::new(nu[j], 0.0);
    }
    (nu.iter().copied().collect(), (hphi - fit).norm())
}

/// Move `φ` back onto `{φ*P_jφ = p_j}` along `Σ c_j P_j φ` by Newton steps.
fn retract(integrals: &[CMatrix], targets: &[f64], phi: &CVector) -> Result<CVector> {
    let k = integrals.len();
    let mut psi = phi.clone();
    for _ in 0..100 {
        let values = expectations(integrals, &psi);
        let defect = DVector::from_fn(k, |j, _| values[j] - targets[j]);
        if defect.amax() <= 1e-14 * targets.iter().fold(1.0f64, |m, t| m.max(t.abs())) {
            return Ok(psi);
        }
        let dirs: Vec<CVector> = integrals.iter().map(|p| p * &psi).collect();
        let jac = DMatrix::from_fn(k, k, |i, j| 2.0 * psi.dotc(&(&integrals[i] * &dirs[j])).re);
        let scale = jac.abs().max().max(1.0);
        let step = jac.svd(true, true).solve(&(-defect), 1e-12 * scale).expect("both factors computed");
        for (j, dir) in dirs.iter().enumerate() {
            psi += dir * C64::new(step[j], 0.0);
        }
    }
    Err(Error::NumericalGuard("could not restore the constraint values".into()))
}

/// An extremal of `γ` on `{φ*P_jφ = p_j}`. With only `P₀ = I` this is the
/// self-consistent fixed point; otherwise projected gradient descent with
/// retraction onto the constraint set.
pub fn constrained_extremal(
    spec: &HamiltonianFunctionalSpec,
    integrals: &[CMatrix],
    targets: &[f64],
    seed: &CVector,
) -> Result<(CVector, Vec<f64>)> {
    let metric = euclidean_spec(spec)?;
    if integrals.len() != targets.len() || integrals.is_empty() {
        return Err(Error::InvalidArgument("one target value per integral is required".into()));
    }
    if integrals.len() == 1 {
        let fp = hartree_fixed_point(spec, targets[0], seed)?;
        return Ok((fp.phi, vec![fp.omega]));
    }
    let mut phi = retract(integrals, targets, seed)?;
    let mut history = Vec::new();
    for _ in 0..EXTREMAL_MAX_ITER {
        let h = hartree_operator(spec, &metric, &phi)?;
        let (nu, residual) = lagrange_multipliers(&h, integrals, &phi);
        history.push(residual);
        if residual <= EXTREMAL_TOL {
            return Ok((phi, nu));
        }
        let mut grad = &h * &phi;
        for (j, p) in integrals.iter().enumerate() {
            grad -= p * &phi * C64::new(nu[j], 0.0);
        }
        let tau = 0.5 / (frobenius(&h) + 1.0);
        phi = retract(integrals, targets, &(&phi - grad * C64::new(tau, 0.0)))?;
    }
    let residual = history.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::NoConvergence { iterations: EXTREMAL_MAX_ITER, residual, history })
}

impl SolitonProblem {
    /// A problem around a given state; `extra` are the integrals beyond `P₀ = I`.
    pub fn new(spec: HamiltonianFunctionalSpec, extra: Vec<CMatrix>, phi: CVector) -> Result<Self> {
        let metric = euclidean_spec(&spec)?;
        if phi.len() != metric.d() {
            return Err(Error::DimensionMismatch { expected: metric.d(), got: phi.len() });
        }
        let integrals = with_identity(metric.d(), extra)?;
        let targets = expectations(&integrals, &phi);
        let h = hartree_operator(&spec, &metric, &phi)?;
        let (multipliers, _) = lagrange_multipliers(&h, &integrals, &phi);
        Ok(Self { spec, integrals, targets, phi, multipliers, profile: Profile::MeanField })
    }

    /// A problem whose state is the constrained extremal reached from `seed`.
    pub fn solve(
        spec: HamiltonianFunctionalSpec,
        extra: Vec<CMatrix>,
        targets: &[f64],
        seed: &CVector,
    ) -> Result<Self> {
        let metric = euclidean_spec(&spec)?;
        let integrals = with_identity(metric.d(), extra)?;
        let (phi, _) = constrained_extremal(&spec, &integrals, targets, seed)?;
        let extra = integrals[1..].to_vec();
        Self::new(spec, extra, phi)
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.profile = profile;
        self
    }

    pub fn d(&self) -> usize {
        self.phi.len()
    }

    /// `‖H(φφ*)φ − Σ ν_j P_j φ‖`.
    pub fn residual(&self) -> Result<f64> {
        let h = hartree_operator(&self.spec, &Metric::identity(self.d()), &self.phi)?;
        Ok(lagrange_multipliers(&h, &self.integrals, &self.phi).1)
    }

    /// The ground value `h(p)` of `γ` on the constraint set `p`.
    pub fn profile_value(&self, p: &[f64], epsilon: f64) -> Result<f64> {
        if p.len() != self.integrals.len() {
            return Err(Error::DimensionMismatch { expected: self.integrals.len(), got: p.len() });
        }
        match self.profile {
            Profile::MeanField => {
                let seed = &self.phi * C64::new((p[0] / self.targets[0]).sqrt(), 0.0);
                let (phi, _) = constrained_extremal(&self.spec, &self.integrals, p, &seed)?;
                let metric = Metric::identity(self.d());
                gamma_eval(&self.spec, &StateDensity::pure(&metric, phi.as_slice())?, 0.0)
            }
            Profile::Sectors => self.sector_profile(p, epsilon),
        }
    }

    fn sector_profile(&self, p: &[f64], epsilon: f64) -> Result<f64> {
        let n_real = p[0] / epsilon;
        let n = n_real.round();
        if n < 0.0 || (n_real - n).abs() > 1e-9 * n_real.max(1.0) {
            return Err(Error::InvalidArgument(format!("p₀ = {} is not a multiple of ε = {epsilon}", p[0])));
        }
        let n = n as usize;
        let h = sector_hamiltonian(&self.spec, n, epsilon, Parity::Boson, 0.0)?;
        if self.integrals.len() == 1 {
            let (vals, _) = hermitian_eigh(&h.matrix);
            return Ok(epsilon * vals[0]);
        }
        let basis = SectorBasis::new(self.d(), n, Parity::Boson);
        let numbers = self.integrals[1..]
            .iter()
            .map(|q| crate::tensor::second_quantize(q, 1, &basis))
            .collect::<Result<Vec<_>>>()?;
        let wanted: Vec<f64> = p[1..].iter().map(|v| v / epsilon).collect();
        let groups = joint_eigenbasis(&numbers);
        for (values, q) in groups {
            if values.iter().zip(&wanted).all(|(a, b)| (a - b).abs() <= EIGEN_GROUP_TOL * b.abs().max(1.0)) {
                let (vals, _) = hermitian_eigh(&(q.adjoint() * &h.matrix * &q));
                return Ok(epsilon * vals[0]);
            }
        }
        Err(Error::InvalidArgument(format!("no joint eigenspace of the integrals at p = {p:?}")))
    }

    /// `exp(−i Σ ν_j P_j (t − t0)) φ` on the grid.
    pub fn soliton_trajectory(&self, grid: &TimeGrid) -> Result<Trajectory<CVector>> {
        grid.validate()?;
        let mut generator = CMatrix::zeros(self.d(), self.d());
        for (p, nu) in self.integrals.iter().zip(&self.multipliers) {
            generator += p * C64::new(*nu, 0.0);
        }
        let metric = Metric::identity(self.d());
        let mut traj = Trajectory::default();
        for step in 0..=grid.steps() {
            if grid.stores(step) {
                let t = grid.time(step);
                let u = expm(&(&generator * C64::new(0.0, -(t - grid.t0))));
                let psi = u * &self.phi;
                let gamma = gamma_eval(&self.spec, &StateDensity::pure(&metric, psi.as_slice())?, t)?;
                traj.push(t, psi.clone(), psi.norm_squared(), gamma);
            }
        }
        Ok(traj)
    }
}

/// Joint eigenspaces of commuting Hermitian matrices: eigenvalue tuples with an
/// orthonormal column basis of each common eigenspace, in order of first appearance.
pub fn joint_eigenbasis(ops: &[CMatrix]) -> Vec<(Vec<f64>, CMatrix)> {
    let dim = ops.first().map(|o| o.nrows()).unwrap_or(0);
    let mut combo = CMatrix::zeros(dim, dim);
    for (k, op) in ops.iter().enumerate() {
        // Incommensurate weights split every joint eigenspace from its neighbours.
        combo += op * C64::new(1.0 + (k as f64 + 2.0).sqrt() * PI.sqrt() * 0.1, 0.0);
    }
    let (_, vecs) = hermitian_eigh(&combo);
    let mut groups: Vec<(Vec<f64>, Vec<CVector>)> = Vec::new();
    for c in 0..dim {
        let v = vecs.column(c).into_owned();
        let values: Vec<f64> = ops.iter().map(|o| v.dotc(&(o * &v)).re).collect();
        match groups.iter_mut().find(|(vals, _)| {
            vals.iter().zip(&values).all(|(a, b)| (a - b).abs() <= EIGEN_GROUP_TOL * a.abs().max(1.0))
        }) {
            Some((_, cols)) => cols.push(v),
            None => groups.push((values, vec![v])),
        }
    }
    groups.into_iter().map(|(vals, cols)| (vals, CMatrix::from_columns(&cols))).collect()
}

/// What [`generalized_soliton_check`] measured.
#[derive(Clone, Debug, PartialEq)]
pub struct SolitonReport {
    pub residual: f64,
    pub multipliers: Vec<f64>,
    /// `Σ ν_j p_j`, the derivative of `h` along the ray `s·p` predicted by the multipliers.
    pub ray_derivative: f64,
    /// Centered difference of `h(s·p)` at `s = 1`.
    pub ray_derivative_fd: f64,
    /// `∂h/∂p₀` by centered differences when `P₀` is the only integral.
    pub fd_multipliers: Option<Vec<f64>>,
    pub max_deviation: f64,
    pub deviations: Vec<(f64, f64)>,
}

/// Extremal residual, multipliers against differences of `h`, and the largest
/// distance between the phase formula and the Hartree flow of `φ`.
pub fn generalized_soliton_check(problem: &SolitonProblem, grid: &TimeGrid) -> Result<SolitonReport> {
    let residual = problem.residual()?;
    let ray_derivative: f64 = problem.multipliers.iter().zip(&problem.targets).map(|(n, p)| n * p).sum();
    let scaled = |s: f64| problem.targets.iter().map(|p| p * s).collect::<Vec<_>>();
    let mean_field = SolitonProblem { profile: Profile::MeanField, ..problem.clone() };
    let up = mean_field.profile_value(&scaled(1.0 + RAY_STEP), 0.0)?;
    let down = mean_field.profile_value(&scaled(1.0 - RAY_STEP), 0.0)?;
    let ray_derivative_fd = (up - down) / (2.0 * RAY_STEP);
    let fd_multipliers =
        if problem.integrals.len() == 1 { Some(vec![ray_derivative_fd / problem.targets[0]]) } else { None };
    let hartree = hartree_evolve(&problem.spec, &problem.phi, grid)?;
    let soliton = problem.soliton_trajectory(grid)?;
    let deviations: Vec<(f64, f64)> = hartree
        .times
        .iter()
        .zip(hartree.states.iter().zip(&soliton.states))
        .map(|(&t, (a, b))| (t, euclidean_distance(a, b)))
        .collect();
    let max_deviation = deviations.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(SolitonReport {
        residual,
        multipliers: problem.multipliers.clone(),
        ray_derivative,
        ray_derivative_fd,
        fd_multipliers,
        max_deviation,
        deviations,
    })
}

/// `ψ_p(t) = exp{−(i/ε)(h(p + εP) − h(p))(t − t0)} φ_p`, with `h(p + εP)`
/// applied on the joint eigenspaces of the integrals.
pub fn epsilon_soliton(problem: &SolitonProblem, epsilon: f64, grid: &TimeGrid) -> Result<Trajectory<CVector>> {
    grid.validate()?;
    if problem.spec.is_time_dependent() {
        return Err(Error::InvalidArgument("ε-solitons need a time-independent functional".into()));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let h0 = problem.profile_value(&problem.targets, epsilon)?;
    let mut cache: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    let mut components = Vec::new();
    let groups = if problem.integrals.len() == 1 {
        vec![(Vec::new(), CMatrix::identity(problem.d(), problem.d()))]
    } else {
        joint_eigenbasis(&problem.integrals[1..])
    };
    for (pi, q) in groups {
        let part = &q * (q.adjoint() * &problem.phi);
        if part.norm() < 1e-14 {
            continue;
        }
        let shifted: Vec<f64> = std::iter::once(1.0)
            .chain(pi.iter().copied())
            .zip(&problem.targets)
            .map(|(v, p)| p + epsilon * v)
            .collect();
        let key: Vec<u64> = shifted.iter().map(|v| v.to_bits()).collect();
        let h1 = match cache.get(&key) {
            Some(&v) => v,
            None => {
                let v = problem
                    .profile_value(&shifted, epsilon)
                    .map_err(|e| Error::InvalidArgument(format!("state has weight where h is not sampled ({e})")))?;
                cache.insert(key, v);
                v
            }
        };
        components.push(((h1 - h0) / epsilon, part));
    }
    let metric = Metric::identity(problem.d());
    let mut traj = Trajectory::default();
    for step in 0..=grid.steps() {
        if grid.stores(step) {
            let t = grid.time(step);
            let mut psi = CVector::zeros(problem.d());
            for (freq, part) in &components {
                psi += part * C64::from_polar(1.0, -freq * (t - grid.t0));
            }
            let gamma = gamma_eval(&problem.spec, &StateDensity::pure(&metric, psi.as_slice())?, t)?;
            traj.push(t, psi.clone(), psi.norm_squared(), gamma);
        }
    }
    Ok(traj)
}

/// Lattice momentum on a ring of `L` sites: `Σ_k κ_k |f_k⟩⟨f_k|`, with plane
/// waves `f_k(x) = e^{2πikx/L}/√L` and `κ_k = k` folded into `(−L/2, L/2]`.
pub fn lattice_momentum(l: usize) -> CMatrix {
    let mut p = CMatrix::zeros(l, l);
    for k in 0..l {
        let kappa = if 2 * k <= l { k as f64 } else { k as f64 - l as f64 };
        let f = plane_wave(l, k, 1.0);
        p += &f * f.adjoint() * C64::new(kappa, 0.0);
    }
    p
}

/// `√(ν/L) e^{2πikx/L}`.
pub fn plane_wave(l: usize, k: usize, nu: f64) -> CVector {
    let amp = (nu / l as f64).sqrt();
    CVector::from_fn(l, |x, _| C64::from_polar(amp, 2.0 * PI * (k * x) as f64 / l as f64))
}
