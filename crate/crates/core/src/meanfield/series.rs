use std::time::Instant;

use super::euclidean_distance;
use crate::algebra::{gamma_eval, HamiltonianFunctionalSpec, StateDensity};
use crate::dynamics::{hartree_evolve, TimeGrid, Trajectory};
use crate::tensor::{expm_propagator, kron_matrices, CMatrix, CVector, Metric, Parity, SectorBasis, C64};
use crate::uniformize::{sector_hamiltonian, UniformizationParams};
use crate::{Error, Result};

/// Largest Poisson weight of the sectors beyond `n_max` that an ε-solution accepts.
pub const TAIL_GUARD: f64 = 1e-6;

/// `V^(n+1)(t, t0) = (U^(n) ⊗ I)⁻¹ U^(n+1)` on `(sector n) ⊗ C^d`, composite index `m·d + x`.
///
/// `U^(n+1)` lives on the (n+1)-sector; it is carried into the product space by
/// the lift `L` and extended by the identity on the metric complement of `L`'s range.
#[derive(Clone, Debug)]
pub struct DisentangledPropagator {
    pub n: usize,
    pub t0: f64,
    pub t: f64,
    pub v: CMatrix,
    /// Isometry from the (n+1)-sector into `(sector n) ⊗ C^d`.
    pub lift: CMatrix,
    /// `J^(n) ⊗ J`.
    pub metric: CMatrix,
}

impl DisentangledPropagator {
    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    /// `max |V^♯V − I|` with `V^♯ = M⁻¹V†M`.
    pub fn unitarity_residual(&self) -> f64 {
        let m_inv = self.metric.clone().try_inverse().expect("metric is invertible");
        let sharp = m_inv * self.v.adjoint() * &self.metric;
        let dim = self.dim();
        crate::tensor::max_abs(&(sharp * &self.v - CMatrix::identity(dim, dim)))
    }
}

/// The sector-n ⊗ single-particle factorization of sector n+1: `L[m·d + x, M] =
/// (±1)ⁿ ⟨m| a_x |M⟩ / √(n+1)`, i.e. the last slot split off.
pub fn sector_lift(lower: &SectorBasis, upper: &SectorBasis) -> Result<CMatrix> {
    if upper.n() != lower.n() + 1 || upper.d() != lower.d() || upper.parity() != lower.parity() {
        return Err(Error::SectorMismatch("lift needs sectors n and n+1 of one parity".into()));
    }
    let d = lower.d();
    let n = lower.n();
    let sign = match lower.parity() {
        Parity::Fermion if n % 2 == 1 => -1.0,
        _ => 1.0,
    };
    let scale = sign / ((n + 1) as f64).sqrt();
    let mut lift = CMatrix::zeros(lower.dim() * d, upper.dim());
    for (col, occ) in upper.states().iter().enumerate() {
        for x in 0..d {
            if let Some((c, rest)) = upper.annihilate(occ, x) {
                let m = lower.index_of(&rest).expect("lower sector holds the remainder");
                lift[(m * d + x, col)] = C64::new(c * scale, 0.0);
            }
        }
    }
    Ok(lift)
}

/// `φ^⊗n` in the symmetric occupation basis: `√(n!/Π m_x!) Π φ_x^{m_x}`.
pub fn symmetric_power_vector(basis: &SectorBasis, phi: &CVector) -> Result<CVector> {
    if basis.parity() != Parity::Boson {
        return Err(Error::InvalidArgument("tensor powers of a single vector vanish on antisymmetric sectors".into()));
    }
    if phi.len() != basis.d() {
        return Err(Error::DimensionMismatch { expected: basis.d(), got: phi.len() });
    }
    let ln_fact = |k: usize| (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
    let n_fact = ln_fact(basis.n());
    Ok(CVector::from_iterator(
        basis.dim(),
        basis.states().iter().map(|occ| {
            let weight = (0.5 * (n_fact - occ.iter().map(|&m| ln_fact(m as usize)).sum::<f64>())).exp();
            occ.iter().enumerate().fold(C64::new(weight, 0.0), |acc, (x, &m)| acc * phi[x].powu(m as u32))
        }),
    ))
}

/// Upper tail `P(N > n_max)` of a Poisson law with the given mean.
pub fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let k0 = n_max + 1;
    let mut ln_term = -mean + k0 as f64 * mean.ln() - (1..=k0).map(|j| (j as f64).ln()).sum::<f64>();
    let mut total = 0.0;
    let mut k = k0;
    loop {
        let term = ln_term.exp();
        total += term;
        k += 1;
        ln_term += mean.ln() - (k as f64).ln();
        if (k as f64) > mean && term < 1e-18 * total.max(1e-300) {
            break;
        }
        if k > k0 + 100_000 {
            break;
        }
    }
    total.min(1.0)
}

/// Sector propagators `U^(n)(t, t0)` at every stored time of the grid: one
/// exponential per time for a constant functional, midpoint-ordered step
/// products for a modulated one.
fn sector_propagators(
    spec: &HamiltonianFunctionalSpec,
    basis: &SectorBasis,
    epsilon: f64,
    grid: &TimeGrid,
) -> Result<Vec<CMatrix>> {
    let n = basis.n();
    let at = |t: f64| sector_hamiltonian(spec, n, epsilon, basis.parity(), t);
    let mut out = Vec::new();
    let dim = basis.dim();
    if !spec.is_time_dependent() {
        let h = at(grid.t0)?;
        for step in 0..=grid.steps() {
            if grid.stores(step) {
                out.push(expm_propagator(&h, grid.time(step) - grid.t0)?.matrix);
            }
        }
        return Ok(out);
    }
    let mut u = CMatrix::identity(dim, dim);
    out.push(u.clone());
    for step in 1..=grid.steps() {
        let mid = grid.time(step - 1) + 0.5 * grid.dt;
        u = expm_propagator(&at(mid)?, grid.dt)?.matrix * u;
        if grid.stores(step) {
            out.push(u.clone());
        }
    }
    Ok(out)
}

fn metric_inverse_of(m: &CMatrix) -> Result<CMatrix> {
    m.clone().try_inverse().ok_or_else(|| Error::NumericalGuard("sector metric is singular".into()))
}

struct Factorization {
    lift: CMatrix,
    lift_sharp: CMatrix,
    composite_metric: CMatrix,
    metric_n: CMatrix,
}

fn factorization(metric: &Metric, lower: &SectorBasis, upper: &SectorBasis) -> Result<Factorization> {
    let lift = sector_lift(lower, upper)?;
    let metric_n = metric.sector_matrix(&lower.space())?;
    let metric_n1 = metric.sector_matrix(&upper.space())?;
    let composite_metric = kron_matrices(&metric_n, metric.matrix());
    let lift_sharp = metric_inverse_of(&metric_n1)? * lift.adjoint() * &composite_metric;
    Ok(Factorization { lift, lift_sharp, composite_metric, metric_n })
}

fn disentangle(f: &Factorization, u_n: &CMatrix, u_n1: &CMatrix, d: usize) -> Result<CMatrix> {
    let dim = f.lift.nrows();
    let range = &f.lift * u_n1 * &f.lift_sharp;
    let complement = CMatrix::identity(dim, dim) - &f.lift * &f.lift_sharp;
    let u_n_inv = metric_inverse_of(u_n)?;
    Ok(kron_matrices(&u_n_inv, &CMatrix::identity(d, d)) * (range + complement))
}

fn quantum_metric(spec: &HamiltonianFunctionalSpec) -> Result<Metric> {
    spec.metric().cloned().ok_or_else(|| Error::RealizationMismatch("ε-solutions need a quantum functional".into()))
}

/// `V^(n+1)(t1, t0)` for the grid's end time.
pub fn build_disentangled(
    spec: &HamiltonianFunctionalSpec,
    n: usize,
    params: &UniformizationParams,
    grid: &TimeGrid,
) -> Result<DisentangledPropagator> {
    grid.validate()?;
    if n + 1 > params.n_max {
        return Err(Error::Truncation { requested: n + 1, n_max: params.n_max });
    }
    let metric = quantum_metric(spec)?;
    let d = metric.d();
    let lower = SectorBasis::new(d, n, params.parity);
    let upper = SectorBasis::new(d, n + 1, params.parity);
    let f = factorization(&metric, &lower, &upper)?;
    let u_n = sector_propagators(spec, &lower, params.epsilon, grid)?.pop().expect("grid stores its end");
    let u_n1 = sector_propagators(spec, &upper, params.epsilon, grid)?.pop().expect("grid stores its end");
    let v = disentangle(&f, &u_n, &u_n1, d)?;
    Ok(DisentangledPropagator { n, t0: grid.t0, t: grid.t1, v, lift: f.lift, metric: f.composite_metric })
}

/// ε-solution trajectory together with the Poisson weight of the neglected sectors.
#[derive(Clone, Debug)]
pub struct EpsilonSolution {
    pub epsilon: f64,
    pub n_max: usize,
    pub tail_weight: f64,
    pub trajectory: Trajectory<CVector>,
}

/// `ψ_ε(t) = e^{−φ*φ/ε} Σ_{n ≤ n_max} C_n(t) / (n! εⁿ)` with
/// `C_n = (⟨φ^⊗n|_J ⊗ I) V^(n+1) φ^⊗(n+1)`.
///
/// The coefficient `1/(n! εⁿ)` is the one for which a vanishing functional
/// returns `φ` unchanged: `e^{−x/ε} Σ (x/ε)ⁿ/n! = 1`.
pub fn epsilon_solution(
    spec: &HamiltonianFunctionalSpec,
    phi: &CVector,
    epsilon: f64,
    n_max: usize,
    grid: &TimeGrid,
) -> Result<EpsilonSolution> {
    grid.validate()?;
    UniformizationParams::bosonic(epsilon, n_max.max(1))?;
    let metric = quantum_metric(spec)?;
    let d = metric.d();
    if phi.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: phi.len() });
    }
    let mass = phi.dotc(&(metric.matrix() * phi)).re;
    let tail_weight = poisson_tail(mass.abs() / epsilon, n_max);
    if tail_weight > TAIL_GUARD {
        return Err(Error::NumericalGuard(format!(
            "Poisson tail beyond n_max = {n_max} is {tail_weight:.3e} (mean {:.3}); raise n_max or ε",
            mass.abs() / epsilon
        )));
    }
    let stored: Vec<f64> = (0..=grid.steps()).filter(|&s| grid.stores(s)).map(|s| grid.time(s)).collect();
    let mut sums = vec![CVector::zeros(d); stored.len()];
    let mut lower = SectorBasis::new(d, 0, Parity::Boson);
    let mut u_lower = sector_propagators(spec, &lower, epsilon, grid)?;
    let mut phi_lower = symmetric_power_vector(&lower, phi)?;
    let mut coeff = 1.0;
    for n in 0..=n_max {
        if n > 0 {
            coeff /= n as f64 * epsilon;
        }
        let upper = SectorBasis::new(d, n + 1, Parity::Boson);
        let u_upper = sector_propagators(spec, &upper, epsilon, grid)?;
        let phi_upper = symmetric_power_vector(&upper, phi)?;
        let f = factorization(&metric, &lower, &upper)?;
        let bra = (f.metric_n.adjoint() * &phi_lower).adjoint();
        let start = &f.lift * &phi_upper;
        for (k, sum) in sums.iter_mut().enumerate() {
            let v = disentangle(&f, &u_lower[k], &u_upper[k], d)?;
            let image = v * &start;
            let mut c_n = CVector::zeros(d);
            for x in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..lower.dim() {
                    acc += bra[(0, m)] * image[m * d + x];
                }
                c_n[x] = acc;
            }
            *sum += c_n * C64::new(coeff, 0.0);
        }
        lower = upper;
        u_lower = u_upper;
        phi_lower = phi_upper;
    }
    let prefactor = C64::new((-mass / epsilon).exp(), 0.0);
    let mut trajectory = Trajectory::default();
    for (t, sum) in stored.into_iter().zip(sums) {
        let psi = sum * prefactor;
        let norm = psi.dotc(&(metric.matrix() * &psi)).re;
        let gamma = gamma_eval(spec, &StateDensity::pure(&metric, psi.as_slice())?, t)?;
        trajectory.push(t, psi, norm, gamma);
    }
    Ok(EpsilonSolution { epsilon, n_max, tail_weight, trajectory })
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub n_max: usize,
    pub t: f64,
    pub error: f64,
    pub tail_weight: f64,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Final-time errors strictly decrease as ε decreases.
    pub monotone: bool,
}

impl ConvergenceTable {
    /// `(ε, error)` at the final time, ε descending.
    pub fn final_errors(&self) -> Vec<(f64, f64)> {
        let t_end = self.rows.iter().map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
        let mut out: Vec<(f64, f64)> =
            self.rows.iter().filter(|r| r.t == t_end).map(|r| (r.epsilon, r.error)).collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }

    /// `log₂(error(ε)/error(ε'))` / `log₂(ε/ε')` between consecutive ε.
    pub fn empirical_orders(&self) -> Vec<f64> {
        self.final_errors().windows(2).map(|w| (w[0].1 / w[1].1).log2() / (w[0].0 / w[1].0).log2()).collect()
    }
}

/// Rows of one ε against a precomputed Hartree reference on the same grid.
pub fn convergence_rows(
    spec: &HamiltonianFunctionalSpec,
    phi: &CVector,
    epsilon: f64,
    n_max: usize,
    grid: &TimeGrid,
    reference: &Trajectory<CVector>,
) -> Result<Vec<ConvergenceRow>> {
    let started = Instant::now();
    let sol = epsilon_solution(spec, phi, epsilon, n_max, grid)?;
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(sol
        .trajectory
        .times
        .iter()
        .zip(&sol.trajectory.states)
        .zip(&reference.states)
        .map(|((&t, psi), href)| ConvergenceRow {
            epsilon,
            n_max,
            t,
            error: euclidean_distance(psi, href),
            tail_weight: sol.tail_weight,
            runtime_ms,
        })
        .collect())
}

/// `‖ψ_ε(t) − ψ_Hartree(t)‖` for each ε, rows ordered by (ε descending, t).
pub fn convergence_study(
    spec: &HamiltonianFunctionalSpec,
    phi: &CVector,
    epsilons: &[f64],
    grid: &TimeGrid,
    n_max: usize,
) -> Result<ConvergenceTable> {
    if epsilons.is_empty() {
        return Ok(ConvergenceTable { rows: Vec::new(), monotone: true });
    }
    let reference = hartree_evolve(spec, phi, grid)?;
    let mut eps = epsilons.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    for e in eps {
        rows.extend(convergence_rows(spec, phi, e, n_max, grid, &reference)?);
    }
    Ok(finish_table(rows))
}

/// Sort rows by (ε descending, t) and set the monotone flag.
pub fn finish_table(mut rows: Vec<ConvergenceRow>) -> ConvergenceTable {
    rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon).then(a.t.total_cmp(&b.t)));
    let mut table = ConvergenceTable { rows, monotone: true };
    table.monotone = table.final_errors().windows(2).all(|w| w[1].1 < w[0].1);
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::tensor::{expm, kron_power, sector_isometry};
    use crate::uniformize::{full_power_hamiltonian, random_spec};

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn two_mode(g: f64, hop: f64) -> HamiltonianFunctionalSpec {
        let w1 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(hop), c(hop), c(-1.0)]);
        let mut w2 = CMatrix::zeros(4, 4);
        w2[(0, 0)] = c(g);
        w2[(3, 3)] = c(g);
        HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![w1, w2]).unwrap()
    }

    fn phi() -> CVector {
        CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)])
    }

    #[test]
    fn lift_is_isometric() {
        for parity in [Parity::Boson, Parity::Fermion] {
            for n in 0..3 {
                let lower = SectorBasis::new(3, n, parity);
                let upper = SectorBasis::new(3, n + 1, parity);
                let l = sector_lift(&lower, &upper).unwrap();
                let gram = l.adjoint() * &l;
                assert!(crate::tensor::max_abs(&(gram - CMatrix::identity(upper.dim(), upper.dim()))) < 1e-14);
            }
        }
    }

    #[test]
    fn symmetric_power_matches_isometry() {
        let p = phi();
        let basis = SectorBasis::new(2, 3, Parity::Boson);
        let s = sector_isometry(2, 3, Parity::Boson).unwrap();
        let full = kron_power(&CMatrix::from_column_slice(2, 1, p.as_slice()), 3).unwrap();
        let expected = s.adjoint() * full;
        let got = symmetric_power_vector(&basis, &p).unwrap();
        assert!((CMatrix::from_column_slice(got.len(), 1, got.as_slice()) - expected).norm() < 1e-14);
    }

    #[test]
    fn non_interacting_factorization() {
        let w1 = CMatrix::from_row_slice(2, 2, &[c(0.3), c(0.5), c(0.5), c(-1.0)]);
        let spec = HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![w1.clone()]).unwrap();
        let grid = TimeGrid::new(0.0, 0.7, 0.7, 1).unwrap();
        let u = expm(&(&w1 * C64::new(0.0, -0.7)));
        for parity in [Parity::Boson, Parity::Fermion] {
            let params = UniformizationParams::new(0.3, 3, parity).unwrap();
            let v = build_disentangled(&spec, 1, &params, &grid).unwrap();
            let expected = kron_matrices(&CMatrix::identity(2, 2), &u) * &v.lift;
            assert!(crate::tensor::max_abs(&(&v.v * &v.lift - expected)) < 1e-12);
            assert!(v.unitarity_residual() < 1e-12);
        }
        let zero = HamiltonianFunctionalSpec::zero(Metric::identity(2));
        let v = build_disentangled(&zero, 2, &UniformizationParams::bosonic(0.5, 3).unwrap(), &grid).unwrap();
        assert!(crate::tensor::max_abs(&(v.v.clone() - CMatrix::identity(v.dim(), v.dim()))) < 1e-14);
    }

    #[test]
    fn factorized_flow_matches_full_power() {
        let mut rng = random::rng(21);
        let spec = random_spec(&mut rng, &Metric::identity(2), 2);
        let eps = 0.4;
        let t = 0.6;
        let n = 2;
        let params = UniformizationParams::bosonic(eps, 3).unwrap();
        let v = build_disentangled(&spec, n, &params, &TimeGrid::new(0.0, t, 0.3, 1).unwrap()).unwrap();
        let p = random::ket(&mut rng, 2);
        let lower = SectorBasis::new(2, n, Parity::Boson);
        let upper = SectorBasis::new(2, n + 1, Parity::Boson);
        let u_n = expm_propagator(&sector_hamiltonian(&spec, n, eps, Parity::Boson, 0.0).unwrap(), t).unwrap();
        let lhs = kron_matrices(&u_n.matrix, &CMatrix::identity(2, 2))
            * &v.v
            * &v.lift
            * symmetric_power_vector(&upper, &p).unwrap();
        let lhs_full = kron_matrices(&sector_isometry(2, n, Parity::Boson).unwrap(), &CMatrix::identity(2, 2)) * lhs;
        let h_full = full_power_hamiltonian(&spec, n + 1, eps, 0.0).unwrap();
        let start = kron_power(&CMatrix::from_column_slice(2, 1, p.as_slice()), n + 1).unwrap();
        let rhs = expm(&(&h_full.matrix * C64::new(0.0, -t))) * start;
        assert!((CMatrix::from_column_slice(lhs_full.len(), 1, lhs_full.as_slice()) - rhs).norm() < 1e-10);
        let _ = lower;
    }

    #[test]
    fn zero_functional_returns_initial_state() {
        let zero = HamiltonianFunctionalSpec::zero(Metric::identity(2));
        let grid = TimeGrid::new(0.0, 1.0, 0.5, 1).unwrap();
        let sol = epsilon_solution(&zero, &phi(), 0.25, 40, &grid).unwrap();
        assert!(sol.tail_weight < 1e-12);
        for psi in &sol.trajectory.states {
            assert!((psi - phi()).norm() < 1e-10);
        }
    }

    #[test]
    fn linear_functional_collapses_to_single_particle_flow() {
        let w1 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.4), c(0.4), c(-1.0)]);
        let spec = HamiltonianFunctionalSpec::quantum(Metric::identity(2), vec![w1.clone()]).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 0.25, 2).unwrap();
        let sol = epsilon_solution(&spec, &phi(), 0.2, 48, &grid).unwrap();
        for (t, psi) in sol.trajectory.times.iter().zip(&sol.trajectory.states) {
            let exact = expm(&(&w1 * C64::new(0.0, -t))) * phi();
            assert!((psi - exact).norm() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn agrees_with_fock_oracle() {
        let spec = two_mode(1.0, 0.5);
        let grid = TimeGrid::new(0.0, 0.5, 0.25, 1).unwrap();
        let sol = epsilon_solution(&spec, &phi(), 0.25, 40, &grid).unwrap();
        let (oracle, tail) = crate::oracles::fock_coherent_evolution(&spec, &phi(), 0.25, 0.5, 40).unwrap();
        assert!(tail < 1e-10 && sol.tail_weight < 1e-10);
        assert!((sol.trajectory.last().unwrap() - oracle).norm() < 1e-8);
    }

    #[test]
    fn tail_guard_and_empty_study() {
        let spec = two_mode(1.0, 0.0);
        let grid = TimeGrid::new(0.0, 0.5, 0.5, 1).unwrap();
        let err = epsilon_solution(&spec, &phi(), 0.05, 10, &grid).unwrap_err();
        assert!(err.is_numerical());
        let table = convergence_study(&spec, &phi(), &[], &grid, 10).unwrap();
        assert!(table.rows.is_empty());
        let mut pmf = (-8.0f64).exp();
        let mut head = pmf;
        for k in 1..=16 {
            pmf *= 8.0 / k as f64;
            head += pmf;
        }
        assert!((poisson_tail(8.0, 16) - (1.0 - head)).abs() < 1e-13);
    }
}
