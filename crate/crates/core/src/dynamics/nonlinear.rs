use super::{rk4_step, TimeGrid, Trajectory};
use crate::algebra::{gamma_eval, vlasov_hamiltonian, Field, HamiltonianFunctionalSpec, StateDensity};
use crate::tensor::{CMatrix, CVector, C64};
use crate::{Error, Result};

/// Largest drift of the (J-)norm or trace over a run before the step is rejected.
pub const NORM_DRIFT_TOL: f64 = 1e-6;

fn quantum_metric(spec: &HamiltonianFunctionalSpec) -> Result<crate::tensor::Metric> {
    spec.metric()
        .cloned()
        .ok_or_else(|| Error::RealizationMismatch("this integrator needs a quantum functional".into()))
}

fn pure_density(metric: &crate::tensor::Metric, psi: &CVector) -> StateDensity {
    StateDensity::pure(metric, psi.as_slice()).expect("dimension checked")
}

fn check_drift(kind: &str, start: f64, now: f64, t: f64) -> Result<()> {
    let drift = (now - start).abs();
    if !drift.is_finite() || drift > NORM_DRIFT_TOL * start.abs().max(1.0) {
        return Err(Error::NumericalGuard(format!("{kind} drifted by {drift:.3e} at t = {t}; reduce the time step")));
    }
    Ok(())
}

/// `i dψ/dt = H(t, ψψ*)ψ` by RK4, recording `ψ*ψ` and `γ(ψψ*)`.
pub fn hartree_evolve(
    spec: &HamiltonianFunctionalSpec,
    psi0: &CVector,
    grid: &TimeGrid,
) -> Result<Trajectory<CVector>> {
    grid.validate()?;
    let metric = quantum_metric(spec)?;
    if psi0.len() != metric.d() {
        return Err(Error::DimensionMismatch { expected: metric.d(), got: psi0.len() });
    }
    let j = metric.matrix().clone();
    let norm = |psi: &CVector| psi.dotc(&(&j * psi)).re;
    let mut rhs = |psi: &CVector, t: f64| -> Result<CVector> {
        let h = vlasov_hamiltonian(spec, &pure_density(&metric, psi), t)?;
        Ok(h.as_matrix().expect("quantum") * psi * C64::new(0.0, -1.0))
    };
    let mut traj = Trajectory::default();
    let mut psi = psi0.clone();
    let n0 = norm(&psi);
    traj.push(grid.t0, psi.clone(), n0, gamma_eval(spec, &pure_density(&metric, &psi), grid.t0)?);
    for step in 1..=grid.steps() {
        let t = grid.time(step - 1);
        psi = rk4_step(&psi, t, grid.dt, &mut rhs)?;
        let now = norm(&psi);
        check_drift("J-norm", n0, now, grid.time(step))?;
        if grid.stores(step) {
            let tn = grid.time(step);
            traj.push(tn, psi.clone(), now, gamma_eval(spec, &pure_density(&metric, &psi), tn)?);
        }
    }
    Ok(traj)
}

/// `dρ/dt = i[ρ, H(t, ρ)]` by RK4, recording `⟨ρ, I⟩` and `γ(ρ)`.
pub fn vlasov_evolve_density(
    spec: &HamiltonianFunctionalSpec,
    rho0: &StateDensity,
    grid: &TimeGrid,
) -> Result<Trajectory<CMatrix>> {
    grid.validate()?;
    quantum_metric(spec)?;
    let start = rho0
        .matrix()
        .ok_or_else(|| Error::RealizationMismatch("quantum Vlasov flow needs a density matrix".into()))?
        .clone();
    if rho0.realization != *spec.realization() {
        return Err(Error::RealizationMismatch("functional and state use different realizations".into()));
    }
    let wrap = |r: &CMatrix| StateDensity {
        realization: rho0.realization.clone(),
        data: crate::algebra::Element::Quantum(r.clone()),
    };
    let mut rhs = |r: &CMatrix, t: f64| -> Result<CMatrix> {
        let h = vlasov_hamiltonian(spec, &wrap(r), t)?;
        let h = h.as_matrix().expect("quantum");
        Ok((r * h - h * r) * C64::new(0.0, 1.0))
    };
    let mut traj = Trajectory::default();
    let mut rho = start;
    let m0 = rho.trace().re;
    traj.push(grid.t0, rho.clone(), m0, gamma_eval(spec, &wrap(&rho), grid.t0)?);
    for step in 1..=grid.steps() {
        rho = rk4_step(&rho, grid.time(step - 1), grid.dt, &mut rhs)?;
        let now = rho.trace().re;
        check_drift("trace", m0, now, grid.time(step))?;
        if grid.stores(step) {
            let tn = grid.time(step);
            traj.push(tn, rho.clone(), now, gamma_eval(spec, &wrap(&rho), tn)?);
        }
    }
    Ok(traj)
}

/// `dρ/dt = {ρ, H(t, ρ)}` on the phase-space grid by RK4, recording mass and `γ`.
///
/// Each step checks `max|∂H/∂p|·dt ≤ h_q` and `max|∂H/∂q|·dt ≤ h_p`.
pub fn classical_vlasov_evolve(
    spec: &HamiltonianFunctionalSpec,
    rho0: &Field,
    grid: &TimeGrid,
) -> Result<Trajectory<Field>> {
    grid.validate()?;
    let phase = *spec
        .realization()
        .grid()
        .ok_or_else(|| Error::RealizationMismatch("classical Vlasov flow needs a classical functional".into()))?;
    let wrap = |f: &Field| StateDensity::classical(&phase, f.clone());
    wrap(rho0)?;
    let hamiltonian = |f: &Field, t: f64| -> Result<Field> {
        Ok(vlasov_hamiltonian(spec, &wrap(f)?, t)?.as_field().expect("classical").clone())
    };
    let mut rhs = |f: &Field, t: f64| -> Result<Field> {
        let h = hamiltonian(f, t)?;
        let dq_h = phase.d_dq(&h);
        let dp_h = phase.d_dp(&h);
        Ok(phase.d_dp(f).component_mul(&dq_h) - phase.d_dq(f).component_mul(&dp_h))
    };
    let mass = |f: &Field| f.sum() * phase.cell_area();
    let mut traj = Trajectory::default();
    let mut rho = rho0.clone();
    traj.push(grid.t0, rho.clone(), mass(&rho), gamma_eval(spec, &wrap(&rho)?, grid.t0)?);
    for step in 1..=grid.steps() {
        let t = grid.time(step - 1);
        let h = hamiltonian(&rho, t)?;
        let vq = phase.d_dp(&h).abs().max() * grid.dt;
        let vp = phase.d_dq(&h).abs().max() * grid.dt;
        if vq > phase.h_q() || vp > phase.h_p() {
            return Err(Error::NumericalGuard(format!(
                "CFL condition violated at t = {t}: |∂H/∂p|·dt = {vq:.3e} (h_q = {:.3e}), |∂H/∂q|·dt = {vp:.3e} (h_p = {:.3e})",
                phase.h_q(),
                phase.h_p()
            )));
        }
        rho = rk4_step(&rho, t, grid.dt, &mut rhs)?;
        if rho.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalGuard(format!("density became non-finite at t = {t}")));
        }
        if grid.stores(step) {
            let tn = grid.time(step);
            traj.push(tn, rho.clone(), mass(&rho), gamma_eval(spec, &wrap(&rho)?, tn)?);
        }
    }
    Ok(traj)
}
