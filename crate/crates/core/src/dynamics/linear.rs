use super::{TimeGrid, Trajectory};
use crate::algebra::HamiltonianFunctionalSpec;
use crate::tensor::{expm_propagator, CVector, Ket, Operator, Parity};
use crate::uniformize::sector_hamiltonian;
use crate::{Error, Result};

fn energy(h: &Operator, ket: &Ket) -> Result<f64> {
    Ok(ket.metric_inner(&h.apply(ket)?, &h.metric)?.re)
}

fn record(traj: &mut Trajectory<CVector>, t: f64, ket: &Ket, h: &Operator) -> Result<()> {
    traj.push(t, ket.amplitudes.clone(), ket.metric_norm(&h.metric)?, energy(h, ket)?);
    Ok(())
}

/// `ψ(t) = exp(-i H (t - t0)) ψ0`, one exponential per step.
pub fn sector_propagate(h: &Operator, psi0: &Ket, grid: &TimeGrid) -> Result<Trajectory<CVector>> {
    grid.validate()?;
    if psi0.space != h.space {
        return Err(Error::SectorMismatch(format!("{:?} vs {:?}", psi0.space, h.space)));
    }
    let u = expm_propagator(h, grid.dt)?;
    let mut traj = Trajectory::default();
    let mut ket = psi0.clone();
    record(&mut traj, grid.t0, &ket, h)?;
    for step in 1..=grid.steps() {
        ket = u.apply(&ket)?;
        if grid.stores(step) {
            record(&mut traj, grid.time(step), &ket, h)?;
        }
    }
    Ok(traj)
}

/// Sector flow of a modulated functional: each step uses `H^(n)` frozen at the
/// step midpoint. The recorded energy is taken with `H^(n)` at the sample time.
pub fn sector_propagate_modulated(
    spec: &HamiltonianFunctionalSpec,
    epsilon: f64,
    parity: Parity,
    psi0: &Ket,
    grid: &TimeGrid,
) -> Result<Trajectory<CVector>> {
    let n = psi0.space.n;
    if !spec.is_time_dependent() {
        let h = sector_hamiltonian(spec, n, epsilon, parity, grid.t0)?;
        return sector_propagate(&h, psi0, grid);
    }
    grid.validate()?;
    let at = |t: f64| sector_hamiltonian(spec, n, epsilon, parity, t);
    let h0 = at(grid.t0)?;
    if psi0.space != h0.space {
        return Err(Error::SectorMismatch(format!("{:?} vs {:?}", psi0.space, h0.space)));
    }
    let mut traj = Trajectory::default();
    let mut ket = psi0.clone();
    record(&mut traj, grid.t0, &ket, &h0)?;
    for step in 1..=grid.steps() {
        let mid = grid.time(step - 1) + 0.5 * grid.dt;
        ket = expm_propagator(&at(mid)?, grid.dt)?.apply(&ket)?;
        if grid.stores(step) {
            let t = grid.time(step);
            record(&mut traj, t, &ket, &at(t)?)?;
        }
    }
    Ok(traj)
}

/// `A(t) = U^♯ A U` with `U = exp(-i H t)` and `U^♯` the metric adjoint.
pub fn heisenberg_evolve(a: &Operator, h: &Operator, t: f64) -> Result<Operator> {
    if a.space != h.space {
        return Err(Error::SectorMismatch(format!("{:?} vs {:?}", a.space, h.space)));
    }
    let u = expm_propagator(h, t)?;
    let u_sharp = u.pseudo_adjoint()?;
    Ok(a.with_matrix(u_sharp * &a.matrix * &u.matrix))
}
