//! Time evolution.
//!
//! Nonlinear flows (Hartree, quantum and classical Vlasov) use fixed-step
//! classical Runge–Kutta with conservation monitoring; linear sector flows use
//! exact exponentials, step-wise at midpoints when the functional is modulated.

mod linear;
mod nonlinear;

pub use linear::{heisenberg_evolve, sector_propagate, sector_propagate_modulated};
pub use nonlinear::{classical_vlasov_evolve, hartree_evolve, vlasov_evolve_density, NORM_DRIFT_TOL};

use std::io::Write;

use crate::algebra::Field;
use crate::tensor::{CMatrix, CVector, C64};
use crate::{Error, Result};

/// Uniform time grid `t0, t0 + dt, …, t1`; every `store_every`-th step (and the
/// last) is recorded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub store_every: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, dt: f64, store_every: usize) -> Result<Self> {
        let grid = Self { t0, t1, dt, store_every };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t0.is_finite() && self.t1.is_finite() && self.t1 >= self.t0) {
            return Err(Error::InvalidArgument("time interval must be finite with t1 ≥ t0".into()));
        }
        if self.store_every == 0 {
            return Err(Error::InvalidArgument("store_every must be at least 1".into()));
        }
        let ratio = (self.t1 - self.t0) / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "interval {} is not a whole number of steps of {}",
                self.t1 - self.t0,
                self.dt
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t1 - self.t0) / self.dt).round() as usize
    }

    pub fn time(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.dt
    }

    pub fn stores(&self, step: usize) -> bool {
        step % self.store_every == 0 || step == self.steps()
    }
}

/// States along a time grid with the monitored quantities: the (J-)norm or
/// mass `⟨ρ, I⟩`, and the energy `γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub norms: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl<S> Default for Trajectory<S> {
    fn default() -> Self {
        Self { times: Vec::new(), states: Vec::new(), norms: Vec::new(), gammas: Vec::new() }
    }
}

impl<S> Trajectory<S> {
    pub fn push(&mut self, t: f64, state: S, norm: f64, gamma: f64) {
        self.times.push(t);
        self.states.push(state);
        self.norms.push(norm);
        self.gammas.push(gamma);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&S> {
        self.states.last()
    }

    pub fn max_norm_drift(&self) -> f64 {
        let Some(&first) = self.norms.first() else { return 0.0 };
        self.norms.iter().map(|n| (n - first).abs()).fold(0.0, f64::max)
    }

    pub fn max_gamma_drift(&self) -> f64 {
        let Some(&first) = self.gammas.first() else { return 0.0 };
        self.gammas.iter().map(|g| (g - first).abs()).fold(0.0, f64::max)
    }
}

/// Complex amplitudes written per row of a trajectory export.
pub trait Amplitudes {
    fn amplitudes(&self) -> Vec<C64>;
}

impl Amplitudes for CVector {
    fn amplitudes(&self) -> Vec<C64> {
        self.iter().copied().collect()
    }
}

impl Amplitudes for CMatrix {
    /// Row-major entries.
    fn amplitudes(&self) -> Vec<C64> {
        (0..self.nrows()).flat_map(|r| (0..self.ncols()).map(move |c| self[(r, c)])).collect()
    }
}

impl Amplitudes for Field {
    /// Grid fields are summarized by their monitored quantities only.
    fn amplitudes(&self) -> Vec<C64> {
        Vec::new()
    }
}

/// `{run_id}_{scenario}_{index}.csv`
pub fn trajectory_file_name(run_id: &str, scenario: &str, index: usize) -> String {
    format!("{run_id}_{scenario}_{index}.csv")
}

/// Shortest round-trip-safe decimal form used in every table: 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with columns `t, re_0, im_0, …, jnorm, gamma`.
pub fn write_trajectory_csv<S: Amplitudes, W: Write>(traj: &Trajectory<S>, out: &mut W) -> std::io::Result<()> {
    let width = traj.states.first().map(|s| s.amplitudes().len()).unwrap_or(0);
    let mut header = vec!["t".to_string()];
    for k in 0..width {
        header.push(format!("re_{k}"));
        header.push(format!("im_{k}"));
    }
    header.push("jnorm".into());
    header.push("gamma".into());
    writeln!(out, "{}", header.join(","))?;
    for i in 0..traj.len() {
        let mut row = vec![format_float(traj.times[i])];
        for z in traj.states[i].amplitudes() {
            row.push(format_float(z.re));
            row.push(format_float(z.im));
        }
        row.push(format_float(traj.norms[i]));
        row.push(format_float(traj.gammas[i]));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// `y + a·x` for the state types integrated here.
pub(crate) trait Axpy: Clone {
    fn axpy(&self, a: f64, x: &Self) -> Self;
}

impl Axpy for CVector {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        self + x * C64::new(a, 0.0)
    }
}

impl Axpy for CMatrix {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        self + x * C64::new(a, 0.0)
    }
}

impl Axpy for Field {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        self + x * a
    }
}

/// One classical fourth-order Runge–Kutta step of `dy/dt = f(y, t)`.
pub(crate) fn rk4_step<S: Axpy>(y: &S, t: f64, dt: f64, f: &mut impl FnMut(&S, f64) -> Result<S>) -> Result<S> {
    let k1 = f(y, t)?;
    let k2 = f(&y.axpy(0.5 * dt, &k1), t + 0.5 * dt)?;
    let k3 = f(&y.axpy(0.5 * dt, &k2), t + 0.5 * dt)?;
    let k4 = f(&y.axpy(dt, &k3), t + dt)?;
    Ok(y.axpy(dt / 6.0, &k1).axpy(dt / 3.0, &k2).axpy(dt / 3.0, &k3).axpy(dt / 6.0, &k4))
}
