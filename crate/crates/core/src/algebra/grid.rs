use nalgebra::DMatrix;

use crate::{Error, Result};

/// Real field sampled on a phase-space grid; rows index `q`, columns index `p`.
pub type Field = DMatrix<f64>;

/// Uniform tensor grid on a rectangle of the `(q, p)` plane. Points sit at
/// `min + i·h` with `h = (max - min) / n`, so a periodic axis does not repeat
/// its endpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
    pub periodic_q: bool,
    pub periodic_p: bool,
}

pub const MIN_GRID_POINTS: usize = 8;

impl GridSpec {
    pub fn new(q: (f64, f64, usize, bool), p: (f64, f64, usize, bool)) -> Result<Self> {
        let grid = Self {
            q_min: q.0,
            q_max: q.1,
            n_q: q.2,
            periodic_q: q.3,
            p_min: p.0,
            p_max: p.1,
            n_p: p.2,
            periodic_p: p.3,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, lo, hi, n) in [("q", self.q_min, self.q_max, self.n_q), ("p", self.p_min, self.p_max, self.n_p)] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidArgument(format!("{name} range must be finite and increasing")));
            }
            if n < MIN_GRID_POINTS {
                return Err(Error::InvalidArgument(format!(
                    "{name} axis needs at least {MIN_GRID_POINTS} points, got {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn h_q(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_q as f64
    }

    pub fn h_p(&self) -> f64 {
        (self.p_max - self.p_min) / self.n_p as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.h_q() * self.h_p()
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.h_q()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.h_p()
    }

    pub fn zeros(&self) -> Field {
        Field::zeros(self.n_q, self.n_p)
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        Field::from_fn(self.n_q, self.n_p, |i, j| f(self.q(i), self.p(j)))
    }

    pub fn shape_matches(&self, field: &Field) -> bool {
        field.nrows() == self.n_q && field.ncols() == self.n_p
    }

    /// `∂f/∂q` by fourth-order differences.
    pub fn d_dq(&self, f: &Field) -> Field {
        let mut out = self.zeros();
        let mut line = vec![0.0; self.n_q];
        for j in 0..self.n_p {
            for i in 0..self.n_q {
                line[i] = f[(i, j)];
            }
            let d = derivative(&line, self.h_q(), self.periodic_q);
            for i in 0..self.n_q {
                out[(i, j)] = d[i];
            }
        }
        out
    }

    /// `∂f/∂p` by fourth-order differences.
    pub fn d_dp(&self, f: &Field) -> Field {
        let mut out = self.zeros();
        let mut line = vec![0.0; self.n_p];
        for i in 0..self.n_q {
            for j in 0..self.n_p {
                line[j] = f[(i, j)];
            }
            let d = derivative(&line, self.h_p(), self.periodic_p);
            for j in 0..self.n_p {
                out[(i, j)] = d[j];
            }
        }
        out
    }
}

/// Fourth-order first derivative of equally spaced samples. Periodic lines use
/// the centered five-point stencil with wrap-around; open lines switch to
/// one-sided fourth-order stencils on the two points nearest each end.
pub fn derivative(f: &[f64], h: f64, periodic: bool) -> Vec<f64> {
    let n = f.len();
    let scale = 1.0 / (12.0 * h);
    let centered = |m2: f64, m1: f64, p1: f64, p2: f64| (m2 - 8.0 * m1 + 8.0 * p1 - p2) * scale;
    let mut out = vec![0.0; n];
    if periodic {
        for i in 0..n {
            let at = |k: isize| f[((i as isize + k).rem_euclid(n as isize)) as usize];
            out[i] = centered(at(-2), at(-1), at(1), at(2));
        }
        return out;
    }
    for i in 2..n - 2 {
        out[i] = centered(f[i - 2], f[i - 1], f[i + 1], f[i + 2]);
    }
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * scale;
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * scale;
    out[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) * scale;
    out[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * scale;
    out
}
