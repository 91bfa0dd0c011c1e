use super::{CMatrix, MetricClass, Operator, Tolerances, C64};
use crate::{Error, Result};

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `(A + A†) / 2`.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors as the matching columns. Only the Hermitian part is used.
pub fn hermitian_eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = hermitize(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// General matrix exponential (scaling and squaring with Padé approximants).
pub fn expm(a: &CMatrix) -> CMatrix {
    if a.nrows() == 0 {
        return a.clone();
    }
    a.exp()
}

fn exp_hermitian(h: &CMatrix, dt: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigh(h);
    let phases = CMatrix::from_fn(values.len(), values.len(), |r, c| {
        if r == c {
            C64::from_polar(1.0, -values[r] * dt)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    &vectors * phases * vectors.adjoint()
}

fn abs_sqrt(j: &CMatrix) -> (CMatrix, CMatrix) {
    let n = j.nrows();
    let is_diag = (0..n).all(|r| (0..n).all(|c| r == c || j[(r, c)].norm() == 0.0));
    if is_diag {
        let s =
            CMatrix::from_fn(
                n,
                n,
                |r, c| if r == c { C64::new(j[(r, r)].re.abs().sqrt(), 0.0) } else { C64::new(0.0, 0.0) },
            );
        let s_inv = CMatrix::from_fn(n, n, |r, c| {
            if r == c {
                C64::new(1.0 / j[(r, r)].re.abs().sqrt(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        return (s, s_inv);
    }
    let (values, vectors) = hermitian_eigh(j);
    let diag = |f: &dyn Fn(f64) -> f64| {
        CMatrix::from_fn(n, n, |r, c| if r == c { C64::new(f(values[r]), 0.0) } else { C64::new(0.0, 0.0) })
    };
    let s = &vectors * diag(&|v| v.abs().sqrt()) * vectors.adjoint();
    let s_inv = &vectors * diag(&|v| 1.0 / v.abs().sqrt()) * vectors.adjoint();
    (s, s_inv)
}

/// `exp(-i H dt)` for a generator that is Hermitian with respect to the metric `j`.
///
/// Definite metrics go through the equivalent Hermitian problem `|J|^½ H |J|^-½`
/// and an eigendecomposition; indefinite metrics use Padé scaling and squaring.
pub fn expm_with_metric(h: &CMatrix, dt: f64, j: &CMatrix, class: MetricClass) -> CMatrix {
    match class {
        MetricClass::Identity => exp_hermitian(h, dt),
        MetricClass::Definite { .. } => {
            let (s, s_inv) = abs_sqrt(j);
            let equivalent = &s * h * &s_inv;
            s_inv * exp_hermitian(&equivalent, dt) * s
        }
        MetricClass::Indefinite => expm(&h.scale(dt).map(|z| C64::new(z.im, -z.re))),
    }
}

pub fn expm_propagator(h: &Operator, dt: f64) -> Result<Operator> {
    expm_propagator_with(h, dt, &Tolerances::default())
}

/// The propagator `U = exp(-i H dt)`, checked to be metric-unitary.
pub fn expm_propagator_with(h: &Operator, dt: f64, tol: &Tolerances) -> Result<Operator> {
    if !dt.is_finite() {
        return Err(Error::InvalidArgument("time step must be finite".into()));
    }
    h.ensure_metric_hermitian(tol.hermiticity)?;
    let j = h.metric.sector_matrix(&h.space)?;
    let class = h.metric.class_on(&h.space);
    let u = expm_with_metric(&h.matrix, dt, &j, class);
    let adj = h.metric.pseudo_adjoint(&u, &h.space)?;
    let dim = u.nrows();
    let residual = max_abs(&(adj * &u - CMatrix::identity(dim, dim)));
    if residual > tol.unitarity {
        return Err(Error::NumericalGuard(format!("propagator lost metric-unitarity (residual {residual:.3e})")));
    }
    Ok(h.with_matrix(u))
}
