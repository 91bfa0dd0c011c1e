use super::{frobenius, hermitian_eigh, kron_power, sector_power, CMatrix, Sector, SpaceLabel, C64};
use crate::{Error, Result};

/// How the metric restricts to tensor spaces; decides the propagator path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricClass {
    Identity,
    /// `J` or `-J` positive definite.
    Definite {
        sign: f64,
    },
    Indefinite,
}

/// Hermitian invertible single-particle metric `J`.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    j: CMatrix,
    j_inv: CMatrix,
    diagonal: Option<Vec<f64>>,
    class: MetricClass,
}

impl Metric {
    pub fn identity(d: usize) -> Self {
        Self {
            j: CMatrix::identity(d, d),
            j_inv: CMatrix::identity(d, d),
            diagonal: Some(vec![1.0; d]),
            class: MetricClass::Identity,
        }
    }

    /// Diagonal metric `diag(s_1, ..., s_d)`; the canonical case uses `s_k = ±1`.
    pub fn signature(signs: &[f64]) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::InvalidArgument("metric needs at least one entry".into()));
        }
        if signs.iter().any(|s| !s.is_finite() || *s == 0.0) {
            return Err(Error::InvalidArgument("metric signature entries must be finite and nonzero".into()));
        }
        let d = signs.len();
        let j = CMatrix::from_fn(d, d, |r, c| if r == c { C64::new(signs[r], 0.0) } else { C64::new(0.0, 0.0) });
        let j_inv =
            CMatrix::from_fn(d, d, |r, c| if r == c { C64::new(1.0 / signs[r], 0.0) } else { C64::new(0.0, 0.0) });
        let class = if signs.iter().all(|&s| s == 1.0) {
            MetricClass::Identity
        } else if signs.iter().all(|&s| s > 0.0) {
            MetricClass::Definite { sign: 1.0 }
        } else if signs.iter().all(|&s| s < 0.0) {
            MetricClass::Definite { sign: -1.0 }
        } else {
            MetricClass::Indefinite
        };
        Ok(Self { j, j_inv, diagonal: Some(signs.to_vec()), class })
    }

    pub fn from_matrix(j: CMatrix) -> Result<Self> {
        if j.nrows() != j.ncols() || j.nrows() == 0 {
            return Err(Error::InvalidArgument("metric must be a non-empty square matrix".into()));
        }
        let herm = frobenius(&(j.adjoint() - &j));
        if herm > 1e-12 * frobenius(&j).max(1.0) {
            return Err(Error::NotPseudoHermitian { residual: herm });
        }
        let d = j.nrows();
        let is_diag = (0..d).all(|r| (0..d).all(|c| r == c || j[(r, c)].norm() == 0.0));
        if is_diag {
            let signs: Vec<f64> = (0..d).map(|k| j[(k, k)].re).collect();
            return Self::signature(&signs);
        }
        let (values, _) = hermitian_eigh(&j);
        let smallest = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if smallest <= 1e-12 {
            return Err(Error::InvalidArgument("metric must be invertible".into()));
        }
        let j_inv =
            j.clone().try_inverse().ok_or_else(|| Error::InvalidArgument("metric must be invertible".into()))?;
        let class = if values.iter().all(|&v| v > 0.0) {
            MetricClass::Definite { sign: 1.0 }
        } else if values.iter().all(|&v| v < 0.0) {
            MetricClass::Definite { sign: -1.0 }
        } else {
            MetricClass::Indefinite
        };
        Ok(Self { j, j_inv, diagonal: None, class })
    }

    pub fn d(&self) -> usize {
        self.j.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.j
    }

    pub fn inverse(&self) -> &CMatrix {
        &self.j_inv
    }

    pub fn class(&self) -> MetricClass {
        self.class
    }

    pub fn is_identity(&self) -> bool {
        self.class == MetricClass::Identity
    }

    pub fn is_definite(&self) -> bool {
        !matches!(self.class, MetricClass::Indefinite)
    }

    pub fn diagonal(&self) -> Option<&[f64]> {
        self.diagonal.as_deref()
    }

    /// The metric class induced on an `n`-particle space.
    pub fn class_on(&self, space: &SpaceLabel) -> MetricClass {
        match self.class {
            MetricClass::Definite { sign } => MetricClass::Definite { sign: if space.n % 2 == 0 { 1.0 } else { sign } },
            other => other,
        }
    }

    /// `J^⊗n` on the full power, or its restriction to a parity sector.
    pub fn sector_matrix(&self, space: &SpaceLabel) -> Result<CMatrix> {
        if space.d != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), got: space.d });
        }
        if self.is_identity() {
            let dim = space.dim();
            return Ok(CMatrix::identity(dim, dim));
        }
        match space.sector {
            Sector::Full => kron_power(&self.j, space.n),
            Sector::Symmetric | Sector::Antisymmetric => {
                sector_power(&self.j, space.n, space.sector.parity().expect("parity sector"))
            }
        }
    }

    pub fn sector_inverse(&self, space: &SpaceLabel) -> Result<CMatrix> {
        if self.is_identity() {
            let dim = space.dim();
            return Ok(CMatrix::identity(dim, dim));
        }
        match space.sector {
            Sector::Full => kron_power(&self.j_inv, space.n),
            Sector::Symmetric | Sector::Antisymmetric => {
                sector_power(&self.j_inv, space.n, space.sector.parity().expect("parity sector"))
            }
        }
    }

    /// `J⁻¹ A† J` on the given space.
    pub fn pseudo_adjoint(&self, a: &CMatrix, space: &SpaceLabel) -> Result<CMatrix> {
        if self.is_identity() {
            return Ok(a.adjoint());
        }
        let j = self.sector_matrix(space)?;
        let j_inv = self.sector_inverse(space)?;
        Ok(j_inv * a.adjoint() * j)
    }
}
