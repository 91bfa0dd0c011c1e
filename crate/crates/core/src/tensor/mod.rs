//! Dense complex linear algebra on labelled tensor spaces.
//!
//! Every operator lives on a [`SpaceLabel`]: the `n`-fold tensor power of `C^d`,
//! or its completely symmetric / antisymmetric sector. Sector bases are indexed
//! by occupation vectors `(n_1, ..., n_d)` with `Σ n_k = n`, ordered
//! lexicographically descending; the antisymmetric sector keeps only 0/1
//! occupations, which is the same as increasing index sets in lexicographic order.
//!
//! Metrics are Hermitian invertible `d × d` matrices `J`; the pairing of kets is
//! `φ*ψ = φ† J ψ` and the metric adjoint of an operator is `J⁻¹ A† J`.

mod contract;
mod linalg;
mod metric;
mod sector;

pub(crate) use contract::contract_matrix;
pub use contract::{embed_slot, kron, kron_matrices, kron_power, partial_contract, partial_transpose, permute_slots};
pub use linalg::{
    commutator, expm, expm_propagator, expm_propagator_with, expm_with_metric, frobenius, hermitian_eigh, hermitize,
    max_abs,
};
pub use metric::{Metric, MetricClass};
pub use sector::{
    binomial, compress, compress_with, permutations, second_quantize, sector_dim, sector_isometry, sector_power,
    symmetrizer, SectorBasis, MAX_SYMMETRIZER_POWER,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest full tensor-power dimension materialized densely.
pub const FULL_POWER_DIM_CAP: usize = 4096;

/// Library-wide numerical tolerances. Functions taking a `&Tolerances` let callers
/// override them; the plain variants use [`Tolerances::default`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Commutator norm below which an operator counts as permutation-symmetric.
    pub commutation: f64,
    /// Residual of `(J⁻¹U†J)U - I` accepted for propagators.
    pub unitarity: f64,
    /// Residual of `J⁻¹H†J - H` accepted for generators.
    pub hermiticity: f64,
}

pub const COMMUTATION_TOL: f64 = 1e-10;
pub const UNITARITY_TOL: f64 = 1e-9;
pub const HERMITICITY_TOL: f64 = 1e-10;

impl Default for Tolerances {
    fn default() -> Self {
        Self { commutation: COMMUTATION_TOL, unitarity: UNITARITY_TOL, hermiticity: HERMITICITY_TOL }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    /// Completely symmetric tensors (bosons).
    Boson,
    /// Completely antisymmetric tensors (fermions).
    Fermion,
}

impl Parity {
    pub fn sector(self) -> Sector {
        match self {
            Parity::Boson => Sector::Symmetric,
            Parity::Fermion => Sector::Antisymmetric,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Parity::Boson => 1.0,
            Parity::Fermion => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sector {
    Full,
    Symmetric,
    Antisymmetric,
}

impl Sector {
    pub fn parity(self) -> Option<Parity> {
        match self {
            Sector::Full => None,
            Sector::Symmetric => Some(Parity::Boson),
            Sector::Antisymmetric => Some(Parity::Fermion),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpaceLabel {
    pub d: usize,
    pub n: usize,
    pub sector: Sector,
}

impl SpaceLabel {
    pub fn new(d: usize, n: usize, sector: Sector) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("single-particle dimension must be positive".into()));
        }
        Ok(Self { d, n, sector })
    }

    pub fn full(d: usize, n: usize) -> Self {
        Self { d, n, sector: Sector::Full }
    }

    pub fn sector(d: usize, n: usize, parity: Parity) -> Self {
        Self { d, n, sector: parity.sector() }
    }

    pub fn single(d: usize) -> Self {
        Self::full(d, 1)
    }

    pub fn dim(&self) -> usize {
        sector_dim(self.d, self.n, self.sector)
    }
}

/// A vector on a labelled space.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    pub space: SpaceLabel,
    pub amplitudes: CVector,
}

impl Ket {
    pub fn new(space: SpaceLabel, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: amplitudes.len() });
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("ket amplitudes must be finite".into()));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn single(amplitudes: CVector) -> Self {
        let d = amplitudes.len();
        Self { space: SpaceLabel::single(d), amplitudes }
    }

    pub fn from_slice(values: &[C64]) -> Self {
        Self::single(CVector::from_column_slice(values))
    }

    pub fn basis(space: SpaceLabel, index: usize) -> Self {
        let mut amplitudes = CVector::zeros(space.dim());
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { space, amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `φ* ψ = φ† J ψ` where `J` is the metric on this space.
    pub fn metric_inner(&self, other: &Ket, metric: &Metric) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SectorMismatch(format!("{:?} vs {:?}", self.space, other.space)));
        }
        let j = metric.sector_matrix(&self.space)?;
        Ok(self.amplitudes.dotc(&(j * &other.amplitudes)))
    }

    /// The metric norm `ψ*ψ`, real for Hermitian `J` and possibly negative.
    pub fn metric_norm(&self, metric: &Metric) -> Result<f64> {
        Ok(self.metric_inner(self, metric)?.re)
    }

    /// The rank-one density `ψψ*` as a matrix, `ψ ψ† J`; `Tr(ψψ* A) = ψ* A ψ`.
    pub fn density(&self, metric: &Metric) -> Result<CMatrix> {
        let j = metric.sector_matrix(&self.space)?;
        Ok(&self.amplitudes * (j.adjoint() * &self.amplitudes).adjoint())
    }
}

/// A square operator on a labelled space, carrying the single-particle metric
/// from which its pseudo-adjoint is taken.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    pub space: SpaceLabel,
    pub matrix: CMatrix,
    pub metric: Metric,
}

impl Operator {
    pub fn new(space: SpaceLabel, matrix: CMatrix, metric: Metric) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidArgument(format!(
                "operator matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        if metric.d() != space.d {
            return Err(Error::DimensionMismatch { expected: space.d, got: metric.d() });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("operator entries must be finite".into()));
        }
        Ok(Self { space, matrix, metric })
    }

    /// Single-particle operator with the Euclidean metric.
    pub fn single(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(SpaceLabel::single(d), matrix, Metric::identity(d))
    }

    pub fn identity(space: SpaceLabel, metric: Metric) -> Self {
        let dim = space.dim();
        Self { space, matrix: CMatrix::identity(dim, dim), metric }
    }

    pub fn zeros(space: SpaceLabel, metric: Metric) -> Self {
        let dim = space.dim();
        Self { space, matrix: CMatrix::zeros(dim, dim), metric }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn with_matrix(&self, matrix: CMatrix) -> Self {
        Self { space: self.space, matrix, metric: self.metric.clone() }
    }

    /// The metric (pseudo-) adjoint `J⁻¹ A† J`.
    pub fn pseudo_adjoint(&self) -> Result<CMatrix> {
        self.metric.pseudo_adjoint(&self.matrix, &self.space)
    }

    /// `‖J⁻¹A†J - A‖_F / max(1, ‖A‖_F)`.
    pub fn hermiticity_residual(&self) -> Result<f64> {
        let adj = self.pseudo_adjoint()?;
        Ok(frobenius(&(adj - &self.matrix)) / frobenius(&self.matrix).max(1.0))
    }

    pub fn ensure_metric_hermitian(&self, tol: f64) -> Result<()> {
        let residual = self.hermiticity_residual()?;
        if residual > tol {
            return Err(Error::NotPseudoHermitian { residual });
        }
        Ok(())
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        if ket.space != self.space {
            return Err(Error::SectorMismatch(format!("{:?} vs {:?}", ket.space, self.space)));
        }
        Ok(Ket { space: self.space, amplitudes: &self.matrix * &ket.amplitudes })
    }
}
