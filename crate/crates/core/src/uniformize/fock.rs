use crate::tensor::{
    frobenius, max_abs, second_quantize, CMatrix, Metric, Operator, Parity, SectorBasis, SpaceLabel, C64,
};
use crate::{Error, Result};

/// Sectors `0..=n_max` of the (pseudo-)Fock space over `C^d`.
#[derive(Clone, Debug)]
pub struct FockTruncation {
    metric: Metric,
    parity: Parity,
    bases: Vec<SectorBasis>,
}

impl FockTruncation {
    pub fn new(metric: Metric, parity: Parity, n_max: usize) -> Self {
        let d = metric.d();
        let bases = (0..=n_max).map(|n| SectorBasis::new(d, n, parity)).collect();
        Self { metric, parity, bases }
    }

    pub fn d(&self) -> usize {
        self.metric.d()
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn n_max(&self) -> usize {
        self.bases.len() - 1
    }

    pub fn basis(&self, n: usize) -> Option<&SectorBasis> {
        self.bases.get(n)
    }

    pub fn space(&self, n: usize) -> SpaceLabel {
        SpaceLabel::sector(self.d(), n, self.parity)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.dim()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.dims().iter().sum()
    }
}

/// Block-diagonal operator on a truncated Fock space; block `n` acts on sector `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockOperator {
    pub blocks: Vec<CMatrix>,
}

impl BlockOperator {
    pub fn block(&self, n: usize) -> Option<&CMatrix> {
        self.blocks.get(n)
    }

    fn zip(&self, other: &Self, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Result<Self> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::DimensionMismatch { expected: self.blocks.len(), got: other.blocks.len() });
        }
        Ok(Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b - b * a)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { blocks: self.blocks.iter().map(|b| b * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(max_abs).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.blocks.iter().map(|b| frobenius(b).powi(2)).sum::<f64>().sqrt()
    }
}

/// `n̂(A)`: on sector `n` the compression of `Σ_{i≤n} A_i`; zero on the vacuum.
pub fn number_observable(a: &Operator, fock: &FockTruncation) -> Result<BlockOperator> {
    if a.space != SpaceLabel::single(fock.d()) {
        return Err(Error::DimensionMismatch { expected: fock.d(), got: a.space.d });
    }
    a.ensure_metric_hermitian(crate::tensor::HERMITICITY_TOL)?;
    let blocks = fock.bases.iter().map(|basis| second_quantize(&a.matrix, 1, basis)).collect::<Result<Vec<_>>>()?;
    Ok(BlockOperator { blocks })
}
