use super::{CMatrix, Operator, Sector, SpaceLabel, C64, FULL_POWER_DIM_CAP};
use crate::{Error, Result};

/// Kronecker product with the left factor's indices slowest.
pub fn kron_matrices(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.space.sector != Sector::Full || b.space.sector != Sector::Full {
        return Err(Error::SectorMismatch("kron needs full tensor powers".into()));
    }
    if a.space.d != b.space.d {
        return Err(Error::DimensionMismatch { expected: a.space.d, got: b.space.d });
    }
    if a.metric != b.metric {
        return Err(Error::InvalidArgument("kron factors carry different metrics".into()));
    }
    let space = SpaceLabel::full(a.space.d, a.space.n + b.space.n);
    check_cap(space.dim())?;
    Ok(Operator { space, matrix: kron_matrices(&a.matrix, &b.matrix), metric: a.metric.clone() })
}

fn check_cap(dim: usize) -> Result<()> {
    if dim > FULL_POWER_DIM_CAP {
        return Err(Error::TooLarge {
            what: format!("full tensor power of dimension {dim}"),
            limit: FULL_POWER_DIM_CAP,
        });
    }
    Ok(())
}

fn checked_pow(d: usize, n: usize) -> Result<usize> {
    let mut dim = 1usize;
    for _ in 0..n {
        dim = dim
            .checked_mul(d)
            .filter(|&v| v <= FULL_POWER_DIM_CAP)
            .ok_or_else(|| Error::TooLarge { what: format!("full tensor power {d}^{n}"), limit: FULL_POWER_DIM_CAP })?;
    }
    Ok(dim)
}

/// `A^⊗n`; the zeroth power is the 1×1 identity.
pub fn kron_power(a: &CMatrix, n: usize) -> Result<CMatrix> {
    checked_pow(a.nrows(), n)?;
    let mut out = CMatrix::identity(1, 1);
    for _ in 0..n {
        out = out.kronecker(a);
    }
    Ok(out)
}

/// `I^⊗slot ⊗ A ⊗ I^⊗(n-slot-1)` for a single-particle `A`.
pub fn embed_slot(a: &CMatrix, slot: usize, n: usize) -> Result<CMatrix> {
    if slot >= n {
        return Err(Error::InvalidArgument(format!("slot {slot} out of range for power {n}")));
    }
    let d = a.nrows();
    let left = checked_pow(d, slot)?;
    let right = checked_pow(d, n - slot - 1)?;
    checked_pow(d, n)?;
    Ok(CMatrix::identity(left, left).kronecker(a).kronecker(&CMatrix::identity(right, right)))
}

pub(crate) fn word_of(mut index: usize, d: usize, n: usize) -> Vec<usize> {
    let mut word = vec![0; n];
    for slot in (0..n).rev() {
        word[slot] = index % d;
        index /= d;
    }
    word
}

pub(crate) fn index_of(word: &[usize], d: usize) -> usize {
    word.iter().fold(0, |acc, &x| acc * d + x)
}

/// Conjugate a full-power matrix by the slot permutation taking old slot
/// `perm[i]` to new slot `i`.
pub fn permute_slots(a: &CMatrix, d: usize, perm: &[usize]) -> Result<CMatrix> {
    let n = perm.len();
    let dim = checked_pow(d, n)?;
    if a.nrows() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: a.nrows() });
    }
    let map: Vec<usize> = (0..dim)
        .map(|idx| {
            let w = word_of(idx, d, n);
            let moved: Vec<usize> = perm.iter().map(|&p| w[p]).collect();
            index_of(&moved, d)
        })
        .collect();
    let mut out = CMatrix::zeros(dim, dim);
    for c in 0..dim {
        for r in 0..dim {
            out[(map[r], map[c])] = a[(r, c)];
        }
    }
    Ok(out)
}

/// Trace a full-power operator against `ρ_1 ⊗ ... ⊗ ρ_k` over its first `k`
/// slots, leaving an operator on the remaining `m - k` slots:
/// `out[a,b] = Σ_{x,y} Π_i ρ_i[y_i, x_i] W[(x,a),(y,b)]`.
pub fn partial_contract(w: &Operator, densities: &[CMatrix]) -> Result<Operator> {
    if w.space.sector != Sector::Full {
        return Err(Error::SectorMismatch("partial contraction needs a full tensor power".into()));
    }
    let d = w.space.d;
    let m = w.space.n;
    let k = densities.len();
    if k > m {
        return Err(Error::InvalidArgument(format!("cannot contract {k} slots of an {m}-slot operator")));
    }
    for rho in densities {
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: rho.nrows() });
        }
    }
    let current = contract_matrix(&w.matrix, d, densities);
    Ok(Operator { space: SpaceLabel::full(d, m - k), matrix: current, metric: w.metric.clone() })
}

/// Raw form of [`partial_contract`]: contracts the leading slots of a full-power
/// matrix with the given `d × d` densities.
pub(crate) fn contract_matrix(w: &CMatrix, d: usize, densities: &[CMatrix]) -> CMatrix {
    let mut current = w.clone();
    for rho in densities {
        let rest = current.nrows() / d;
        let mut next = CMatrix::zeros(rest, rest);
        for x in 0..d {
            for y in 0..d {
                let weight = rho[(y, x)];
                if weight == C64::new(0.0, 0.0) {
                    continue;
                }
                let block = current.view((x * rest, y * rest), (rest, rest));
                next += block * weight;
            }
        }
        current = next;
    }
    current
}

/// Transpose the slots selected by `mask` (bit `i` for slot `i`) between row and
/// column indices of a full-power matrix.
pub fn partial_transpose(a: &CMatrix, d: usize, n: usize, mask: u32) -> CMatrix {
    let dim = a.nrows();
    let mut weights = vec![1usize; n];
    for slot in (0..n.saturating_sub(1)).rev() {
        weights[slot] = weights[slot + 1] * d;
    }
    let masked: Vec<usize> = (0..dim)
        .map(|idx| {
            let word = word_of(idx, d, n);
            (0..n).filter(|s| mask & (1 << s) != 0).map(|s| word[s] * weights[s]).sum()
        })
        .collect();
    let mut out = CMatrix::zeros(dim, dim);
    for c in 0..dim {
        for r in 0..dim {
            let r2 = r - masked[r] + masked[c];
            let c2 = c - masked[c] + masked[r];
            out[(r2, c2)] = a[(r, c)];
        }
    }
    out
}
