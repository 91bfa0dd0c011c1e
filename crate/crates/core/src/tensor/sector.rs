use std::collections::HashMap;

use super::contract::{index_of, word_of};
use super::{frobenius, CMatrix, Operator, Parity, Sector, SpaceLabel, Tolerances, C64, FULL_POWER_DIM_CAP};
use crate::{Error, Result};

/// Symmetrizers and compressions are built from explicit permutation sums up to this power.
pub const MAX_SYMMETRIZER_POWER: usize = 6;

/// Largest power for which a general (non-diagonal, non-rank-one) matrix is
/// lifted to a sector through permanents or determinants.
const MAX_GENERAL_SECTOR_POWER: usize = 16;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

pub fn sector_dim(d: usize, n: usize, sector: Sector) -> usize {
    match sector {
        Sector::Full => d.checked_pow(n as u32).unwrap_or(usize::MAX),
        Sector::Symmetric => binomial(n + d - 1, n),
        Sector::Antisymmetric => binomial(d, n),
    }
}

/// All permutations of `0..n` with their signs, in Heap's order.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut c = vec![0usize; n];
    out.push((perm.clone(), sign));
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            out.push((perm.clone(), sign));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Occupation-number basis of a parity sector.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    d: usize,
    n: usize,
    parity: Parity,
    states: Vec<Vec<u16>>,
    index: HashMap<Vec<u16>, usize>,
}

impl SectorBasis {
    pub fn new(d: usize, n: usize, parity: Parity) -> Self {
        let mut states = Vec::with_capacity(sector_dim(d, n, parity.sector()));
        let cap = match parity {
            Parity::Boson => n,
            Parity::Fermion => 1,
        };
        let mut current = vec![0u16; d];
        fill_occupations(&mut states, &mut current, 0, n, cap);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { d, n, parity, states, index }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn space(&self) -> SpaceLabel {
        SpaceLabel::sector(self.d, self.n, self.parity)
    }

    pub fn states(&self) -> &[Vec<u16>] {
        &self.states
    }

    pub fn index_of(&self, occupation: &[u16]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// A representative word (sorted mode indices) for a basis state.
    pub fn word(&self, state: usize) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.n);
        for (mode, &count) in self.states[state].iter().enumerate() {
            w.extend(std::iter::repeat(mode).take(count as usize));
        }
        w
    }

    /// `a_mode |occ⟩ = coeff |occ - e_mode⟩`.
    pub fn annihilate(&self, occ: &[u16], mode: usize) -> Option<(f64, Vec<u16>)> {
        if occ[mode] == 0 {
            return None;
        }
        let mut out = occ.to_vec();
        out[mode] -= 1;
        let coeff = match self.parity {
            Parity::Boson => (occ[mode] as f64).sqrt(),
            Parity::Fermion => fermion_sign(occ, mode),
        };
        Some((coeff, out))
    }

    /// `a†_mode |occ⟩ = coeff |occ + e_mode⟩`.
    pub fn create(&self, occ: &[u16], mode: usize) -> Option<(f64, Vec<u16>)> {
        let coeff = match self.parity {
            Parity::Boson => (occ[mode] as f64 + 1.0).sqrt(),
            Parity::Fermion => {
                if occ[mode] != 0 {
                    return None;
                }
                fermion_sign(occ, mode)
            }
        };
        let mut out = occ.to_vec();
        out[mode] += 1;
        Some((coeff, out))
    }
}

fn fermion_sign(occ: &[u16], mode: usize) -> f64 {
    let below: u32 = occ[..mode].iter().map(|&c| c as u32).sum();
    if below % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn fill_occupations(out: &mut Vec<Vec<u16>>, current: &mut Vec<u16>, mode: usize, remaining: usize, cap: usize) {
    let d = current.len();
    if mode == d - 1 {
        if remaining <= cap {
            current[mode] = remaining as u16;
            out.push(current.clone());
        }
        return;
    }
    for count in (0..=remaining.min(cap)).rev() {
        current[mode] = count as u16;
        fill_occupations(out, current, mode + 1, remaining - count, cap);
    }
    current[mode] = 0;
}

fn full_dim(d: usize, n: usize) -> Result<usize> {
    let dim = sector_dim(d, n, Sector::Full);
    if dim > FULL_POWER_DIM_CAP {
        return Err(Error::TooLarge { what: format!("full tensor power {d}^{n}"), limit: FULL_POWER_DIM_CAP });
    }
    Ok(dim)
}

/// Orthogonal projector onto the symmetric (`Boson`) or antisymmetric (`Fermion`)
/// subspace of `(C^d)^⊗n`, built as `(1/n!) Σ_π χ(π) T_π`.
pub fn symmetrizer(d: usize, n: usize, parity: Parity) -> Result<Operator> {
    if d == 0 {
        return Err(Error::InvalidArgument("single-particle dimension must be positive".into()));
    }
    if n > MAX_SYMMETRIZER_POWER {
        return Err(Error::TooLarge { what: format!("symmetrizer power {n}"), limit: MAX_SYMMETRIZER_POWER });
    }
    let dim = full_dim(d, n)?;
    let perms = permutations(n);
    let weight = 1.0 / factorial(n);
    let mut p = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let w = word_of(col, d, n);
        for (perm, sign) in &perms {
            let moved: Vec<usize> = perm.iter().map(|&s| w[s]).collect();
            let row = index_of(&moved, d);
            let chi = match parity {
                Parity::Boson => 1.0,
                Parity::Fermion => *sign,
            };
            p[(row, col)] += C64::new(chi * weight, 0.0);
        }
    }
    Ok(Operator::new(SpaceLabel::full(d, n), p, super::Metric::identity(d))?)
}

/// Isometry `S` from the sector (occupation basis) into the full power, with
/// `S†S = I` and `SS†` the sector projector.
pub fn sector_isometry(d: usize, n: usize, parity: Parity) -> Result<CMatrix> {
    let dim = full_dim(d, n)?;
    let basis = SectorBasis::new(d, n, parity);
    let mut s = CMatrix::zeros(dim, basis.dim());
    for idx in 0..dim {
        let w = word_of(idx, d, n);
        let mut occ = vec![0u16; d];
        for &x in &w {
            occ[x] += 1;
        }
        let Some(col) = basis.index_of(&occ) else { continue };
        let value = match parity {
            Parity::Boson => {
                let occ_fact: f64 = occ.iter().map(|&c| factorial(c as usize)).product();
                (occ_fact / factorial(n)).sqrt()
            }
            Parity::Fermion => permutation_sign(&w) / factorial(n).sqrt(),
        };
        s[(idx, col)] = C64::new(value, 0.0);
    }
    Ok(s)
}

/// Sign of the permutation sorting a word of distinct letters.
fn permutation_sign(word: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..word.len() {
        for j in i + 1..word.len() {
            if word[i] > word[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn compress(a: &Operator, parity: Parity) -> Result<Operator> {
    compress_with(a, parity, &Tolerances::default())
}

/// `S† A S` for a full-power operator commuting with the sector projector.
pub fn compress_with(a: &Operator, parity: Parity, tol: &Tolerances) -> Result<Operator> {
    if a.space.sector != Sector::Full {
        return Err(Error::SectorMismatch("compress needs a full tensor power".into()));
    }
    let SpaceLabel { d, n, .. } = a.space;
    let p = symmetrizer(d, n, parity)?;
    let norm = frobenius(&(&p.matrix * &a.matrix - &a.matrix * &p.matrix));
    if norm > tol.commutation {
        return Err(Error::NotPermutationSymmetric { norm });
    }
    let s = sector_isometry(d, n, parity)?;
    let matrix = s.adjoint() * &a.matrix * &s;
    Operator::new(SpaceLabel::sector(d, n, parity), matrix, a.metric.clone())
}

/// Restriction of `M^⊗n` to a parity sector, `S† M^⊗n S`, without forming the
/// full power: entries are permanents (bosons) or determinants (fermions) of
/// `M` on representative words, divided by `sqrt(Π occ! Π occ'!)`.
pub fn sector_power(m: &CMatrix, n: usize, parity: Parity) -> Result<CMatrix> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::InvalidArgument("sector_power needs a square matrix".into()));
    }
    let basis = SectorBasis::new(d, n, parity);
    let dim = basis.dim();
    let is_diag = (0..d).all(|r| (0..d).all(|c| r == c || m[(r, c)] == C64::new(0.0, 0.0)));
    if is_diag {
        let mut out = CMatrix::zeros(dim, dim);
        for (i, occ) in basis.states().iter().enumerate() {
            out[(i, i)] =
                occ.iter().enumerate().fold(C64::new(1.0, 0.0), |acc, (k, &c)| acc * m[(k, k)].powi(c as i32));
        }
        return Ok(out);
    }
    if n > MAX_GENERAL_SECTOR_POWER {
        return Err(Error::TooLarge {
            what: format!("sector power {n} of a non-diagonal matrix"),
            limit: MAX_GENERAL_SECTOR_POWER,
        });
    }
    let words: Vec<Vec<usize>> = (0..dim).map(|i| basis.word(i)).collect();
    let norms: Vec<f64> =
        basis.states().iter().map(|occ| occ.iter().map(|&c| factorial(c as usize)).product::<f64>().sqrt()).collect();
    let mut out = CMatrix::zeros(dim, dim);
    let mut sub = CMatrix::zeros(n, n);
    for r in 0..dim {
        for c in 0..dim {
            for i in 0..n {
                for j in 0..n {
                    sub[(i, j)] = m[(words[r][i], words[c][j])];
                }
            }
            out[(r, c)] = match parity {
                Parity::Boson => permanent(&sub) / (norms[r] * norms[c]),
                Parity::Fermion => {
                    if n == 0 {
                        C64::new(1.0, 0.0)
                    } else {
                        sub.determinant()
                    }
                }
            };
        }
    }
    Ok(out)
}

/// Ryser's formula.
fn permanent(a: &CMatrix) -> C64 {
    let n = a.nrows();
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut total = C64::new(0.0, 0.0);
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    // Gray-code walk over column subsets.
    let mut subset: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let flip = k.trailing_zeros() as usize;
        let adding = subset & (1 << flip) == 0;
        subset ^= 1 << flip;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if adding {
                *s += a[(i, flip)];
            } else {
                *s -= a[(i, flip)];
            }
        }
        let prod = row_sums.iter().fold(C64::new(1.0, 0.0), |acc, s| acc * s);
        let sign = if (n - subset.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
        total += prod * sign;
    }
    total
}

/// The `m`-body operator `Σ_{|S|=m} W_S` on a parity sector, in normal order
/// `(1/m!) Σ_{x,y} W[x,y] a†_{x1}…a†_{xm} a_{ym}…a_{y1}`, for a full-power
/// `W` on `m` slots that commutes with slot permutations.
pub fn second_quantize(w: &CMatrix, m: usize, basis: &SectorBasis) -> Result<CMatrix> {
    let d = basis.d();
    let wdim = sector_dim(d, m, Sector::Full);
    if w.nrows() != wdim || w.ncols() != wdim {
        return Err(Error::DimensionMismatch { expected: wdim, got: w.nrows() });
    }
    let dim = basis.dim();
    let mut out = CMatrix::zeros(dim, dim);
    if m > basis.n() {
        return Ok(out);
    }
    let inv_fact = 1.0 / factorial(m);
    // Nonzero entries of W grouped by column word.
    let mut columns: Vec<Vec<(Vec<usize>, C64)>> = vec![Vec::new(); wdim];
    for y in 0..wdim {
        for x in 0..wdim {
            let v = w[(x, y)];
            if v != C64::new(0.0, 0.0) {
                columns[y].push((word_of(x, d, m), v));
            }
        }
    }
    let y_words: Vec<Vec<usize>> = (0..wdim).map(|y| word_of(y, d, m)).collect();
    for (col, occ) in basis.states().iter().enumerate() {
        for (y, entries) in columns.iter().enumerate() {
            if entries.is_empty() {
                continue;
            }
            // a_{ym} … a_{y1}: a_{y1} acts first.
            let mut state = occ.clone();
            let mut coeff = 1.0;
            let mut alive = true;
            for &mode in &y_words[y] {
                match basis.annihilate(&state, mode) {
                    Some((c, next)) => {
                        coeff *= c;
                        state = next;
                    }
                    None => {
                        alive = false;
                        break;
                    }
                }
            }
            if !alive {
                continue;
            }
            for (x_word, value) in entries {
                // a†_{x1} … a†_{xm}: a†_{xm} acts first.
                let mut target = state.clone();
                let mut c2 = coeff;
                let mut ok = true;
                for &mode in x_word.iter().rev() {
                    match basis.create(&target, mode) {
                        Some((c, next)) => {
                            c2 *= c;
                            target = next;
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let row = basis.index_of(&target).expect("particle number is conserved");
                out[(row, col)] += value * (c2 * inv_fact);
            }
        }
    }
    Ok(out)
}
