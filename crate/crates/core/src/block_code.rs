//! Systematic `[I | Q]` binary block codes over GF(2).
//!
//! Two constructions are provided. [`build_plain_code`] fills `Q` with the
//! first `k` distinct `m`-tuples of weight ≥ 2 (a shortened Hamming code).
//! [`build_reduced_code`] builds the dimension-reduced RIS encoder: `Q` is
//! block diagonal so Type-I (azimuth-axis) and Type-II (elevation-axis)
//! information bits never share a parity check. Codewords are laid out as
//! `[u_I | u_II | p_I | p_II]`, which makes the syndrome split cleanly into a
//! Type-I half and a Type-II half.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest `k` accepted by [`min_distance`].
pub const MAX_EXHAUSTIVE_K: usize = 20;

/// Ordered sequence of bits, stored one per byte.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    /// `dec2bin`: most significant bit first.
    pub fn from_index(value: usize, width: usize) -> Self {
        Self(
            (0..width)
                .map(|i| ((value >> (width - 1 - i)) & 1) as u8)
                .collect(),
        )
    }

    /// `bin2dec`: most significant bit first.
    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] ^= 1;
    }

    pub fn flipped(&self, positions: &[usize]) -> Self {
        let mut out = self.clone();
        for &p in positions {
            out.flip(p);
        }
        out
    }

    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "xor of bit strings with different lengths");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self(self.0[range].to_vec())
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&other.0);
        Self(bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidArgument(format!("'{other}' is not a bit"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Self)
    }
}

impl TryFrom<String> for BitString {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BitString> for String {
    fn from(b: BitString) -> String {
        b.to_string()
    }
}

/// Dense binary matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "matrix row",
                    expected: cols,
                    actual: r.len(),
                });
            }
            for (j, &b) in r.iter().enumerate() {
                if b > 1 {
                    return Err(Error::InvalidArgument(format!("bit value {b} is not 0 or 1")));
                }
                m.set(i, j, b);
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, b: u8) {
        self.data[i * self.cols + j] = b;
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u8> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack with different row counts");
        let mut m = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self.get(i, j));
            }
            for j in 0..other.cols {
                m.set(i, self.cols + j, other.get(i, j));
            }
        }
        m
    }

    pub fn block_diag(a: &Self, b: &Self) -> Self {
        let mut m = Self::zeros(a.rows + b.rows, a.cols + b.cols);
        for i in 0..a.rows {
            for j in 0..a.cols {
                m.set(i, j, a.get(i, j));
            }
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                m.set(a.rows + i, a.cols + j, b.get(i, j));
            }
        }
        m
    }

    /// Row vector times matrix over GF(2).
    pub fn left_mul(&self, x: &[u8]) -> Vec<u8> {
        assert_eq!(x.len(), self.rows, "vector length must equal row count");
        let mut out = vec![0u8; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 1 {
                for (o, &b) in out.iter_mut().zip(self.row(i)) {
                    *o ^= b;
                }
            }
        }
        out
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let r = other.left_mul(self.row(i));
            for (j, b) in r.into_iter().enumerate() {
                m.set(i, j, b);
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&b| b == 0)
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let line = self.row(i).iter().map(|b| b.to_string()).join(" ");
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Type-I / Type-II partition of a dimension-reduced code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSplit {
    pub k1: usize,
    pub m1: usize,
    pub k2: usize,
    pub m2: usize,
}

impl DimensionSplit {
    /// Codeword positions belonging to the Type-I sub-code.
    pub fn type_one_positions(&self) -> Vec<usize> {
        let k = self.k1 + self.k2;
        (0..self.k1).chain(k..k + self.m1).collect()
    }

    pub fn type_two_positions(&self) -> Vec<usize> {
        let k = self.k1 + self.k2;
        (self.k1..k).chain(k + self.m1..k + self.m1 + self.m2).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    /// Take the systematic bits as received.
    None,
    /// Classic single-error syndrome correction.
    #[default]
    OneBit,
    /// Independent single-error correction in the Type-I and Type-II halves.
    DecoupledTwoBit,
}

impl DecodeMode {
    pub fn label(&self) -> &'static str {
        match self {
            DecodeMode::None => "none",
            DecodeMode::OneBit => "one_bit",
            DecodeMode::DecoupledTwoBit => "decoupled_two_bit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    /// Zero syndrome (or no correction attempted).
    Clean,
    Corrected,
    /// Nonzero syndrome outside the correctable set; systematic bits returned as received.
    Uncorrectable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeReport {
    pub info: BitString,
    pub corrected_positions: Vec<usize>,
    pub status: DecodeStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCode {
    pub k: usize,
    pub n: usize,
    pub q: BitMatrix,
    pub generator: BitMatrix,
    pub check: BitMatrix,
    pub split: Option<DimensionSplit>,
    /// Single-bit error syndromes mapped to their error position.
    pub syndrome_table: BTreeMap<BitString, usize>,
}

impl BlockCode {
    /// Builds `G = [I | Q]`, `H = [Qᵀ | I]` and the single-error table.
    pub fn from_q(q: BitMatrix, split: Option<DimensionSplit>) -> Result<Self> {
        let k = q.nrows();
        let m = q.ncols();
        if k == 0 {
            return Err(Error::InvalidArgument("code needs at least one information bit".into()));
        }
        if let Some(s) = split {
            if s.k1 + s.k2 != k || s.m1 + s.m2 != m {
                return Err(Error::InvalidArgument(format!(
                    "split {s:?} does not match a {k}x{m} Q"
                )));
            }
        }
        let generator = BitMatrix::identity(k).hstack(&q);
        let check = q.transpose().hstack(&BitMatrix::identity(m));
        let n = k + m;
        let mut syndrome_table = BTreeMap::new();
        for p in (0..n).rev() {
            // keep the lowest position on collisions
            syndrome_table.insert(BitString(check.column(p)), p);
        }
        Ok(Self {
            k,
            n,
            q,
            generator,
            check,
            split,
            syndrome_table,
        })
    }

    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }

    fn check_len(&self, what: &'static str, expected: usize, actual: usize) -> Result<()> {
        if expected != actual {
            return Err(Error::DimensionMismatch {
                what,
                expected,
                actual,
            });
        }
        Ok(())
    }

    /// `x = u G`.
    pub fn encode(&self, u: &BitString) -> Result<BitString> {
        self.check_len("information word", self.k, u.len())?;
        Ok(BitString(self.generator.left_mul(u.bits())))
    }

    /// `c = x̂ Hᵀ`.
    pub fn syndrome(&self, x_hat: &BitString) -> Result<BitString> {
        self.check_len("received word", self.n, x_hat.len())?;
        Ok(BitString(self.check.transpose().left_mul(x_hat.bits())))
    }

    pub fn decode(&self, x_hat: &BitString, mode: DecodeMode) -> Result<DecodeReport> {
        self.check_len("received word", self.n, x_hat.len())?;
        match mode {
            DecodeMode::None => Ok(DecodeReport {
                info: x_hat.slice(0..self.k),
                corrected_positions: Vec::new(),
                status: DecodeStatus::Clean,
            }),
            DecodeMode::OneBit => {
                let syndrome = self.syndrome(x_hat)?;
                Ok(self.correct_single(x_hat, &syndrome))
            }
            DecodeMode::DecoupledTwoBit => {
                let split = self.split.ok_or(Error::MissingSplit {
                    mode: "decoupled_two_bit",
                })?;
                Ok(self.correct_decoupled(x_hat, split))
            }
        }
    }

    fn correct_single(&self, x_hat: &BitString, syndrome: &BitString) -> DecodeReport {
        if syndrome.is_zero() {
            return DecodeReport {
                info: x_hat.slice(0..self.k),
                corrected_positions: Vec::new(),
                status: DecodeStatus::Clean,
            };
        }
        match self.syndrome_table.get(syndrome) {
            Some(&p) => DecodeReport {
                info: x_hat.flipped(&[p]).slice(0..self.k),
                corrected_positions: vec![p],
                status: DecodeStatus::Corrected,
            },
            None => DecodeReport {
                info: x_hat.slice(0..self.k),
                corrected_positions: Vec::new(),
                status: DecodeStatus::Uncorrectable,
            },
        }
    }

    fn correct_decoupled(&self, x_hat: &BitString, split: DimensionSplit) -> DecodeReport {
        let syndrome = self.syndrome(x_hat).expect("length checked by caller");
        let halves = [
            (syndrome.slice(0..split.m1), split.type_one_positions()),
            (syndrome.slice(split.m1..split.m1 + split.m2), split.type_two_positions()),
        ];
        let mut word = x_hat.clone();
        let mut corrected_positions = Vec::new();
        let mut uncorrectable = false;
        for (half, offset) in halves.iter().zip([0, split.m1]) {
            let (sub_syndrome, positions) = half;
            if sub_syndrome.is_zero() {
                continue;
            }
            let hit = positions.iter().copied().find(|&p| {
                let column = self.check.column(p);
                column[offset..offset + sub_syndrome.len()] == *sub_syndrome.bits()
            });
            match hit {
                Some(p) => {
                    word.flip(p);
                    corrected_positions.push(p);
                }
                None => uncorrectable = true,
            }
        }
        let status = if uncorrectable {
            DecodeStatus::Uncorrectable
        } else if corrected_positions.is_empty() {
            DecodeStatus::Clean
        } else {
            DecodeStatus::Corrected
        };
        DecodeReport {
            info: word.slice(0..self.k),
            corrected_positions,
            status,
        }
    }

    /// All `2^k` codewords in information-index order.
    pub fn codewords(&self) -> impl Iterator<Item = BitString> + '_ {
        (0..1usize << self.k).map(move |i| {
            self.encode(&BitString::from_index(i, self.k))
                .expect("width matches k")
        })
    }
}

/// Information bits needed to index `n` grid points, `⌈log₂ n⌉` (at least 1).
pub fn info_bits(n: usize) -> usize {
    assert!(n >= 1, "need at least one grid point");
    (usize::BITS - (n - 1).leading_zeros()).max(1) as usize
}

/// Smallest `m` with `2^m - m - 1 ≥ k`.
pub fn redundancy_length(k: usize) -> usize {
    assert!(k >= 1, "k must be positive");
    (1usize..)
        .find(|&m| (1usize << m) - m > k)
        .expect("m grows without bound")
}

/// Distinct `m`-tuples of weight ≥ 2, by increasing weight and then
/// lexicographic order of the set positions.
pub fn weight_ordered_tuples(m: usize) -> impl Iterator<Item = Vec<u8>> {
    (2..=m).flat_map(move |w| {
        (0..m).combinations(w).map(move |positions| {
            let mut t = vec![0u8; m];
            for p in positions {
                t[p] = 1;
            }
            t
        })
    })
}

fn fill_q(k: usize, m: usize) -> BitMatrix {
    let mut q = BitMatrix::zeros(k, m);
    for (i, tuple) in weight_ordered_tuples(m).take(k).enumerate() {
        for (j, b) in tuple.into_iter().enumerate() {
            q.set(i, j, b);
        }
    }
    q
}

pub fn build_plain_code(k: usize) -> Result<BlockCode> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let m = redundancy_length(k);
    BlockCode::from_q(fill_q(k, m), None)
}

/// Dimension-reduced encoder for a RIS with `2^k1 × 2^k2` elements.
pub fn build_reduced_code(k1: usize, k2: usize) -> Result<BlockCode> {
    // more than 4 elements per dimension ⇔ at least 3 bits
    if k1 < 3 || k2 < 3 {
        return Err(Error::ReducedCodeInfeasible { k1, k2 });
    }
    let m1 = redundancy_length(k1).max(3);
    let m2 = redundancy_length(k2).max(3);
    let q = BitMatrix::block_diag(&fill_q(k1, m1), &fill_q(k2, m2));
    BlockCode::from_q(q, Some(DimensionSplit { k1, m1, k2, m2 }))
}

/// Minimum Hamming weight over the nonzero codewords.
pub fn min_distance(code: &BlockCode) -> Result<usize> {
    if code.k > MAX_EXHAUSTIVE_K {
        return Err(Error::CodeTooLarge {
            k: code.k,
            max: MAX_EXHAUSTIVE_K,
        });
    }
    Ok(code
        .codewords()
        .skip(1)
        .map(|c| c.weight())
        .min()
        .expect("k >= 1 gives a nonzero codeword"))
}
