//! Dense linear algebra over GF(2).
//!
//! Rows are bit-packed into `u64` words, column `j` living in word `j / 64`
//! at bit `j % 64`. Subspaces are kept in reduced row echelon form, which is
//! canonical: two subspaces are equal iff their RREF bases are identical.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric difference of two sorted id lists: the sum of two sparse F2 vectors.
pub(crate) fn xor_sorted(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// A dense GF(2) vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Build from packed words; bits at or beyond `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(words_for(len), 0);
        let mut v = Self { words, len };
        v.mask_tail();
        v
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    /// Parity of the intersection, i.e. the GF(2) inner product.
    pub fn dot(&self, other: &BitVec) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + t)
                }
            })
        })
    }

    /// Bit string with coordinate 0 first.
    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({})", self.to_bit_string())
    }
}

/// A dense, bit-packed GF(2) matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[BitVec]) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        Ok(m)
    }

    /// Convenience constructor from a dense 0/1 table.
    pub fn from_dense(table: &[Vec<u8>]) -> Result<Self> {
        let cols = table.first().map_or(0, Vec::len);
        let rows: Vec<BitVec> = table
            .iter()
            .map(|r| BitVec::from_bools(&r.iter().map(|&x| x & 1 == 1).collect::<Vec<_>>()))
            .collect();
        Self::from_rows(cols, &rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.stride + c / 64];
        let mask = 1u64 << (c % 64);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVec {
        BitVec::from_words(self.row_words(r).to_vec(), self.cols)
    }

    pub fn row_vecs(&self) -> Vec<BitVec> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    /// `row[dst] ^= row[src]`.
    fn add_row(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let s = self.stride;
        let (lo, hi) = self.data.split_at_mut(src.max(dst) * s);
        let (src_words, dst_words) = if src < dst {
            (&lo[src * s..src * s + s], &mut hi[..s])
        } else {
            (&hi[..s], &mut lo[dst * s..dst * s + s])
        };
        for (d, v) in dst_words.iter_mut().zip(src_words) {
            *d ^= *v;
        }
    }

    /// Transform in place to reduced row echelon form and return the rank.
    /// Nonzero rows come first, ordered by strictly increasing pivot column.
    pub fn rref_in_place(&mut self) -> usize {
        let mut rank = 0;
        for c in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let (w, mask) = (c / 64, 1u64 << (c % 64));
            let Some(p) = (rank..self.rows).find(|&r| self.data[r * self.stride + w] & mask != 0)
            else {
                continue;
            };
            self.swap_rows(p, rank);
            for r in 0..self.rows {
                if r != rank && self.data[r * self.stride + w] & mask != 0 {
                    self.add_row(rank, r);
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn rank(&self) -> usize {
        self.clone().rref_in_place()
    }

    /// Pivot column of each nonzero row of an RREF matrix.
    pub fn pivots(&self) -> Vec<usize> {
        (0..self.rows)
            .filter_map(|r| self.row(r).first_one())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Keep only the first `n` rows.
    fn truncate_rows(&mut self, n: usize) {
        self.rows = n.min(self.rows);
        self.data.truncate(self.rows * self.stride);
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Gf2Matrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row(r).to_bit_string())?;
        }
        Ok(())
    }
}

/// Unique RREF of the row space of `m`, with the same shape as `m`.
pub fn rref(m: &Gf2Matrix) -> (Gf2Matrix, usize) {
    let mut out = m.clone();
    let rank = out.rref_in_place();
    (out, rank)
}

/// A subspace of GF(2)^n held as an RREF basis (zero rows dropped).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Subspace {
    ambient: usize,
    basis: Gf2Matrix,
}

impl Gf2Subspace {
    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            basis: Gf2Matrix::zeros(0, ambient),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self {
            ambient,
            basis: Gf2Matrix::identity(ambient),
        }
    }

    /// Span of `vectors` inside GF(2)^`ambient`.
    pub fn span(ambient: usize, vectors: &[BitVec]) -> Result<Self> {
        let mut m = Gf2Matrix::from_rows(ambient, vectors)?;
        let rank = m.rref_in_place();
        m.truncate_rows(rank);
        Ok(Self { ambient, basis: m })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.basis.rows()
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    pub fn basis(&self) -> &Gf2Matrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<BitVec> {
        self.basis.row_vecs()
    }

    fn check_ambient(&self, other: &Self) -> Result<()> {
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                found: other.ambient,
            });
        }
        Ok(())
    }

    /// The sum U + W.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.check_ambient(other)?;
        let mut rows = self.basis_vectors();
        rows.extend(other.basis_vectors());
        Self::span(self.ambient, &rows)
    }

    /// True iff `other` ⊆ `self`.
    pub fn contains(&self, other: &Self) -> Result<bool> {
        Ok(self.sum_dim(other)? == self.rank())
    }

    pub fn contains_vector(&self, v: &BitVec) -> Result<bool> {
        let w = Self::span(self.ambient, std::slice::from_ref(v))?;
        self.contains(&w)
    }

    pub fn sum_dim(&self, other: &Self) -> Result<usize> {
        Ok(self.sum(other)?.rank())
    }

    pub fn intersect_dim(&self, other: &Self) -> Result<usize> {
        let s = self.sum_dim(other)?;
        Ok(self.rank() + other.rank() - s)
    }

    /// Canonical key: RREF rows as bit strings (coordinate 0 first) joined by `|`.
    /// The zero subspace is `zero`.
    pub fn key(&self) -> String {
        if self.is_zero() {
            return "zero".to_string();
        }
        self.basis_vectors()
            .iter()
            .map(BitVec::to_bit_string)
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Inverse of [`Gf2Subspace::key`].
    pub fn from_key(ambient: usize, key: &str) -> Result<Self> {
        if key == "zero" {
            return Ok(Self::zero(ambient));
        }
        let mut rows = Vec::new();
        for part in key.split('|') {
            if part.len() != ambient || !part.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::Parse(format!(
                    "malformed subspace key {key:?} for ambient {ambient}"
                )));
            }
            rows.push(BitVec::from_bools(
                &part.bytes().map(|b| b == b'1').collect::<Vec<_>>(),
            ));
        }
        let s = Self::span(ambient, &rows)?;
        if s.rank() != rows.len() {
            return Err(Error::Parse(format!("subspace key {key:?} is not independent")));
        }
        Ok(s)
    }
}

impl fmt::Debug for Gf2Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Subspace(n={}, {})", self.ambient, self.key())
    }
}

/// One basis row on the wire: a single little-endian bit integer when the
/// ambient dimension fits in 64 bits, otherwise the list of 64-bit words.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WireRow {
    Small(u64),
    Wide(Vec<u64>),
}

#[derive(Serialize, Deserialize)]
struct WireSubspace {
    ambient: usize,
    rank: usize,
    rows: Vec<WireRow>,
}

impl Serialize for Gf2Subspace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = (0..self.rank())
            .map(|r| {
                let w = self.basis.row_words(r);
                if self.ambient <= 64 {
                    WireRow::Small(w.first().copied().unwrap_or(0))
                } else {
                    WireRow::Wide(w.to_vec())
                }
            })
            .collect();
        WireSubspace {
            ambient: self.ambient,
            rank: self.rank(),
            rows,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Gf2Subspace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = WireSubspace::deserialize(d)?;
        let rows: Vec<BitVec> = w
            .rows
            .into_iter()
            .map(|r| match r {
                WireRow::Small(x) => BitVec::from_words(vec![x], w.ambient),
                WireRow::Wide(ws) => BitVec::from_words(ws, w.ambient),
            })
            .collect();
        let s = Gf2Subspace::span(w.ambient, &rows).map_err(D::Error::custom)?;
        if s.rank() != w.rank || s.basis_vectors() != rows {
            return Err(D::Error::custom("subspace rows are not a canonical RREF basis"));
        }
        Ok(s)
    }
}
