//! Dense linear algebra over GF(2).
//!
//! Bits are packed into `u64` words, least significant bit first. Every
//! operation here is exact; nothing is approximated.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector from 0/1 bytes. Any nonzero byte counts as a one.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    /// Vector of length `len` whose ones sit at `support`.
    pub fn from_support(len: usize, support: &[usize]) -> Self {
        let mut v = BitVec::zeros(len);
        for &i in support {
            v.set(i, true);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn and(&self, other: &BitVec) -> BitVec {
        assert_eq!(self.len, other.len, "length mismatch in and");
        BitVec {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            len: self.len,
        }
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn hamming_distance(&self, other: &BitVec) -> usize {
        assert_eq!(self.len, other.len, "length mismatch in distance");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of the one-bits in increasing order.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let t = w.trailing_zeros() as usize;
                out.push(wi * WORD + t);
                w &= w - 1;
            }
        }
        out
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }

    /// Index of the lowest set bit.
    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(wi, &w)| wi * WORD + w.trailing_zeros() as usize)
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec(")?;
        for b in self.iter() {
            write!(f, "{}", b as u8)?;
        }
        write!(f, ")")
    }
}

/// Dense row-major matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BitVec>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            data: vec![BitVec::zeros(cols); rows],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = BitMatrix::zeros(size, size);
        for i in 0..size {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: Vec<BitVec>) -> Result<Self> {
        let cols = rows.first().map_or(0, BitVec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "row {bad} has {} bits, expected {cols}",
                rows[bad].len()
            )));
        }
        Ok(BitMatrix {
            rows: rows.len(),
            cols,
            data: rows,
        })
    }

    /// Builds a matrix from nested 0/1 rows. Panics on ragged input, so it is
    /// meant for literals.
    pub fn from_array<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        BitMatrix::from_rows(rows.iter().map(|r| BitVec::from_bits(r.as_ref())).collect())
            .expect("ragged matrix literal")
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r].get(c)
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.data[r].set(c, value);
    }

    pub fn row(&self, r: usize) -> &BitVec {
        &self.data[r]
    }

    pub fn row_vecs(&self) -> &[BitVec] {
        &self.data
    }

    pub fn column(&self, c: usize) -> BitVec {
        let mut v = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    pub fn column_weights(&self) -> Vec<usize> {
        let mut w = vec![0usize; self.cols];
        for row in &self.data {
            for c in row.support() {
                w[c] += 1;
            }
        }
        w
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.data.iter().map(BitVec::weight).collect()
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for (r, row) in self.data.iter().enumerate() {
            for c in row.support() {
                t.set(c, r, true);
            }
        }
        t
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        self.data.swap(a, b);
    }

    /// `row[dst] ^= row[src]`.
    pub fn add_row(&mut self, src: usize, dst: usize) {
        assert_ne!(src, dst);
        let s = self.data[src].clone();
        self.data[dst].xor_assign(&s);
    }

    /// Kronecker product: entry `((i,j),(k,m))` is `A[i,k] * B[j,m]`.
    pub fn kron(&self, other: &BitMatrix) -> BitMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = BitMatrix::zeros(rows, cols);
        for i in 0..self.rows {
            for k in self.data[i].support() {
                for j in 0..other.rows {
                    let r = i * other.rows + j;
                    for m in other.data[j].support() {
                        out.set(r, k * other.cols + m, true);
                    }
                }
            }
        }
        out
    }

    /// `n`-fold Kronecker power; the zeroth power is the 1x1 identity.
    pub fn kron_power(&self, n: u32) -> BitMatrix {
        let mut acc = BitMatrix::identity(1);
        for _ in 0..n {
            acc = acc.kron(self);
        }
        acc
    }

    /// Row rank over GF(2).
    pub fn rank(&self) -> usize {
        let mut m = self.data.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(p) = (rank..m.len()).find(|&r| m[r].get(col)) else {
                continue;
            };
            m.swap(rank, p);
            let pivot = m[rank].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot);
                }
            }
            rank += 1;
            if rank == m.len() {
                break;
            }
        }
        rank
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    /// True when every entry strictly below the diagonal is zero.
    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|r| (0..r.min(self.cols)).all(|c| !self.get(r, c)))
    }

    /// Vector-matrix product `u * M`.
    pub fn left_mul(&self, u: &BitVec) -> BitVec {
        assert_eq!(u.len(), self.rows, "vector length must equal row count");
        let mut out = BitVec::zeros(self.cols);
        for r in u.support() {
            out.xor_assign(&self.data[r]);
        }
        out
    }

    /// Row-major bit string, `'0'`/`'1'` characters.
    pub fn bit_string(&self) -> String {
        self.data
            .iter()
            .flat_map(|r| r.iter().map(|b| if b { '1' } else { '0' }))
            .collect()
    }

    pub fn to_nested(&self) -> Vec<Vec<u8>> {
        self.data
            .iter()
            .map(|r| r.iter().map(u8::from).collect())
            .collect()
    }

    /// Renders the text format: `rows cols` then one row of `0 1 ...` per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for row in &self.data {
            let line: Vec<&str> = row.iter().map(|b| if b { "1" } else { "0" }).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

impl FromStr for BitMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix text".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad header {header:?}: {e}")))?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Parse(format!("header must be `rows cols`, got {header:?}")));
        };
        let mut data = Vec::with_capacity(rows);
        for (i, line) in lines.by_ref().take(rows).enumerate() {
            let bits: Vec<u8> = line
                .split_whitespace()
                .map(|t| match t {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(Error::Parse(format!("row {i}: entry {other:?} is not 0/1"))),
                })
                .collect::<Result<_>>()?;
            if bits.len() != cols {
                return Err(Error::Parse(format!(
                    "row {i} has {} entries, expected {cols}",
                    bits.len()
                )));
            }
            data.push(BitVec::from_bits(&bits));
        }
        if data.len() != rows {
            return Err(Error::Parse(format!("expected {rows} rows, found {}", data.len())));
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing rows after matrix".into()));
        }
        Ok(BitMatrix { rows, cols, data })
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for row in &self.data {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// Reduces `vectors` to a linearly independent set with the same span.
pub fn span_basis(vectors: &[BitVec]) -> Vec<BitVec> {
    let mut basis: Vec<BitVec> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for v in vectors {
        let mut v = v.clone();
        for (b, &p) in basis.iter().zip(&pivots) {
            if v.get(p) {
                v.xor_assign(b);
            }
        }
        if let Some(p) = v.first_one() {
            for b in basis.iter_mut() {
                if b.get(p) {
                    b.xor_assign(&v);
                }
            }
            basis.push(v);
            pivots.push(p);
        }
    }
    basis
}

/// Minimum Hamming distance from `v` to any element of `span(basis)`.
///
/// The span is walked in Gray-code order, so the cost is `2^rank` vector
/// updates. Callers keep the rank small (kernel sizes up to 8).
pub fn coset_min_weight(v: &BitVec, basis: &[BitVec]) -> usize {
    if let Some(b) = basis.iter().find(|b| b.len() != v.len()) {
        panic!("coset_min_weight: basis vector length {} != {}", b.len(), v.len());
    }
    let basis = span_basis(basis);
    let mut cur = v.clone();
    let mut best = cur.weight();
    for step in 1u64..(1u64 << basis.len()) {
        cur.xor_assign(&basis[step.trailing_zeros() as usize]);
        best = best.min(cur.weight());
        if best == 0 {
            break;
        }
    }
    best
}

/// Whether `v` lies in the span of `vectors`.
pub fn in_span(v: &BitVec, vectors: &[BitVec]) -> bool {
    let basis = span_basis(vectors);
    let mut v = v.clone();
    for b in &basis {
        let p = b.first_one().expect("basis vectors are nonzero");
        if v.get(p) {
            v.xor_assign(b);
        }
    }
    v.is_zero()
}
