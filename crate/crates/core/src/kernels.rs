//! Polarizing kernels: validity, partial distances, rate of polarization,
//! the kernel catalog and an exhaustive search for the sparsest kernels.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{coset_min_weight, BitMatrix, BitVec};

/// Largest side length accepted by [`search_min_sparsity`].
pub const MAX_SEARCH_SIDE: usize = 4;

/// An `l x l` polarizing kernel together with its derived quantities.
#[derive(Clone, PartialEq)]
pub struct Kernel {
    name: String,
    matrix: BitMatrix,
    partial_distances: Vec<usize>,
    exponent: f64,
    column_weights: Vec<usize>,
}

impl Kernel {
    /// Validates `matrix` and derives partial distances, exponent and column
    /// weights.
    pub fn new(name: impl Into<String>, matrix: BitMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "kernel must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if matrix.rows() < 2 {
            return Err(Error::NotPolarizing("side length must be at least 2".into()));
        }
        if matrix.is_upper_triangular() {
            return Err(Error::NotPolarizing("matrix is upper triangular".into()));
        }
        let partial_distances = partial_distances(&matrix)?;
        let exponent = exponent_from_distances(&partial_distances);
        if exponent <= 0.0 {
            return Err(Error::NotPolarizing(
                "all partial distances are 1 (rate of polarization is zero)".into(),
            ));
        }
        let column_weights = matrix.column_weights();
        Ok(Kernel {
            name: name.into(),
            matrix,
            partial_distances,
            exponent,
            column_weights,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Side length `l`.
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn partial_distances(&self) -> &[usize] {
        &self.partial_distances
    }

    /// Rate of polarization `E(G)`.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn column_weights(&self) -> &[usize] {
        &self.column_weights
    }

    pub fn max_column_weight(&self) -> usize {
        self.column_weights.iter().copied().max().unwrap_or(0)
    }

    /// `sum log w_i / sum log D_i`, the large-`n`, small-`delta` limit of the
    /// most-common-weight sparsity order.
    pub fn sparsity_ratio(&self) -> f64 {
        let num: f64 = self.column_weights.iter().map(|&w| (w as f64).ln()).sum();
        let den: f64 = self.partial_distances.iter().map(|&d| (d as f64).ln()).sum();
        num / den
    }

    /// `log_l(max_i w_i) / E(G)`, the limit of the maximum-weight sparsity order.
    pub fn max_weight_ratio(&self) -> f64 {
        let l = self.size() as f64;
        (self.max_column_weight() as f64).ln() / l.ln() / self.exponent
    }

    /// Geometric mean of the column weights.
    pub fn geometric_mean_weight(&self) -> f64 {
        let l = self.size() as f64;
        let s: f64 = self.column_weights.iter().map(|&w| (w as f64).ln()).sum();
        (s / l).exp()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("matrix", &self.matrix.to_nested())
            .field("partial_distances", &self.partial_distances)
            .field("exponent", &self.exponent)
            .finish()
    }
}

/// JSON-friendly view of a kernel.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KernelSummary {
    pub name: String,
    pub l: usize,
    pub matrix: Vec<Vec<u8>>,
    pub partial_distances: Vec<usize>,
    pub exponent: f64,
    pub column_weights: Vec<usize>,
    pub sparsity_ratio: f64,
}

impl From<&Kernel> for KernelSummary {
    fn from(k: &Kernel) -> Self {
        KernelSummary {
            name: k.name.clone(),
            l: k.size(),
            matrix: k.matrix.to_nested(),
            partial_distances: k.partial_distances.clone(),
            exponent: k.exponent,
            column_weights: k.column_weights.clone(),
            sparsity_ratio: k.sparsity_ratio(),
        }
    }
}

/// Square, invertible, literally not upper triangular, and with a positive
/// rate of polarization. The last condition rejects permutation-like
/// matrices whose partial distances are all 1.
pub fn validate_kernel(m: &BitMatrix) -> Result<bool> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "kernel must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.rows() < 2 || m.is_upper_triangular() || !m.is_invertible() {
        return Ok(false);
    }
    let d = partial_distances(m)?;
    Ok(d.iter().any(|&x| x > 1))
}

/// `D_i = d_H(row_i, span(row_{i+1}, ..., row_l))`, with `D_l` the weight of
/// the last row.
pub fn partial_distances(m: &BitMatrix) -> Result<Vec<usize>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "kernel must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_invertible() {
        return Err(Error::Singular);
    }
    let rows = m.row_vecs();
    Ok((0..rows.len())
        .map(|i| coset_min_weight(&rows[i], &rows[i + 1..]))
        .collect())
}

fn exponent_from_distances(d: &[usize]) -> f64 {
    let l = d.len() as f64;
    d.iter().map(|&x| (x as f64).ln() / l.ln()).sum::<f64>() / l
}

/// `E(G) = (1/l) sum_i log_l D_i`.
pub fn rate_of_polarization(m: &BitMatrix) -> Result<f64> {
    Ok(exponent_from_distances(&partial_distances(m)?))
}

pub fn g2() -> Kernel {
    Kernel::new("G2", BitMatrix::from_array(&[[1, 0], [1, 1]])).expect("G2 is polarizing")
}

/// The 3x3 kernel with the best exponent.
pub fn g3_star() -> Kernel {
    Kernel::new(
        "G3*",
        BitMatrix::from_array(&[[0, 1, 0], [1, 1, 0], [1, 0, 1]]),
    )
    .expect("G3* is polarizing")
}

/// The 4x4 kernel with the best exponent.
pub fn g4_star() -> Kernel {
    Kernel::new(
        "G4*",
        BitMatrix::from_array(&[[1, 0, 0, 0], [0, 1, 0, 1], [0, 0, 1, 1], [1, 1, 1, 1]]),
    )
    .expect("G4* is polarizing")
}

/// The sparsest 3x3 kernel (smallest most-common-weight order).
pub fn g3_prime() -> Kernel {
    Kernel::new(
        "G3'",
        BitMatrix::from_array(&[[1, 0, 0], [1, 1, 0], [1, 0, 1]]),
    )
    .expect("G3' is polarizing")
}

/// The sparsest 4x4 kernel.
pub fn g4_prime() -> Kernel {
    thm8_kernel(4).expect("l = 4 is valid").with_name("G4'")
}

/// `[[I, 0], [I, I]]` with `l/2`-sized identity blocks; column weights are at
/// most 2.
pub fn prop1_kernel(l: usize) -> Result<Kernel> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::Domain(format!("prop1 kernel needs an even l >= 2, got {l}")));
    }
    let h = l / 2;
    let mut m = BitMatrix::zeros(l, l);
    for i in 0..h {
        m.set(i, i, true);
        m.set(h + i, i, true);
        m.set(h + i, h + i, true);
    }
    Kernel::new(format!("prop1:{l}"), m)
}

/// `[[1, 0], [1, I]]`: first column all ones, identity elsewhere. Column
/// weights `(l, 1, ..., 1)`, partial distances `(1, 2, ..., 2)`.
pub fn thm8_kernel(l: usize) -> Result<Kernel> {
    if l < 2 {
        return Err(Error::Domain(format!("thm8 kernel needs l >= 2, got {l}")));
    }
    let mut m = BitMatrix::identity(l);
    for r in 1..l {
        m.set(r, 0, true);
    }
    Kernel::new(format!("thm8:{l}"), m)
}

/// The five fixed kernels, in table order.
pub fn catalog() -> Vec<Kernel> {
    vec![g2(), g3_star(), g4_star(), g3_prime(), g4_prime()]
}

/// Resolves a kernel by name: `G2`, `G3*`/`g3star`, `G4*`/`g4star`,
/// `G3'`/`g3prime`, `G4'`/`g4prime`, `prop1:<l>`, `thm8:<l>`.
pub fn by_name(name: &str) -> Result<Kernel> {
    let key = name.trim().to_ascii_lowercase();
    let fixed = match key.as_str() {
        "g2" => Some(g2()),
        "g3*" | "g3star" => Some(g3_star()),
        "g4*" | "g4star" => Some(g4_star()),
        "g3'" | "g3prime" => Some(g3_prime()),
        "g4'" | "g4prime" => Some(g4_prime()),
        _ => None,
    };
    if let Some(k) = fixed {
        return Ok(k);
    }
    let parse_l = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad kernel size in {name:?}")))
    };
    if let Some(l) = key.strip_prefix("prop1:") {
        return prop1_kernel(parse_l(l)?);
    }
    if let Some(l) = key.strip_prefix("thm8:") {
        return thm8_kernel(parse_l(l)?);
    }
    Err(Error::Parse(format!("unknown kernel {name:?}")))
}

#[derive(Clone, Copy)]
struct Candidate {
    mask: u32,
    ratio: f64,
}

impl Candidate {
    /// Ratio first; ratios within 1e-12 relative count as equal and fall back
    /// to the row-major bit string, which orders exactly like `mask`.
    fn cmp(&self, other: &Candidate) -> Ordering {
        let tol = 1e-12 * self.ratio.abs().max(other.ratio.abs()).max(1.0);
        if (self.ratio - other.ratio).abs() <= tol {
            self.mask.cmp(&other.mask)
        } else {
            self.ratio.total_cmp(&other.ratio)
        }
    }
}

fn matrix_from_mask(l: usize, mask: u32) -> BitMatrix {
    let total = l * l;
    let rows = (0..l)
        .map(|r| {
            let bits: Vec<bool> = (0..l)
                .map(|c| (mask >> (total - 1 - (r * l + c))) & 1 == 1)
                .collect();
            BitVec::from_bools(&bits)
        })
        .collect();
    BitMatrix::from_rows(rows).expect("rows have equal length")
}

/// Exhaustive search over all `2^(l^2)` matrices for the polarizing kernel
/// with the smallest sparsity ratio. Ties go to the lexicographically
/// smallest row-major bit string.
pub fn search_min_sparsity(l: usize) -> Result<(Kernel, f64)> {
    if !(2..=MAX_SEARCH_SIDE).contains(&l) {
        return Err(Error::Unsupported(format!(
            "exhaustive search supports 2 <= l <= {MAX_SEARCH_SIDE}, got {l}"
        )));
    }
    let total = 1u32 << (l * l);
    let best = (0..total)
        .into_par_iter()
        .filter_map(|mask| {
            let m = matrix_from_mask(l, mask);
            if !validate_kernel(&m).ok()? {
                return None;
            }
            let k = Kernel::new("search", m).ok()?;
            Some(Candidate {
                mask,
                ratio: k.sparsity_ratio(),
            })
        })
        .min_by(|a, b| a.cmp(b))
        .ok_or_else(|| Error::Infeasible(format!("no polarizing {l}x{l} kernel")))?;
    let kernel = Kernel::new(format!("search:{l}"), matrix_from_mask(l, best.mask))?;
    Ok((kernel, best.ratio))
}

/// Sparsity ratio of `thm8_kernel(l)` in closed form: `log2(l) / (l - 1)`.
pub fn thm8_ratio(l: usize) -> f64 {
    (l as f64).log2() / (l as f64 - 1.0)
}

/// Smallest `l` such that `thm8_kernel(l)` has
/// `sparsity_ratio / (1 - delta) < r`.
pub fn theorem8_min_l(r: f64, delta: f64) -> Result<usize> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("r must lie in (0, 1], got {r}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let mut l = 2usize;
    while thm8_ratio(l) / (1.0 - delta) >= r {
        l += 1;
    }
    Ok(l)
}
