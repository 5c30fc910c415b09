//! Sparse parity-check matrices from a regular socket ensemble, and
//! syndrome belief propagation.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crowd::binary_entropy;
use crate::error::{Error, Result};
use crate::gf2::{BitMatrix, BitVec};

/// Default constant `c` in the row weight `ceil(c log2(1/zeta))`.
pub const DEFAULT_ROW_WEIGHT_FACTOR: f64 = 2.0;
/// Row weights are raised until the average column degree reaches this.
pub const DEFAULT_MIN_COLUMN_DEGREE: f64 = 3.0;

/// `m x n` parity-check matrix stored by rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LdpcMatrix {
    pub n: usize,
    pub row_weight: usize,
    pub rows: Vec<Vec<usize>>,
}

impl LdpcMatrix {
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn column_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for row in &self.rows {
            for &v in row {
                d[v] += 1;
            }
        }
        d
    }

    /// `H x` over GF(2).
    pub fn syndrome(&self, x: &[bool]) -> Vec<bool> {
        self.rows
            .iter()
            .map(|row| row.iter().fold(false, |acc, &v| acc ^ x[v]))
            .collect()
    }

    pub fn to_dense(&self) -> BitMatrix {
        let rows = self.rows.iter().map(|r| BitVec::from_support(self.n, r)).collect();
        BitMatrix::from_rows(rows).expect("rows share length n")
    }
}

/// `m = ceil(n (H_b(p) + zeta (1 - H_b(p))))`.
pub fn ldpc_rows(n: usize, zeta: f64, p: f64) -> usize {
    let h = binary_entropy(p);
    (n as f64 * (h + zeta * (1.0 - h))).ceil() as usize
}

/// `ceil(c log2(1/zeta))`, raised so that `m w_r / n >= min_column_degree`.
pub fn ldpc_row_weight(n: usize, m: usize, zeta: f64, c: f64, min_column_degree: f64) -> usize {
    let base = (c * (1.0 / zeta).log2()).ceil().max(1.0) as usize;
    let floor = if m == 0 { 0 } else { (min_column_degree * n as f64 / m as f64).ceil() as usize };
    base.max(floor)
}

fn check_params(n: usize, zeta: f64, p: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("item count must be positive".into()));
    }
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::Domain(format!("zeta must lie in (0, 1), got {zeta}")));
    }
    if !(0.0..0.5).contains(&p) {
        return Err(Error::Domain(format!("p must lie in [0, 1/2), got {p}")));
    }
    Ok(())
}

/// Samples the regular ensemble with the default row-weight rule.
pub fn gen_ldpc(n: usize, zeta: f64, p: f64, seed: u64) -> Result<LdpcMatrix> {
    check_params(n, zeta, p)?;
    let m = ldpc_rows(n, zeta, p);
    let w_r = ldpc_row_weight(n, m, zeta, DEFAULT_ROW_WEIGHT_FACTOR, DEFAULT_MIN_COLUMN_DEGREE);
    gen_ldpc_with(n, m, w_r, seed)
}

/// `m x n` matrix with every row of weight exactly `w_r` and column degrees
/// differing by at most one, from a seeded socket permutation. Repeated
/// edges inside a row are removed by swapping sockets with other rows.
pub fn gen_ldpc_with(n: usize, m: usize, w_r: usize, seed: u64) -> Result<LdpcMatrix> {
    if m == 0 || m >= n {
        return Err(Error::Infeasible(format!("need 0 < m < n, got m = {m}, n = {n}")));
    }
    if w_r == 0 || w_r > n {
        return Err(Error::Infeasible(format!("row weight {w_r} impossible with {n} columns")));
    }
    let edges = m * w_r;
    if edges.div_ceil(n) > m {
        return Err(Error::Infeasible("column degree would exceed the row count".into()));
    }
    let mut sockets: Vec<usize> = (0..edges).map(|e| e % n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sockets.shuffle(&mut rng);

    let row_has = |s: &[usize], row: usize, v: usize, skip: usize| {
        (row * w_r..(row + 1) * w_r).any(|i| i != skip && s[i] == v)
    };
    let max_attempts = 1000 * w_r + 10_000;
    for row in 0..m {
        for pos in row * w_r..(row + 1) * w_r {
            let mut attempts = 0;
            while row_has(&sockets, row, sockets[pos], pos) {
                attempts += 1;
                if attempts > max_attempts {
                    return Err(Error::Infeasible("could not remove repeated edges".into()));
                }
                let other = rng.gen_range(0..edges);
                let orow = other / w_r;
                if orow == row {
                    continue;
                }
                let (a, b) = (sockets[pos], sockets[other]);
                if !row_has(&sockets, row, b, pos) && !row_has(&sockets, orow, a, other) {
                    sockets.swap(pos, other);
                }
            }
        }
    }
    let rows = sockets
        .chunks(w_r)
        .map(|c| {
            let mut r = c.to_vec();
            r.sort_unstable();
            r
        })
        .collect();
    Ok(LdpcMatrix { n, row_weight: w_r, rows })
}

/// Outcome of syndrome decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpResult {
    pub estimate: Vec<bool>,
    pub iterations: usize,
    pub converged: bool,
}

/// Number of BP iterations used by default.
pub const DEFAULT_BP_ITERATIONS: usize = 100;
const LLR_CLAMP: f64 = 40.0;

/// Syndrome belief propagation with edges laid out for flooding updates.
#[derive(Debug, Clone)]
pub struct SyndromeDecoder {
    n: usize,
    check_ptr: Vec<usize>,
    edge_var: Vec<usize>,
    var_ptr: Vec<usize>,
    var_edges: Vec<usize>,
}

impl SyndromeDecoder {
    pub fn new(h: &LdpcMatrix) -> Self {
        let mut check_ptr = vec![0];
        let mut edge_var = Vec::new();
        for row in &h.rows {
            edge_var.extend_from_slice(row);
            check_ptr.push(edge_var.len());
        }
        let mut deg = vec![0usize; h.n];
        for &v in &edge_var {
            deg[v] += 1;
        }
        let mut var_ptr = vec![0usize; h.n + 1];
        for v in 0..h.n {
            var_ptr[v + 1] = var_ptr[v] + deg[v];
        }
        let mut fill = var_ptr.clone();
        let mut var_edges = vec![0usize; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v]] = e;
            fill[v] += 1;
        }
        SyndromeDecoder { n: h.n, check_ptr, edge_var, var_ptr, var_edges }
    }

    fn satisfied(&self, x: &[bool], s: &[bool]) -> bool {
        (0..s.len()).all(|c| {
            self.edge_var[self.check_ptr[c]..self.check_ptr[c + 1]]
                .iter()
                .fold(false, |acc, &v| acc ^ x[v])
                == s[c]
        })
    }

    /// Most likely `x ~ Ber(p)^n` with `H x = s`, by sum-product with the
    /// prior log-ratio `ln((1-p)/p)`. All checks update, then all variables;
    /// stops as soon as the hard decision satisfies the syndrome.
    pub fn decode(&self, s: &[bool], p: f64, max_iter: usize) -> BpResult {
        assert_eq!(s.len() + 1, self.check_ptr.len(), "syndrome length must equal m");
        let prior = if p <= 0.0 {
            LLR_CLAMP
        } else {
            ((1.0 - p) / p).ln().min(LLR_CLAMP)
        };
        let mut x = vec![prior < 0.0; self.n];
        if self.satisfied(&x, s) {
            return BpResult { estimate: x, iterations: 0, converged: true };
        }
        let edges = self.edge_var.len();
        let mut v2c = vec![prior; edges];
        let mut c2v = vec![0.0f64; edges];
        let mut t = vec![0.0f64; edges];
        for it in 1..=max_iter {
            for (c, &sc) in s.iter().enumerate() {
                let (lo, hi) = (self.check_ptr[c], self.check_ptr[c + 1]);
                let mut zeros = 0usize;
                let mut prod = if sc { -1.0 } else { 1.0 };
                for e in lo..hi {
                    t[e] = (v2c[e] / 2.0).tanh();
                    if t[e] == 0.0 {
                        zeros += 1;
                    } else {
                        prod *= t[e];
                    }
                }
                for e in lo..hi {
                    let excl = match (zeros, t[e] == 0.0) {
                        (0, _) => prod / t[e],
                        (1, true) => prod,
                        _ => 0.0,
                    };
                    let excl = excl.clamp(-0.999_999_999_999, 0.999_999_999_999);
                    c2v[e] = (2.0 * excl.atanh()).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
            }
            for (v, xv) in x.iter_mut().enumerate() {
                let es = &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]];
                let total: f64 = prior + es.iter().map(|&e| c2v[e]).sum::<f64>();
                *xv = total < 0.0;
                for &e in es {
                    v2c[e] = (total - c2v[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
            }
            if self.satisfied(&x, s) {
                return BpResult { estimate: x, iterations: it, converged: true };
            }
        }
        BpResult { estimate: x, iterations: max_iter, converged: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_count_example() {
        assert_eq!(ldpc_rows(10_000, 0.25, 0.05), 4648);
    }

    #[test]
    fn exact_row_weights_and_no_repeats() {
        let h = gen_ldpc(2000, 0.25, 0.05, 3).unwrap();
        for row in &h.rows {
            assert_eq!(row.len(), h.row_weight);
            assert!(row.windows(2).all(|w| w[0] < w[1]));
        }
        let d = h.column_degrees();
        let (lo, hi) = (d.iter().min().unwrap(), d.iter().max().unwrap());
        assert!(hi - lo <= 1);
        assert!(h.to_dense().rank() as f64 >= 0.95 * h.m() as f64);
    }

    #[test]
    fn infeasible_shapes() {
        assert!(gen_ldpc_with(10, 10, 3, 0).is_err());
        assert!(gen_ldpc_with(10, 5, 11, 0).is_err());
        assert!(gen_ldpc(100, 1.5, 0.05, 0).is_err());
    }

    #[test]
    fn bp_recovers_sparse_inputs() {
        let n = 4000;
        let h = gen_ldpc(n, 0.3, 0.05, 11).unwrap();
        let dec = SyndromeDecoder::new(&h);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ok = 0;
        for _ in 0..10 {
            let x: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.05)).collect();
            let r = dec.decode(&h.syndrome(&x), 0.05, DEFAULT_BP_ITERATIONS);
            ok += (r.estimate == x) as usize;
        }
        assert!(ok >= 9, "{ok}/10");
    }

    #[test]
    fn zero_prior_returns_zero_vector() {
        let h = gen_ldpc(500, 0.3, 0.0, 1).unwrap();
        let dec = SyndromeDecoder::new(&h);
        let r = dec.decode(&vec![false; h.m()], 0.0, 10);
        assert!(r.converged && r.iterations == 0 && r.estimate.iter().all(|&b| !b));
    }
}
