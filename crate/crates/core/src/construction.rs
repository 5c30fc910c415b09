//! Code construction: bit-channel reliabilities, information sets, sparse
//! generators built from Kronecker powers, and column splitting.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{ratio, serde_ratio};
use crate::gf2::{in_span, BitMatrix, BitVec};
use crate::kernels::{Kernel, KernelSummary};
use crate::simulate::channel::{trial_rng, ChannelModel};
use crate::simulate::sc::ScDecoder;

/// Default number of Monte Carlo trials for BSC reliability estimates.
pub const DEFAULT_BSC_TRIALS: u64 = 100_000;

/// `N = l^n`, refusing sizes that do not fit in memory-addressable indices.
pub fn block_length(l: usize, n: u32) -> Result<usize> {
    (l as u64)
        .checked_pow(n)
        .filter(|&v| v <= 1 << 40)
        .map(|v| v as usize)
        .ok_or_else(|| Error::Unsupported(format!("block length {l}^{n} is too large")))
}

/// Full description of a code: one `N`-length polar block, repeated `n'`
/// times along the block diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    pub kernel: Kernel,
    pub n: u32,
    pub big_n: usize,
    pub delta: f64,
    /// `log2 n' = N^((1 - delta) E)`.
    pub log2_nprime: f64,
    pub k: usize,
    pub info_set: Vec<usize>,
    pub selection_channel: ChannelModel,
}

#[derive(Serialize, Deserialize)]
struct CodeSpecRepr {
    kernel: KernelSummary,
    n: u32,
    #[serde(rename = "N")]
    big_n: usize,
    delta: f64,
    log2_nprime: f64,
    #[serde(rename = "K")]
    k: usize,
    info_set: Vec<usize>,
    selection_channel: ChannelModel,
}

impl Serialize for CodeSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CodeSpecRepr {
            kernel: KernelSummary::from(&self.kernel),
            n: self.n,
            big_n: self.big_n,
            delta: self.delta,
            log2_nprime: self.log2_nprime,
            k: self.k,
            info_set: self.info_set.clone(),
            selection_channel: self.selection_channel,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CodeSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = CodeSpecRepr::deserialize(d)?;
        let rows: Vec<BitVec> = r.kernel.matrix.iter().map(|row| BitVec::from_bits(row)).collect();
        let matrix = BitMatrix::from_rows(rows).map_err(D::Error::custom)?;
        let kernel = Kernel::new(r.kernel.name, matrix).map_err(D::Error::custom)?;
        CodeSpec::new(kernel, r.n, r.delta, r.info_set, r.selection_channel)
            .map_err(D::Error::custom)
    }
}

impl CodeSpec {
    pub fn new(
        kernel: Kernel,
        n: u32,
        delta: f64,
        info_set: Vec<usize>,
        selection_channel: ChannelModel,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        let big_n = block_length(kernel.size(), n)?;
        let mut info_set = info_set;
        info_set.sort_unstable();
        info_set.dedup();
        if info_set.is_empty() {
            return Err(Error::Domain("information set must not be empty".into()));
        }
        if info_set.last().is_some_and(|&i| i >= big_n) {
            return Err(Error::Dimension(format!("information index out of range for N = {big_n}")));
        }
        let log2_nprime = log2_nprime(&kernel, n, delta);
        Ok(CodeSpec {
            k: info_set.len(),
            kernel,
            n,
            big_n,
            delta,
            log2_nprime,
            info_set,
            selection_channel,
        })
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.big_n as f64
    }

    /// Frozen-bit map with every frozen position fixed to zero.
    pub fn frozen_map(&self) -> Vec<Option<bool>> {
        let mut f = vec![Some(false); self.big_n];
        for &i in &self.info_set {
            f[i] = None;
        }
        f
    }

    pub fn generator(&self) -> SparseGenerator {
        build_generator(&self.kernel, self.n, &self.info_set)
            .expect("information set validated at construction")
    }
}

/// `N^((1 - delta) E)` for the kernel's exponent `E`.
pub fn log2_nprime(kernel: &Kernel, n: u32, delta: f64) -> f64 {
    let log2_big_n = n as f64 * (kernel.size() as f64).log2();
    (log2_big_n * (1.0 - delta) * kernel.exponent()).exp2()
}

/// `log2 N' = log2 n' + log2 N`.
pub fn log_blocklength(spec: &CodeSpec) -> f64 {
    spec.log2_nprime + (spec.big_n as f64).log2()
}

/// For every kernel input `i`, the number of unerased-column patterns of
/// each size `s` under which `u_i` stays undetermined. Entry `[i][s]`.
pub fn bec_undetermined_counts(k: &Kernel) -> Vec<Vec<u64>> {
    let l = k.size();
    let g = k.matrix();
    let mut counts = vec![vec![0u64; l + 1]; l];
    for (i, row_counts) in counts.iter_mut().enumerate() {
        let h = l - i;
        let target = BitVec::from_support(h, &[0]);
        for mask in 0u32..(1 << l) {
            let cols: Vec<BitVec> = (0..l)
                .filter(|&c| mask >> c & 1 == 1)
                .map(|c| {
                    let bits: Vec<bool> = (i..l).map(|r| g.get(r, c)).collect();
                    BitVec::from_bools(&bits)
                })
                .collect();
            if !in_span(&target, &cols) {
                row_counts[mask.count_ones() as usize] += 1;
            }
        }
    }
    counts
}

fn eval_bec_polys(counts: &[Vec<u64>], z: f64) -> Vec<f64> {
    let l = counts.len();
    counts
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(s, &c)| c as f64 * z.powi((l - s) as i32) * (1.0 - z).powi(s as i32))
                .sum()
        })
        .collect()
}

/// Erasure probability `f_i(z)` of each kernel input under BEC(`z`).
pub fn bec_bit_channels(k: &Kernel, z: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("erasure probability {z} outside [0, 1]")));
    }
    Ok(eval_bec_polys(&bec_undetermined_counts(k), z))
}

/// Erasure probabilities of all `l^n` bit channels. Index `i` has base-`l`
/// digits `(d_1, ..., d_n)`, most significant first, and takes the value
/// `f_{d_n}(... f_{d_1}(z))`.
pub fn bec_reliabilities(k: &Kernel, n: u32, z: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("erasure probability {z} outside [0, 1]")));
    }
    let total = block_length(k.size(), n)?;
    let counts = bec_undetermined_counts(k);
    let mut cur = vec![z];
    cur.reserve(total);
    for _ in 0..n {
        cur = cur.iter().flat_map(|&v| eval_bec_polys(&counts, v)).collect();
    }
    Ok(cur)
}

/// Per-bit-channel error rates of genie-aided SC over `ch`, estimated from
/// `trials` random messages. Reproducible given `seed`.
pub fn genie_error_estimates(
    k: &Kernel,
    n: u32,
    ch: &ChannelModel,
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let dec = ScDecoder::new(k, n)?;
    let big_n = dec.block_length();
    let counts = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; big_n],
            |mut acc, t| {
                let mut rng = trial_rng(seed, t);
                let u: Vec<bool> = (0..big_n).map(|_| rand::Rng::gen(&mut rng)).collect();
                let x = dec.encode(&u);
                let y = ch.transmit_with(&x, &mut rng);
                let report = dec.genie(&ch.likelihoods(&y), &u);
                for (a, e) in acc.iter_mut().zip(report.errors) {
                    *a += e as u64;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; big_n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(counts.into_iter().map(|c| c as f64 / trials as f64).collect())
}

/// Genie-aided SC bit error rates over BSC(`q`).
pub fn bsc_reliability_estimates(k: &Kernel, n: u32, q: f64, trials: u64, seed: u64) -> Result<Vec<f64>> {
    genie_error_estimates(k, n, &ChannelModel::bsc(q)?, trials, seed)
}

/// Indices of the `k` smallest values, ties toward the smaller index,
/// returned in increasing order.
pub fn select_info_set(reliabilities: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > reliabilities.len() {
        return Err(Error::Dimension(format!(
            "cannot select {k} of {} bit channels",
            reliabilities.len()
        )));
    }
    let mut idx: Vec<usize> = (0..reliabilities.len()).collect();
    idx.sort_by(|&a, &b| reliabilities[a].total_cmp(&reliabilities[b]).then(a.cmp(&b)));
    let mut chosen = idx[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Column-sparse `K x cols` generator matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseGenerator {
    pub rows: usize,
    pub columns: Vec<Vec<usize>>,
}

impl SparseGenerator {
    /// Checks that every list is strictly increasing and below `rows`.
    pub fn new(rows: usize, columns: Vec<Vec<usize>>) -> Result<Self> {
        for (j, col) in columns.iter().enumerate() {
            if col.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Parse(format!("column {j} is not strictly increasing")));
            }
            if col.last().is_some_and(|&r| r >= rows) {
                return Err(Error::Dimension(format!("column {j} references a row >= {rows}")));
            }
        }
        Ok(SparseGenerator { rows, columns })
    }

    pub fn from_dense(m: &BitMatrix) -> Self {
        let columns = (0..m.cols()).map(|c| m.column(c).support()).collect();
        SparseGenerator { rows: m.rows(), columns }
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        self.columns.iter().map(Vec::len).collect()
    }

    pub fn max_column_weight(&self) -> usize {
        self.columns.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.rows, self.cols());
        for (j, col) in self.columns.iter().enumerate() {
            for &r in col {
                m.set(r, j, true);
            }
        }
        m
    }

    /// `u G` for a message of length `rows`.
    pub fn encode(&self, u: &BitVec) -> BitVec {
        assert_eq!(u.len(), self.rows, "message length must equal the row count");
        let bits: Vec<bool> = self
            .columns
            .iter()
            .map(|col| col.iter().fold(false, |acc, &r| acc ^ u.get(r)))
            .collect();
        BitVec::from_bools(&bits)
    }
}

/// Rows `info_set` of the `n`-th Kronecker power of the kernel, stored by
/// column. Only the nonzero entries of the selected rows are visited.
pub fn build_generator(k: &Kernel, n: u32, info_set: &[usize]) -> Result<SparseGenerator> {
    let l = k.size();
    let big_n = block_length(l, n)?;
    if info_set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("information set must be strictly increasing".into()));
    }
    if info_set.last().is_some_and(|&i| i >= big_n) {
        return Err(Error::Dimension(format!("information index out of range for N = {big_n}")));
    }
    let row_supports: Vec<Vec<usize>> = (0..l).map(|r| k.matrix().row(r).support()).collect();
    let mut columns = vec![Vec::new(); big_n];
    let mut digits = vec![0usize; n as usize];
    for (pos, &i) in info_set.iter().enumerate() {
        let mut rem = i;
        for d in digits.iter_mut().rev() {
            *d = rem % l;
            rem /= l;
        }
        let mut support = vec![0usize];
        for &d in &digits {
            support = support
                .iter()
                .flat_map(|&prefix| row_supports[d].iter().map(move |&c| prefix * l + c))
                .collect();
        }
        for c in support {
            columns[c].push(pos);
        }
    }
    Ok(SparseGenerator { rows: info_set.len(), columns })
}

/// Outcome of [`split`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub w_ub: usize,
    pub original_cols: usize,
    pub extra_cols: usize,
    /// `extra_cols / original_cols`.
    #[serde(rename = "R", with = "serde_ratio")]
    pub r: BigRational,
    pub piece_map: Vec<Vec<usize>>,
}

/// Number of columns a weight-`w` column becomes.
pub fn piece_count(w: usize, w_ub: usize) -> usize {
    w.div_ceil(w_ub).max(1)
}

/// Replaces every column heavier than `w_ub` by consecutive pieces of `w_ub`
/// rows each, taken in increasing row order.
pub fn split(g: &SparseGenerator, w_ub: usize) -> Result<(SparseGenerator, SplitReport)> {
    if w_ub == 0 {
        return Err(Error::Domain("w_ub must be at least 1".into()));
    }
    let mut columns = Vec::with_capacity(g.cols());
    let mut piece_map = Vec::with_capacity(g.cols());
    for col in &g.columns {
        let start = columns.len();
        if col.is_empty() {
            columns.push(Vec::new());
        } else {
            columns.extend(col.chunks(w_ub).map(<[usize]>::to_vec));
        }
        piece_map.push((start..columns.len()).collect());
    }
    let original_cols = g.cols();
    let extra_cols = columns.len() - original_cols;
    let r = if original_cols == 0 {
        BigRational::zero()
    } else {
        ratio(BigUint::from(extra_cols), BigUint::from(original_cols))
    };
    let report = SplitReport { w_ub, original_cols, extra_cols, r, piece_map };
    Ok((SparseGenerator { rows: g.rows, columns }, report))
}

/// XOR of each original column's pieces, recovering the unsplit codeword.
pub fn collapse_codeword(c: &BitVec, piece_map: &[Vec<usize>]) -> BitVec {
    let bits: Vec<bool> = piece_map
        .iter()
        .map(|pieces| pieces.iter().fold(false, |acc, &p| acc ^ c.get(p)))
        .collect();
    BitVec::from_bools(&bits)
}

/// Builds a code for `ch` at the given rate: `K = round(rate N)`. BEC
/// reliabilities are exact; BSC uses `trials` genie-aided SC runs.
pub fn construct(
    kernel: &Kernel,
    n: u32,
    ch: &ChannelModel,
    rate: f64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<CodeSpec> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Domain(format!("rate must lie in (0, 1], got {rate}")));
    }
    let big_n = block_length(kernel.size(), n)?;
    let k = (rate * big_n as f64).round() as usize;
    if k == 0 {
        return Err(Error::Domain(format!("rate {rate} gives no information bits at N = {big_n}")));
    }
    let rel = match *ch {
        ChannelModel::Bec(z) => bec_reliabilities(kernel, n, z)?,
        ChannelModel::Bsc(_) => genie_error_estimates(kernel, n, ch, trials, seed)?,
    };
    let info = select_info_set(&rel, k)?;
    CodeSpec::new(kernel.clone(), n, delta, info, *ch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{catalog, g2, g4_star};

    #[test]
    fn log_blocklength_example() {
        let spec = CodeSpec::new(g2(), 8, 0.1, vec![255], ChannelModel::Bec(0.5)).unwrap();
        assert!((log_blocklength(&spec) - (256f64.powf(0.45) + 8.0)).abs() < 1e-12);
        assert!((log_blocklength(&spec) - 20.13).abs() < 0.01);
    }

    #[test]
    fn g2_bit_channels() {
        for z in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let f = bec_bit_channels(&g2(), z).unwrap();
            assert!((f[0] - (2.0 * z - z * z)).abs() < 1e-15);
            assert!((f[1] - z * z).abs() < 1e-15);
        }
        assert!(bec_bit_channels(&g2(), 1.5).is_err());
    }

    #[test]
    fn conservation_and_extremes() {
        for k in catalog() {
            assert!(bec_bit_channels(&k, 0.0).unwrap().iter().all(|&v| v == 0.0));
            assert!(bec_bit_channels(&k, 1.0).unwrap().iter().all(|&v| v == 1.0));
            let f = bec_bit_channels(&k, 0.3).unwrap();
            let mean = f.iter().sum::<f64>() / f.len() as f64;
            assert!((mean - 0.3).abs() < 1e-12, "{}", k.name());
        }
    }

    #[test]
    fn reliabilities_two_levels() {
        let r = bec_reliabilities(&g2(), 2, 0.5).unwrap();
        let want = [0.9375, 0.5625, 0.4375, 0.0625];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(select_info_set(&r, 1).unwrap(), vec![3]);
        let r = bec_reliabilities(&g2(), 10, 0.5).unwrap();
        assert!(r.iter().filter(|&&v| v < 1e-3).count() >= 300);
    }

    #[test]
    fn info_set_selection() {
        assert_eq!(select_info_set(&[0.9, 0.1, 0.5, 0.1], 2).unwrap(), vec![1, 3]);
        assert!(select_info_set(&[0.9, 0.1], 0).unwrap().is_empty());
        assert!(select_info_set(&[0.9], 2).is_err());
    }

    #[test]
    fn generator_examples() {
        let g = build_generator(&g2(), 1, &[0, 1]).unwrap();
        assert_eq!(g.columns, vec![vec![0, 1], vec![1]]);
        let g = build_generator(&g2(), 2, &[3]).unwrap();
        assert_eq!(g.columns, vec![vec![0]; 4]);
        let full: Vec<usize> = (0..64).collect();
        let g = build_generator(&g4_star(), 3, &full).unwrap();
        assert_eq!(g.to_dense(), g4_star().matrix().kron_power(3));
    }

    #[test]
    fn split_examples() {
        let g = SparseGenerator::new(2, vec![vec![0, 1]]).unwrap();
        let (s, rep) = split(&g, 1).unwrap();
        assert_eq!(s.columns, vec![vec![0], vec![1]]);
        assert_eq!(rep.piece_map, vec![vec![0, 1]]);

        let full: Vec<usize> = (0..16).collect();
        let g = build_generator(&g2(), 4, &full).unwrap();
        let (s, rep) = split(&g, 4).unwrap();
        assert_eq!(crate::exact::format_ratio(&rep.r), "7/16");
        assert_eq!(rep.extra_cols, 7);
        assert!(s.max_column_weight() <= 4);
        let (_, again) = split(&s, 4).unwrap();
        assert_eq!(again.extra_cols, 0);

        let (same, rep) = split(&g, 16).unwrap();
        assert_eq!(same, g);
        assert!(rep.r.is_zero());
        assert!(split(&g, 0).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = construct(&g2(), 4, &ChannelModel::Bec(0.5), 0.5, 0.1, 1, 0).unwrap();
        assert_eq!(spec.k, 8);
        let json = serde_json::to_string(&spec).unwrap();
        let back: CodeSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["N"], 16);
        assert_eq!(v["K"], 8);
        assert_eq!(v["selection_channel"], "bec:0.5");
    }
}
