//! Crowdsourced label learning with XOR queries: labels are compressed by a
//! sparse parity-check matrix, the syndrome is protected by a split polar
//! LDGM code, and each code bit becomes one query to a noisy worker.

pub mod ldpc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{bec_reliabilities, build_generator, genie_error_estimates, piece_count, split, CodeSpec, SparseGenerator};
use crate::error::{Error, Result};
use crate::kernels::{g2, Kernel};
use crate::simulate::channel::{trial_rng, ChannelModel, Symbol};
use crate::simulate::split_combine_decode;

pub use ldpc::{gen_ldpc, gen_ldpc_with, LdpcMatrix, SyndromeDecoder};

/// `H_b(p)` in bits, with `H_b(0) = H_b(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// `n H_b(p) / (1 - H_b(q))`: fewest queries any scheme can use with
/// BSC(`q`) workers.
pub fn lower_bound_m_bsc(n: usize, p: f64, q: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&q) {
        return Err(Error::Domain(format!("q must lie in [0, 1/2), got {q}")));
    }
    Ok(n as f64 * binary_entropy(p) / (1.0 - binary_entropy(q)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuerySchemeParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub zeta: f64,
    pub seed: u64,
}

impl QuerySchemeParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("item count must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.p) {
            return Err(Error::Domain(format!("p must lie in [0, 1/2), got {}", self.p)));
        }
        if !(0.0..0.5).contains(&self.q) {
            return Err(Error::Domain(format!("q must lie in [0, 1/2), got {}", self.q)));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::Domain(format!("zeta must lie in (0, 1), got {}", self.zeta)));
        }
        Ok(())
    }
}

/// Genie-aided SC runs used to rank the LDGM bit channels.
pub const DEFAULT_SELECTION_TRIALS: u64 = 20_000;

/// How bit channels of the LDGM chunks are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Erasure recursion started from the Bhattacharyya parameter `2 sqrt(q(1-q))`.
    Bhattacharyya,
    /// Genie-aided SC error rates from this many trials.
    MonteCarlo { trials: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdConfig {
    /// LDGM rate as a fraction of the worker channel capacity.
    pub ldgm_fraction: f64,
    /// Parity checks are at least this multiple of `n H_b(p)`.
    pub ldpc_redundancy: f64,
    pub row_weight_factor: f64,
    pub min_column_degree: f64,
    pub bp_iterations: usize,
    /// Polar level of each chunk; chosen automatically when absent.
    pub n_polar: Option<u32>,
    /// Column weight threshold; tuned to the rate target when absent.
    pub w_ub: Option<usize>,
    /// When set (and `w_ub` is not), the threshold is
    /// `ceil(log2(design length)^(1 + epsilon))` instead of being tuned.
    pub w_ub_epsilon: Option<f64>,
    /// Largest share of columns splitting may add when choosing the level.
    pub max_fill: f64,
    pub selection: Selection,
}

impl Default for CrowdConfig {
    fn default() -> Self {
        CrowdConfig {
            ldgm_fraction: 0.8,
            ldpc_redundancy: 1.15,
            row_weight_factor: ldpc::DEFAULT_ROW_WEIGHT_FACTOR,
            min_column_degree: ldpc::DEFAULT_MIN_COLUMN_DEGREE,
            bp_iterations: ldpc::DEFAULT_BP_ITERATIONS,
            n_polar: None,
            w_ub: None,
            w_ub_epsilon: None,
            max_fill: 0.05,
            selection: Selection::MonteCarlo { trials: DEFAULT_SELECTION_TRIALS },
        }
    }
}

/// One polar block of the LDGM code.
#[derive(Debug, Clone, PartialEq)]
pub struct LdgmChunk {
    pub spec: CodeSpec,
    pub row_offset: usize,
    pub col_offset: usize,
    pub cols: usize,
    /// Local piece indices of each of the `N` unsplit columns.
    pub piece_map: Vec<Vec<usize>>,
}

/// Block-diagonal split polar code carrying `m` message bits.
#[derive(Debug, Clone, PartialEq)]
pub struct LdgmCode {
    pub kernel: Kernel,
    pub n_polar: u32,
    pub chunks: Vec<LdgmChunk>,
    pub gstar: SparseGenerator,
    pub w_ub: usize,
    pub m: usize,
    pub m_prime: usize,
    /// `m / (fraction C)`.
    pub design_m_prime: f64,
    pub channel: ChannelModel,
}

fn ranking(kernel: &Kernel, n: u32, ch: &ChannelModel, sel: Selection, seed: u64) -> Result<Vec<f64>> {
    match (sel, *ch) {
        (_, ChannelModel::Bec(z)) => bec_reliabilities(kernel, n, z),
        (Selection::Bhattacharyya, ChannelModel::Bsc(q)) => {
            bec_reliabilities(kernel, n, 2.0 * (q * (1.0 - q)).sqrt())
        }
        (Selection::MonteCarlo { trials }, _) => genie_error_estimates(kernel, n, ch, trials, seed),
    }
}

/// Chooses the largest level whose unsplit chunks fit under the design
/// length with at most `max_fill` left for splitting.
fn choose_level(m: usize, design: f64, cfg: &CrowdConfig) -> Result<(u32, usize)> {
    let fits = |n: u32| -> Option<usize> {
        let big_n = 1usize << n;
        let chunks = (design / big_n as f64).floor() as usize;
        let ok = chunks > 0 && m.div_ceil(chunks) <= big_n && design / (chunks * big_n) as f64 - 1.0 <= cfg.max_fill;
        ok.then_some(chunks)
    };
    if let Some(n) = cfg.n_polar {
        let big_n = 1usize << n;
        let chunks = ((design / big_n as f64).floor() as usize).max(m.div_ceil(big_n));
        return Ok((n, chunks.max(1)));
    }
    (1..=16)
        .rev()
        .find_map(|n| fits(n).map(|c| (n, c)))
        .ok_or_else(|| Error::Infeasible("no chunk length meets the rate target".into()))
}

/// Builds the LDGM code for `m` message bits over `ch`.
pub fn design_ldgm(m: usize, ch: &ChannelModel, cfg: &CrowdConfig, seed: u64) -> Result<LdgmCode> {
    if m == 0 {
        return Err(Error::Domain("message length must be positive".into()));
    }
    if !(cfg.ldgm_fraction > 0.0 && cfg.ldgm_fraction <= 1.0) {
        return Err(Error::Domain("ldgm_fraction must lie in (0, 1]".into()));
    }
    let rate = cfg.ldgm_fraction * ch.capacity();
    if rate <= 0.0 {
        return Err(Error::Infeasible("channel has no capacity".into()));
    }
    let design = m as f64 / rate;
    let kernel = g2();
    let (n_polar, n_chunks) = choose_level(m, design, cfg)?;
    let big_n = 1usize << n_polar;
    let rel = ranking(&kernel, n_polar, ch, cfg.selection, seed)?;
    let mut order: Vec<usize> = (0..big_n).collect();
    order.sort_by(|&a, &b| rel[a].total_cmp(&rel[b]).then(a.cmp(&b)));

    let base = m / n_chunks;
    let extra = m % n_chunks;
    let mut gens = Vec::with_capacity(n_chunks);
    for c in 0..n_chunks {
        let k = base + (c < extra) as usize;
        if k > big_n {
            return Err(Error::Infeasible(format!("chunk needs {k} bits but N = {big_n}")));
        }
        let mut info = order[..k].to_vec();
        info.sort_unstable();
        let g = build_generator(&kernel, n_polar, &info)?;
        gens.push((info, g));
    }

    let w_ub = match (cfg.w_ub, cfg.w_ub_epsilon) {
        (Some(0), _) => return Err(Error::Domain("w_ub must be at least 1".into())),
        (Some(w), _) => w,
        (None, Some(eps)) => log_power_w_ub(design, eps)?,
        (None, None) => tune_w_ub(&gens.iter().map(|(_, g)| g.column_weights()).collect::<Vec<_>>(), design),
    };

    let mut chunks = Vec::with_capacity(n_chunks);
    let mut columns = Vec::new();
    let mut row_offset = 0;
    for (info, g) in gens {
        let (s, rep) = split(&g, w_ub)?;
        let col_offset = columns.len();
        columns.extend(s.columns.iter().map(|col| col.iter().map(|&r| r + row_offset).collect::<Vec<_>>()));
        let spec = CodeSpec::new(kernel.clone(), n_polar, 0.5, info, *ch)?;
        chunks.push(LdgmChunk {
            row_offset,
            col_offset,
            cols: s.cols(),
            piece_map: rep.piece_map,
            spec,
        });
        row_offset += g.rows;
    }
    let m_prime = columns.len();
    Ok(LdgmCode {
        kernel,
        n_polar,
        chunks,
        gstar: SparseGenerator { rows: m, columns },
        w_ub,
        m,
        m_prime,
        design_m_prime: design,
        channel: *ch,
    })
}

/// `ceil(log2(len)^(1 + epsilon))`, at least 1.
pub fn log_power_w_ub(len: f64, epsilon: f64) -> Result<usize> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be finite and non-negative, got {epsilon}")));
    }
    Ok(len.max(2.0).log2().powf(1.0 + epsilon).ceil().max(1.0) as usize)
}

/// Smallest threshold whose split column count is closest to `design`.
fn tune_w_ub(weights: &[Vec<usize>], design: f64) -> usize {
    let total = |w: usize| -> usize { weights.iter().flatten().map(|&x| piece_count(x, w)).sum() };
    let max_w = weights.iter().flatten().copied().max().unwrap_or(1).max(1);
    if total(max_w) as f64 >= design {
        return max_w;
    }
    // total(w) is non-increasing in w: find the first w with total(w) <= design.
    let (mut lo, mut hi) = (1usize, max_w);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if total(mid) as f64 <= design {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if lo > 1 && (total(lo - 1) as f64 - design).abs() < (design - total(lo) as f64).abs() {
        lo - 1
    } else {
        lo
    }
}

/// Item sets of the queries: column `j` of `H^T G*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryMatrix {
    pub queries: Vec<Vec<usize>>,
    pub m_prime: usize,
    pub max_items: usize,
}

impl QueryMatrix {
    /// Noise-free answers `X^T (H^T G*)`.
    pub fn responses(&self, x: &[bool]) -> Vec<bool> {
        self.queries
            .iter()
            .map(|items| items.iter().fold(false, |acc, &i| acc ^ x[i]))
            .collect()
    }

    /// One query per line as space-separated item indices.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for q in &self.queries {
            let line: Vec<String> = q.iter().map(usize::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn build_query_matrix(h: &LdpcMatrix, gstar: &SparseGenerator) -> Result<QueryMatrix> {
    if gstar.rows != h.m() {
        return Err(Error::Dimension(format!(
            "generator has {} rows but the parity-check matrix has {}",
            gstar.rows,
            h.m()
        )));
    }
    let mut mark = vec![false; h.n];
    let mut queries = Vec::with_capacity(gstar.cols());
    for col in &gstar.columns {
        let mut touched = Vec::new();
        for &r in col {
            for &v in &h.rows[r] {
                if !mark[v] {
                    touched.push(v);
                }
                mark[v] = !mark[v];
            }
        }
        let mut items: Vec<usize> = touched.into_iter().filter(|&v| mark[v]).collect();
        for &v in &items {
            mark[v] = false;
        }
        items.sort_unstable();
        items.dedup();
        queries.push(items);
    }
    debug_assert!(mark.iter().all(|&b| !b));
    let max_items = queries.iter().map(Vec::len).max().unwrap_or(0);
    Ok(QueryMatrix { m_prime: queries.len(), queries, max_items })
}

/// Everything needed to run trials of the query scheme.
#[derive(Debug, Clone)]
pub struct CrowdScheme {
    pub params: QuerySchemeParams,
    pub config: CrowdConfig,
    pub h: LdpcMatrix,
    pub code: LdgmCode,
    pub queries: QueryMatrix,
    bp: SyndromeDecoder,
}

impl CrowdScheme {
    pub fn build(params: QuerySchemeParams, config: CrowdConfig) -> Result<Self> {
        params.validate()?;
        let hb = binary_entropy(params.p);
        let per_item = (hb + params.zeta * (1.0 - hb)).max(config.ldpc_redundancy * hb);
        let m = (params.n as f64 * per_item).ceil() as usize;
        let w_r = ldpc::ldpc_row_weight(params.n, m, params.zeta, config.row_weight_factor, config.min_column_degree);
        let h = gen_ldpc_with(params.n, m, w_r, params.seed)?;
        let ch = ChannelModel::bsc(params.q)?;
        let code = design_ldgm(m, &ch, &config, params.seed)?;
        let queries = build_query_matrix(&h, &code.gstar)?;
        let bp = SyndromeDecoder::new(&h);
        Ok(CrowdScheme { params, config, h, code, queries, bp })
    }

    /// Recovers the syndrome from noisy answers, chunk by chunk.
    pub fn decode_syndrome(&self, answers: &[Symbol]) -> Result<Vec<bool>> {
        let mut s = Vec::with_capacity(self.code.m);
        for chunk in &self.code.chunks {
            let obs = &answers[chunk.col_offset..chunk.col_offset + chunk.cols];
            let r = split_combine_decode(&chunk.spec, &chunk.piece_map, &self.code.channel, obs, None)?;
            s.extend(r.info_estimate.iter());
        }
        Ok(s)
    }

    /// One end-to-end run; trial `t` uses stream `t` of the scheme seed.
    pub fn trial(&self, t: u64) -> Result<TrialOutcome> {
        let mut rng = trial_rng(self.params.seed, t);
        let x: Vec<bool> = (0..self.params.n).map(|_| rng.gen_bool(self.params.p)).collect();
        let clean = self.queries.responses(&x);
        let answers = self.code.channel.transmit_with(&clean, &mut rng);
        let s_hat = self.decode_syndrome(&answers)?;
        let stage1_ok = s_hat == self.h.syndrome(&x);
        let bp = self.bp.decode(&s_hat, self.params.p, self.config.bp_iterations);
        Ok(TrialOutcome { stage1_ok, recovered: bp.estimate == x })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub stage1_ok: bool,
    pub recovered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdReport {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub zeta: f64,
    pub m: usize,
    pub w_r: usize,
    pub n_polar: u32,
    pub chunks: usize,
    pub w_ub: usize,
    pub m_prime: usize,
    pub design_m_prime: f64,
    pub max_items: usize,
    pub max_items_bound: usize,
    pub m_bsc: f64,
    /// `m' / m_BSC` achieved by the built scheme.
    pub ratio: f64,
    /// `m / (C m_BSC)`: the ratio with a capacity-achieving channel code.
    pub ideal_ratio: f64,
    pub trials: u64,
    pub successes: u64,
    pub stage1_failures: u64,
    pub success_rate: f64,
}

/// Builds the scheme and runs `trials` independent recoveries.
pub fn simulate_crowd(params: QuerySchemeParams, config: CrowdConfig, trials: u64) -> Result<CrowdReport> {
    let scheme = CrowdScheme::build(params, config)?;
    run_trials(&scheme, trials)
}

pub fn run_trials(scheme: &CrowdScheme, trials: u64) -> Result<CrowdReport> {
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| scheme.trial(t))
        .collect::<Result<Vec<_>>>()?;
    let successes = outcomes.iter().filter(|o| o.recovered).count() as u64;
    let stage1_failures = outcomes.iter().filter(|o| !o.stage1_ok).count() as u64;
    let p = &scheme.params;
    let m_bsc = lower_bound_m_bsc(p.n, p.p, p.q)?;
    let code = &scheme.code;
    let capacity = code.channel.capacity();
    Ok(CrowdReport {
        n: p.n,
        p: p.p,
        q: p.q,
        zeta: p.zeta,
        m: code.m,
        w_r: scheme.h.row_weight,
        n_polar: code.n_polar,
        chunks: code.chunks.len(),
        w_ub: code.w_ub,
        m_prime: code.m_prime,
        design_m_prime: code.design_m_prime,
        max_items: scheme.queries.max_items,
        max_items_bound: scheme.h.row_weight * code.w_ub,
        m_bsc,
        ratio: code.m_prime as f64 / m_bsc,
        ideal_ratio: code.m as f64 / (capacity * m_bsc),
        trials,
        successes,
        stage1_failures,
        success_rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
    })
}
