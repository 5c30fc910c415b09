//! Channels, SC decoding, exact oracles and Monte Carlo block error rates.

pub mod channel;
pub mod oracle;
pub mod sc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::CodeSpec;
use crate::error::{Error, Result};
use crate::simulate::channel::{trial_rng, ChannelModel, Llh, Symbol, ERASED_LLH};
use crate::simulate::sc::{DecodeResult, ScDecoder};

pub use channel::transmit;
pub use oracle::{exact_pe_ml, exact_pe_sc, exact_pe_sc_natural};

/// Plain SC decoding of one block from channel observations.
pub fn sc_decode(
    spec: &CodeSpec,
    ch: &ChannelModel,
    observations: &[Symbol],
    truth: Option<&[bool]>,
) -> Result<DecodeResult> {
    let dec = ScDecoder::new(&spec.kernel, spec.n)?;
    dec.decode(&spec.frozen_map(), &ch.likelihoods(observations), truth)
}

/// `log2` of the union bound `n' P_chunk`, capped at 0.
pub fn union_bound_log2(log2_nprime: f64, chunk_error: f64) -> f64 {
    (log2_nprime + chunk_error.log2()).min(0.0)
}

/// Decoding outcome of a run of independent chunks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecodeResult {
    pub chunks: Vec<DecodeResult>,
    pub block_error: bool,
}

/// Runs one SC decoder per chunk. `truths` holds the transmitted `u` for
/// each chunk when block errors are wanted.
pub fn block_decode(
    spec: &CodeSpec,
    ch: &ChannelModel,
    chunks: &[Vec<Symbol>],
    truths: Option<&[Vec<bool>]>,
) -> Result<BlockDecodeResult> {
    if let Some(t) = truths {
        if t.len() != chunks.len() {
            return Err(Error::Dimension(format!("{} truths for {} chunks", t.len(), chunks.len())));
        }
    }
    let dec = ScDecoder::new(&spec.kernel, spec.n)?;
    let frozen = spec.frozen_map();
    let results = chunks
        .iter()
        .enumerate()
        .map(|(c, obs)| {
            let truth = truths.map(|t| t[c].as_slice());
            dec.decode(&frozen, &ch.likelihoods(obs), truth)
        })
        .collect::<Result<Vec<_>>>()?;
    let block_error = results.iter().any(|r| r.block_error);
    Ok(BlockDecodeResult { chunks: results, block_error })
}

/// Combines the likelihoods of bits whose XOR is the wanted bit.
pub fn check_combine(pieces: impl IntoIterator<Item = Llh>) -> Llh {
    let mut acc: Llh = [1.0, 0.0];
    for p in pieces {
        let c = [acc[0] * p[0] + acc[1] * p[1], acc[0] * p[1] + acc[1] * p[0]];
        let mx = c[0].max(c[1]);
        acc = if mx > 0.0 { [c[0] / mx, c[1] / mx] } else { ERASED_LLH };
    }
    acc
}

/// Decodes a split code by collapsing each original column's pieces into
/// one likelihood and running plain SC. Heuristic: the combination discards
/// information the split observations carry jointly. Frozen inputs must be
/// zero so that each original coded bit is the XOR of its pieces.
pub fn split_combine_decode(
    spec: &CodeSpec,
    piece_map: &[Vec<usize>],
    ch: &ChannelModel,
    observations: &[Symbol],
    truth: Option<&[bool]>,
) -> Result<DecodeResult> {
    if piece_map.len() != spec.big_n {
        return Err(Error::Dimension(format!(
            "piece map covers {} columns, expected {}",
            piece_map.len(),
            spec.big_n
        )));
    }
    let llh = ch.likelihoods(observations);
    let mut collapsed = Vec::with_capacity(spec.big_n);
    for pieces in piece_map {
        if pieces.iter().any(|&p| p >= llh.len()) {
            return Err(Error::Dimension("piece index beyond observation length".into()));
        }
        collapsed.push(check_combine(pieces.iter().map(|&p| llh[p])));
    }
    let dec = ScDecoder::new(&spec.kernel, spec.n)?;
    dec.decode(&spec.frozen_map(), &collapsed, truth)
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959964;
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z * Z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlerEstimate {
    pub trials: u64,
    pub errors: u64,
    pub bler: f64,
    pub ci: (f64, f64),
}

/// Block error rate of plain SC over `ch` with uniformly random information
/// bits. Trial `t` draws from stream `t` of the `seed` generator.
pub fn mc_bler(spec: &CodeSpec, ch: &ChannelModel, trials: u64, seed: u64) -> Result<BlerEstimate> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let dec = ScDecoder::new(&spec.kernel, spec.n)?;
    let frozen = spec.frozen_map();
    let errors: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let u: Vec<bool> = frozen
                .iter()
                .map(|f| f.unwrap_or_else(|| rand::Rng::gen(&mut rng)))
                .collect();
            let y = ch.transmit_with(&dec.encode(&u), &mut rng);
            let r = dec
                .decode(&frozen, &ch.likelihoods(&y), Some(&u))
                .expect("lengths fixed by the spec");
            r.block_error as u64
        })
        .sum();
    Ok(BlerEstimate {
        trials,
        errors,
        bler: errors as f64 / trials as f64,
        ci: wilson_interval(errors, trials),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_generator, construct, split};
    use crate::kernels::g2;

    #[test]
    fn union_bound_in_log_domain() {
        assert!((union_bound_log2(12.1, 2f64.powi(-20)) + 7.9).abs() < 1e-9);
        assert_eq!(union_bound_log2(30.0, 0.5), 0.0);
    }

    #[test]
    fn check_node_combinations() {
        let q: f64 = 0.1;
        let ch = ChannelModel::Bsc(q);
        let c = check_combine([ch.likelihood(Symbol::Zero), ch.likelihood(Symbol::Zero)]);
        let eff = 2.0 * q * (1.0 - q);
        assert!((c[1] / c[0] - eff / (1.0 - eff)).abs() < 1e-12);
        let bec = ChannelModel::Bec(0.3);
        assert_eq!(check_combine([bec.likelihood(Symbol::One), bec.likelihood(Symbol::Erased)]), ERASED_LLH);
        assert_eq!(check_combine([bec.likelihood(Symbol::One), bec.likelihood(Symbol::One)]), [1.0, 0.0]);
    }

    #[test]
    fn split_decoder_without_splits_is_plain_sc() {
        let spec = construct(&g2(), 4, &ChannelModel::Bec(0.4), 0.5, 0.1, 1, 0).unwrap();
        let g = build_generator(&spec.kernel, spec.n, &spec.info_set).unwrap();
        let (_, rep) = split(&g, 16).unwrap();
        let ch = ChannelModel::Bsc(0.08);
        for t in 0..50 {
            let y = ch.transmit_with(&[false; 16], &mut trial_rng(5, t));
            let a = sc_decode(&spec, &ch, &y, None).unwrap();
            let b = split_combine_decode(&spec, &rep.piece_map, &ch, &y, None).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn noiseless_bler_is_zero() {
        let spec = construct(&g2(), 5, &ChannelModel::Bec(0.5), 0.5, 0.1, 1, 0).unwrap();
        let est = mc_bler(&spec, &ChannelModel::Bsc(0.0), 200, 1).unwrap();
        assert_eq!(est.errors, 0);
        assert_eq!(est.bler, 0.0);
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.03 && hi < 0.04);
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
    }
}
