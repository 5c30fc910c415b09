//! Exact block error probabilities by full enumeration of messages and
//! channel outputs. Only for tiny generators.

use std::ops::{Add, AddAssign, Mul, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::construction::SparseGenerator;
use crate::error::{Error, Result};
use crate::exact::log2_biguint;
use crate::simulate::channel::ExactChannel;

pub const MAX_ORACLE_ROWS: usize = 10;
pub const MAX_ORACLE_COLS_BSC: usize = 14;
pub const MAX_ORACLE_COLS_BEC: usize = 9;

trait Acc:
    Clone + Ord + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + for<'a> AddAssign<&'a Self>
{
    fn from_big(x: &BigUint) -> Self;
    fn into_big(self) -> BigUint;
}

impl Acc for u128 {
    fn from_big(x: &BigUint) -> Self {
        x.to_u128().expect("checked to fit")
    }
    fn into_big(self) -> BigUint {
        BigUint::from(self)
    }
}

impl Acc for BigUint {
    fn from_big(x: &BigUint) -> Self {
        x.clone()
    }
    fn into_big(self) -> BigUint {
        self
    }
}

fn check_caps(g: &SparseGenerator, ch: &ExactChannel) -> Result<()> {
    let k = g.rows;
    let cols = g.cols();
    let max_cols = match ch {
        ExactChannel::Bec(_) => MAX_ORACLE_COLS_BEC,
        ExactChannel::Bsc(_) => MAX_ORACLE_COLS_BSC,
    };
    if k == 0 {
        return Err(Error::Domain("generator has no rows".into()));
    }
    if k > MAX_ORACLE_ROWS || cols > max_cols {
        return Err(Error::Refused(format!(
            "exact enumeration limited to K <= {MAX_ORACLE_ROWS} and N <= {max_cols} on this channel, got K = {k}, N = {cols}"
        )));
    }
    Ok(())
}

/// All codewords, indexed by message. Message bit `t` (counted from the most
/// significant end of a `K`-bit index) is row `order[t]`.
fn codewords(g: &SparseGenerator, order: &[usize]) -> Vec<u32> {
    let k = g.rows;
    let row_masks: Vec<u32> = (0..k)
        .map(|r| {
            g.columns
                .iter()
                .enumerate()
                .filter(|(_, col)| col.binary_search(&r).is_ok())
                .fold(0u32, |m, (j, _)| m | 1 << j)
        })
        .collect();
    (0u32..1 << k)
        .map(|msg| {
            (0..k)
                .filter(|&t| msg >> (k - 1 - t) & 1 == 1)
                .fold(0u32, |c, t| c ^ row_masks[order[t]])
        })
        .collect()
}

/// Integer weight table: `weights[d]` is proportional to the probability of
/// `d` corrupted positions out of `cols`, with common denominator `den^cols`.
struct Weights {
    num: BigUint,
    den: BigUint,
}

fn param(ch: &ExactChannel) -> Weights {
    let p = ch.parameter();
    Weights {
        num: p.numer().magnitude().clone(),
        den: p.denom().magnitude().clone(),
    }
}

/// Enumerates every output with its likelihood vector over messages and
/// passes it to `visit`. Likelihoods are integers over `den^cols`.
fn for_each_output<T: Acc>(ch: &ExactChannel, cols: usize, cw: &[u32], mut visit: impl FnMut(&[T])) {
    let Weights { num, den } = param(ch);
    let good = &den - &num;
    let table: Vec<T> = (0..=cols)
        .map(|d| T::from_big(&(num.pow(d as u32) * good.pow((cols - d) as u32))))
        .collect();
    let mut lik = vec![T::zero(); cw.len()];
    match ch {
        ExactChannel::Bsc(_) => {
            for y in 0u32..1 << cols {
                for (l, &c) in lik.iter_mut().zip(cw) {
                    *l = table[(c ^ y).count_ones() as usize].clone();
                }
                visit(&lik);
            }
        }
        ExactChannel::Bec(_) => {
            for erased in 0u32..1 << cols {
                let w = table[erased.count_ones() as usize].clone();
                let keep = !erased & ((1u32 << cols) - 1);
                // Outputs on surviving positions: one value per subset of `keep`.
                let mut vals = keep;
                loop {
                    for (l, &c) in lik.iter_mut().zip(cw) {
                        *l = if (c & keep) == vals { w.clone() } else { T::zero() };
                    }
                    visit(&lik);
                    if vals == 0 {
                        break;
                    }
                    vals = (vals - 1) & keep;
                }
            }
        }
    }
}

fn fits_u128(ch: &ExactChannel, cols: usize, k: usize) -> bool {
    let Weights { den, .. } = param(ch);
    log2_biguint(&den) * cols as f64 + k as f64 + 2.0 < 120.0
}

fn total<T: Acc>(ch: &ExactChannel, cols: usize, k: usize) -> BigUint {
    let Weights { den, .. } = param(ch);
    T::from_big(&den.pow(cols as u32)).into_big() << k
}

fn finish(error_mass: BigUint, denom: BigUint) -> BigRational {
    BigRational::new(BigInt::from(error_mass), BigInt::from(denom))
}

fn ml_generic<T: Acc>(ch: &ExactChannel, cols: usize, k: usize, cw: &[u32]) -> BigRational {
    let mut correct = T::zero();
    for_each_output::<T>(ch, cols, cw, |lik| {
        if let Some(best) = lik.iter().max() {
            correct += best;
        }
    });
    let denom = total::<T>(ch, cols, k);
    finish(&denom - correct.into_big(), denom)
}

fn sc_generic<T: Acc>(ch: &ExactChannel, cols: usize, k: usize, cw: &[u32]) -> BigRational {
    let mut err = T::zero();
    for_each_output::<T>(ch, cols, cw, |lik| {
        let (mut lo, mut hi) = (0usize, lik.len());
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let s0 = lik[lo..mid].iter().fold(T::zero(), |a, x| a + x.clone());
            let s1 = lik[mid..hi].iter().fold(T::zero(), |a, x| a + x.clone());
            if s0 >= s1 {
                err += &s1;
                hi = mid;
            } else {
                err += &s0;
                lo = mid;
            }
        }
    });
    finish(err.into_big(), total::<T>(ch, cols, k))
}

/// Exact block error of maximum-likelihood decoding with uniform messages.
/// Ties do not change the value: any maximizer is correct with the same mass.
pub fn exact_pe_ml(g: &SparseGenerator, ch: &ExactChannel) -> Result<BigRational> {
    check_caps(g, ch)?;
    let order: Vec<usize> = (0..g.rows).collect();
    let cw = codewords(g, &order);
    Ok(if fits_u128(ch, g.cols(), g.rows) {
        ml_generic::<u128>(ch, g.cols(), g.rows, &cw)
    } else {
        ml_generic::<BigUint>(ch, g.cols(), g.rows, &cw)
    })
}

/// Exact block error of successive cancellation that decides the rows of
/// `g` in the sequence `order`, each bit by comparing the total likelihood
/// of the two halves consistent with the already decided prefix, ties to 0.
pub fn exact_pe_sc(g: &SparseGenerator, ch: &ExactChannel, order: &[usize]) -> Result<BigRational> {
    check_caps(g, ch)?;
    let mut seen = vec![false; g.rows];
    if order.len() != g.rows || order.iter().any(|&r| r >= g.rows || std::mem::replace(&mut seen[r], true)) {
        return Err(Error::Domain("order must be a permutation of the generator rows".into()));
    }
    let cw = codewords(g, order);
    Ok(if fits_u128(ch, g.cols(), g.rows) {
        sc_generic::<u128>(ch, g.cols(), g.rows, &cw)
    } else {
        sc_generic::<BigUint>(ch, g.cols(), g.rows, &cw)
    })
}

/// [`exact_pe_sc`] in natural row order.
pub fn exact_pe_sc_natural(g: &SparseGenerator, ch: &ExactChannel) -> Result<BigRational> {
    let order: Vec<usize> = (0..g.rows).collect();
    exact_pe_sc(g, ch, &order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::parse_ratio;

    fn bsc(q: &str) -> ExactChannel {
        ExactChannel::bsc(parse_ratio(q).unwrap()).unwrap()
    }

    #[test]
    fn repetition_and_single_bit() {
        let q = parse_ratio("1/10").unwrap();
        let rep = SparseGenerator::new(1, vec![vec![0]; 3]).unwrap();
        let want = BigRational::from_integer(3.into()) * &q * &q * (BigRational::one() - &q) + &q * &q * &q;
        assert_eq!(exact_pe_ml(&rep, &bsc("1/10")).unwrap(), want);
        assert_eq!(exact_pe_sc_natural(&rep, &bsc("1/10")).unwrap(), want);
        let one = SparseGenerator::new(1, vec![vec![0]]).unwrap();
        assert_eq!(exact_pe_ml(&one, &bsc("1/10")).unwrap(), q);
    }

    #[test]
    fn noiseless_full_rank() {
        let g = SparseGenerator::new(3, vec![vec![0], vec![1], vec![0, 2], vec![2]]).unwrap();
        assert!(exact_pe_ml(&g, &bsc("0")).unwrap().is_zero());
        let bec0 = ExactChannel::bec(BigRational::zero()).unwrap();
        assert!(exact_pe_sc_natural(&g, &bec0).unwrap().is_zero());
    }

    #[test]
    fn bec_single_bit_is_half_the_erasure_rate() {
        let g = SparseGenerator::new(1, vec![vec![0]]).unwrap();
        let z = parse_ratio("1/3").unwrap();
        let ch = ExactChannel::bec(z.clone()).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(exact_pe_ml(&g, &ch).unwrap(), &z * &half);
        assert_eq!(exact_pe_sc_natural(&g, &ch).unwrap(), z * half);
    }

    #[test]
    fn caps_are_refusals() {
        let big = SparseGenerator::new(11, vec![vec![0]; 11]).unwrap();
        assert!(matches!(exact_pe_ml(&big, &bsc("1/10")), Err(Error::Refused(_))));
        let wide = SparseGenerator::new(2, vec![vec![0]; 10]).unwrap();
        let bec = ExactChannel::bec(parse_ratio("1/2").unwrap()).unwrap();
        assert!(matches!(exact_pe_sc_natural(&wide, &bec), Err(Error::Refused(_))));
        assert!(exact_pe_sc_natural(&wide, &bsc("1/10")).is_ok());
    }

    #[test]
    fn big_integer_path_agrees() {
        let g = SparseGenerator::new(2, vec![vec![0], vec![0, 1], vec![1]]).unwrap();
        let ch = bsc("1/7");
        let order = [0, 1];
        let cw = codewords(&g, &order);
        assert_eq!(ml_generic::<u128>(&ch, 3, 2, &cw), ml_generic::<BigUint>(&ch, 3, 2, &cw));
        assert_eq!(sc_generic::<u128>(&ch, 3, 2, &cw), sc_generic::<BigUint>(&ch, 3, 2, &cw));
    }
}
