//! Column-weight statistics of Kronecker powers and the rate loss caused by
//! splitting heavy columns.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::crowd::binary_entropy;
use crate::error::{Error, Result};
use crate::exact::{binomial_row, log2_biguint, log2_ratio, pow2, ratio, serde_biguint, serde_ratio};
use crate::kernels::{catalog, g2, Kernel};

/// Exact multiset of column weights of `G^{(x)n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightDistribution {
    pub kernel_weights: Vec<usize>,
    pub n: u32,
    pub entries: BTreeMap<BigUint, BigUint>,
}

impl WeightDistribution {
    pub fn total(&self) -> BigUint {
        self.entries.values().sum()
    }

    pub fn min_weight(&self) -> BigUint {
        self.entries.keys().next().cloned().unwrap_or_else(BigUint::zero)
    }

    pub fn max_weight(&self) -> BigUint {
        self.entries.keys().next_back().cloned().unwrap_or_else(BigUint::zero)
    }
}

pub fn weight_distribution(k: &Kernel, n: u32) -> WeightDistribution {
    let mut per_level: BTreeMap<BigUint, BigUint> = BTreeMap::new();
    for &w in k.column_weights() {
        *per_level.entry(BigUint::from(w)).or_default() += 1u32;
    }
    let mut entries = BTreeMap::from([(BigUint::one(), BigUint::one())]);
    for _ in 0..n {
        let mut next: BTreeMap<BigUint, BigUint> = BTreeMap::new();
        for (v, m) in &entries {
            for (w, c) in &per_level {
                *next.entry(v * w).or_default() += m * c;
            }
        }
        entries = next;
    }
    WeightDistribution { kernel_weights: k.column_weights().to_vec(), n, entries }
}

/// Weight of maximal multiplicity, ties toward the smaller weight.
pub fn w_mc(k: &Kernel, n: u32) -> BigUint {
    let d = weight_distribution(k, n);
    let mut best: Option<(&BigUint, &BigUint)> = None;
    for (w, m) in &d.entries {
        if best.is_none_or(|(_, bm)| m > bm) {
            best = Some((w, m));
        }
    }
    best.map(|(w, _)| w.clone()).unwrap_or_else(BigUint::one)
}

pub fn w_max(k: &Kernel, n: u32) -> BigUint {
    BigUint::from(k.max_column_weight()).pow(n)
}

/// `log2 log N' = log2(N^((1 - delta) E) + log2 N)` for the kernel at level `n`.
pub fn log2_log_nprime(k: &Kernel, n: u32, delta: f64) -> f64 {
    let log2_n = n as f64 * (k.size() as f64).log2();
    ((log2_n * (1.0 - delta) * k.exponent()).exp2() + log2_n).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityOrders {
    pub lambda_mc: f64,
    pub lambda_max: f64,
}

/// Column-weight statistics measured in powers of `log N'`.
pub fn sparsity_orders(k: &Kernel, n: u32, delta: f64) -> Result<SparsityOrders> {
    if n < 2 {
        return Err(Error::Domain("sparsity orders need n >= 2".into()));
    }
    check_delta(delta)?;
    let base = log2_log_nprime(k, n, delta);
    Ok(SparsityOrders {
        lambda_mc: log2_biguint(&w_mc(k, n)) / base,
        lambda_max: log2_biguint(&w_max(k, n)) / base,
    })
}

/// `n -> infinity` values of the sparsity orders.
pub fn limit_orders(k: &Kernel, delta: f64) -> SparsityOrders {
    SparsityOrders {
        lambda_mc: k.sparsity_ratio() / (1.0 - delta),
        lambda_max: k.max_weight_ratio() / (1.0 - delta),
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `#{x : x >= j}`-weighted binomial tail numerators: `tails[j] = sum_{x >= j} C(n, x)`.
fn binomial_tails(n: u32) -> Vec<BigUint> {
    let row = binomial_row(n);
    let mut tails = vec![BigUint::zero(); row.len() + 1];
    for j in (0..row.len()).rev() {
        tails[j] = &tails[j + 1] + &row[j];
    }
    tails
}

fn check_wub(n: u32, w_ub: &BigUint) -> Result<()> {
    if w_ub.is_zero() || *w_ub > pow2(n) {
        return Err(Error::Domain(format!("w_ub must lie in [1, 2^{n}]")));
    }
    Ok(())
}

/// Rate loss of splitting the full `G_2^{(x)n}` at threshold `w_ub`, from
/// the tail sum `R = sum_k Pr(X > log2(k w_ub))`, `X ~ Bin(n, 1/2)`. Runs of
/// `k` with equal `floor(log2(k w_ub))` share one tail term.
pub fn exact_r(n: u32, w_ub: &BigUint) -> Result<BigRational> {
    check_wub(n, w_ub)?;
    let tails = binomial_tails(n);
    let f0 = w_ub.bits() as u32 - 1;
    let mut num = BigUint::zero();
    for f in f0..n {
        let hi = pow2(f + 1).div_ceil(w_ub);
        let lo = pow2(f).div_ceil(w_ub);
        num += (hi - lo) * &tails[f as usize + 1];
    }
    Ok(ratio(num, pow2(n)))
}

/// Rate loss by direct counting over the weight distribution of any kernel:
/// `sum_columns (ceil(W / w_ub) - 1) / l^n`.
pub fn direct_r(k: &Kernel, n: u32, w_ub: &BigUint) -> Result<BigRational> {
    if w_ub.is_zero() {
        return Err(Error::Domain("w_ub must be at least 1".into()));
    }
    let d = weight_distribution(k, n);
    let mut num = BigUint::zero();
    for (w, m) in &d.entries {
        num += (w.div_ceil(w_ub) - 1u32) * m;
    }
    Ok(ratio(num, d.total()))
}

/// `a_i = Pr(X >= 1 + i + n_lub) 2^i` for `i = 0 .. n - n_lub - 1`.
pub fn a_terms(n: u32, n_lub: u32) -> Result<Vec<BigRational>> {
    if n_lub >= n {
        return Err(Error::Domain(format!("n_lub must be below n, got {n_lub} >= {n}")));
    }
    let tails = binomial_tails(n);
    Ok((0..n - n_lub)
        .map(|i| ratio(&tails[(1 + i + n_lub) as usize] << i as usize, pow2(n)))
        .collect())
}

/// `lambda(x, y) = -D(1/2 + x + y || 1/2) + y` in bits.
pub fn lambda_exponent(x: f64, y: f64) -> Result<f64> {
    if !(x >= 0.0 && y >= 0.0 && x + y <= 0.5) {
        return Err(Error::Domain(format!("lambda needs x, y >= 0 and x + y <= 1/2, got ({x}, {y})")));
    }
    Ok(binary_entropy(0.5 + x + y) - 1.0 + y)
}

/// Threshold separating vanishing from diverging rate loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonStar {
    pub closed_form: f64,
    pub numeric: f64,
    pub argmax: f64,
}

pub fn epsilon_star_closed_form() -> f64 {
    3f64.log2() - 1.5
}

/// `max_y lambda(0, y)` by golden-section search, alongside the closed form.
pub fn epsilon_star() -> EpsilonStar {
    let f = |y: f64| lambda_exponent(0.0, y).expect("y within [0, 1/2]");
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 0.5f64);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let argmax = (a + b) / 2.0;
    EpsilonStar { closed_form: epsilon_star_closed_form(), numeric: f(argmax), argmax }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Vanishing,
    Diverging,
    Boundary,
}

/// Distance from the threshold under which the regime is reported as
/// undecidable at finite `n`.
pub const BOUNDARY_TOLERANCE: f64 = 1e-3;

pub fn classify(epsilon_prime: f64) -> Regime {
    let d = epsilon_prime - epsilon_star_closed_form();
    if d.abs() <= BOUNDARY_TOLERANCE {
        Regime::Boundary
    } else if d > 0.0 {
        Regime::Vanishing
    } else {
        Regime::Diverging
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLossAnalysis {
    pub n: u32,
    #[serde(with = "serde_biguint")]
    pub w_ub: BigUint,
    pub n_lub: u32,
    pub epsilon: Option<f64>,
    pub epsilon_prime: f64,
    /// `n_lub / n - 1/2`, the margin actually realized by the integer threshold.
    pub effective_epsilon_prime: f64,
    pub delta: Option<f64>,
    #[serde(with = "ratio_vec")]
    pub a_terms: Vec<BigRational>,
    #[serde(rename = "R_exact", with = "serde_ratio")]
    pub r_exact: BigRational,
    pub r_float: f64,
    pub regime: Regime,
    /// `epsilon* - epsilon'` when vanishing.
    pub exponent: Option<f64>,
    /// `(1/n) log2 R`, absent when `R = 0`.
    pub empirical_slope: Option<f64>,
}

mod ratio_vec {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(crate::exact::format_ratio).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| crate::exact::parse_ratio(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// `epsilon'(n) = (1 + epsilon) log2(log N') / n - 1/2` for `G_2`, using the
/// exact `log N' = N^((1 - delta)/2) + n`.
pub fn epsilon_prime(epsilon: f64, delta: f64, n: u32) -> f64 {
    (1.0 + epsilon) * log2_log_nprime(&g2(), n, delta) / n as f64 - 0.5
}

/// Rate-loss analysis at threshold `w_ub = 2^round((1/2 + epsilon') n)`.
pub fn rate_loss(n: u32, epsilon_prime: f64) -> Result<RateLossAnalysis> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let n_lub = ((0.5 + epsilon_prime) * n as f64).round().clamp(0.0, n as f64) as u32;
    let mut a = rate_loss_at(n, &pow2(n_lub))?;
    a.epsilon_prime = epsilon_prime;
    a.regime = classify(epsilon_prime);
    a.exponent = (a.regime == Regime::Vanishing).then(|| epsilon_star_closed_form() - epsilon_prime);
    Ok(a)
}

/// Rate-loss analysis for an explicit threshold. `epsilon'` is taken as the
/// effective value `floor(log2 w_ub) / n - 1/2`.
pub fn rate_loss_at(n: u32, w_ub: &BigUint) -> Result<RateLossAnalysis> {
    check_wub(n, w_ub)?;
    let n_lub = w_ub.bits() as u32 - 1;
    let r = exact_r(n, w_ub)?;
    let terms = if n_lub < n { a_terms(n, n_lub)? } else { Vec::new() };
    let eff = n_lub as f64 / n as f64 - 0.5;
    let regime = classify(eff);
    let log2_r = log2_ratio(&r);
    Ok(RateLossAnalysis {
        n,
        w_ub: w_ub.clone(),
        n_lub,
        epsilon: None,
        epsilon_prime: eff,
        effective_epsilon_prime: eff,
        delta: None,
        a_terms: terms,
        r_float: crate::exact::ratio_to_f64(&r),
        r_exact: r,
        regime,
        exponent: (regime == Regime::Vanishing).then(|| epsilon_star_closed_form() - eff),
        empirical_slope: log2_r.is_finite().then(|| log2_r / n as f64),
    })
}

/// Maps `(epsilon, delta)` to `epsilon'` at level `n` and analyzes the
/// resulting rate loss.
pub fn classify_regime(epsilon: f64, delta: f64, n: u32) -> Result<RateLossAnalysis> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    check_delta(delta)?;
    let mut a = rate_loss(n, epsilon_prime(epsilon, delta, n))?;
    a.epsilon = Some(epsilon);
    a.delta = Some(delta);
    Ok(a)
}

/// Fraction of columns of `G^{(x)n}` with weight at most `threshold`.
pub fn fraction_below(k: &Kernel, n: u32, threshold: &BigUint) -> BigRational {
    let d = weight_distribution(k, n);
    let below: BigUint = d.entries.range(..=threshold.clone()).map(|(_, m)| m).sum();
    ratio(below, d.total())
}

/// One row of the kernel comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub kernel: String,
    pub l: usize,
    pub exponent: f64,
    pub sparsity_ratio: f64,
    pub lambda_max_ratio: f64,
    pub delta: f64,
    pub n: u32,
    pub lambda_mc_limit: f64,
    pub lambda_max_limit: f64,
    pub lambda_mc: f64,
    pub lambda_max: f64,
}

pub fn table_row(k: &Kernel, n: u32, delta: f64) -> Result<TableRow> {
    let fin = sparsity_orders(k, n, delta)?;
    let lim = limit_orders(k, delta);
    Ok(TableRow {
        kernel: k.name().to_string(),
        l: k.size(),
        exponent: k.exponent(),
        sparsity_ratio: k.sparsity_ratio(),
        lambda_max_ratio: k.max_weight_ratio(),
        delta,
        n,
        lambda_mc_limit: lim.lambda_mc,
        lambda_max_limit: lim.lambda_max,
        lambda_mc: fin.lambda_mc,
        lambda_max: fin.lambda_max,
    })
}

/// Rows for the five catalog kernels. `n` is the level for `G_2`; larger
/// kernels use the level with the closest block length.
pub fn kernel_table(n: u32, delta: f64) -> Result<Vec<TableRow>> {
    catalog()
        .iter()
        .map(|k| {
            let level = ((n as f64) / (k.size() as f64).log2()).round().max(2.0) as u32;
            table_row(k, level, delta)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::format_ratio;
    use crate::kernels::{g3_prime, g4_prime};

    fn dist(k: &Kernel, n: u32) -> Vec<(u64, u64)> {
        weight_distribution(k, n)
            .entries
            .iter()
            .map(|(w, m)| (w.try_into().unwrap(), m.try_into().unwrap()))
            .collect()
    }

    #[test]
    fn distributions() {
        assert_eq!(dist(&g2(), 4), vec![(1, 1), (2, 4), (4, 6), (8, 4), (16, 1)]);
        assert_eq!(dist(&g4_prime(), 0), vec![(1, 1)]);
        assert_eq!(dist(&g3_prime(), 3), vec![(1, 8), (3, 12), (9, 6), (27, 1)]);
    }

    #[test]
    fn common_and_max_weights() {
        assert_eq!(w_mc(&g2(), 10), BigUint::from(32u32));
        assert_eq!(w_mc(&g3_prime(), 3), BigUint::from(3u32));
        assert_eq!(w_mc(&g2(), 2), BigUint::from(2u32));
        assert_eq!(w_max(&g2(), 10), BigUint::from(1024u32));
        assert_eq!(w_max(&g4_prime(), 3), BigUint::from(64u32));
    }

    #[test]
    fn rate_loss_examples() {
        assert_eq!(format_ratio(&exact_r(4, &BigUint::from(4u32)).unwrap()), "7/16");
        assert!(exact_r(6, &pow2(6)).unwrap().is_zero());
        let r = exact_r(5, &BigUint::one()).unwrap();
        assert_eq!(format_ratio(&r), "211/32");
        assert_eq!(r, direct_r(&g2(), 5, &BigUint::one()).unwrap());
        assert!(exact_r(3, &BigUint::zero()).is_err());
        assert!(exact_r(3, &BigUint::from(9u32)).is_err());
    }

    #[test]
    fn a_term_examples() {
        let a: Vec<String> = a_terms(4, 2).unwrap().iter().map(format_ratio).collect();
        assert_eq!(a, vec!["5/16", "1/8"]);
        let a = a_terms(7, 6).unwrap();
        assert_eq!(a, vec![ratio(BigUint::one(), pow2(7))]);
        assert!(a_terms(4, 4).is_err());
    }

    #[test]
    fn lambda_and_threshold() {
        assert!(lambda_exponent(0.1, 0.0).unwrap() <= 0.0);
        assert!(lambda_exponent(0.4, 0.2).is_err());
        let e = epsilon_star();
        assert!((e.closed_form - 0.0849625007).abs() < 1e-9);
        assert!((e.numeric - e.closed_form).abs() < 1e-9);
        assert!((e.argmax - 1.0 / 6.0).abs() < 1e-5);
        let x = 0.03;
        let peak = lambda_exponent(x, 1.0 / 6.0 - x).unwrap();
        assert!((peak - (e.closed_form - x)).abs() < 1e-12);
    }

    #[test]
    fn regime_examples() {
        let a = classify_regime(0.3, 0.01, 64).unwrap();
        assert!((a.epsilon_prime - 0.1435).abs() < 1e-3);
        assert_eq!(a.regime, Regime::Vanishing);
        let a = classify_regime(0.05, 0.01, 64).unwrap();
        assert!((a.epsilon_prime - 0.0198).abs() < 1e-3);
        assert_eq!(a.regime, Regime::Diverging);
        assert_eq!(classify(epsilon_star_closed_form() + 5e-4), Regime::Boundary);
    }

    #[test]
    fn fraction_examples() {
        assert!(fraction_below(&g2(), 4, &BigUint::from(16u32)).is_one());
        let f = fraction_below(&g2(), 10, &BigUint::from(100u32));
        assert_eq!(f, ratio(BigUint::from(848u32), BigUint::from(1024u32)));
    }

    #[test]
    fn finite_orders_approach_limits() {
        let k = g2();
        let lim = limit_orders(&k, 0.1).lambda_mc;
        assert!((lim - 1.0 / 0.9).abs() < 1e-12);
        let a = sparsity_orders(&k, 40, 0.1).unwrap().lambda_mc;
        let b = sparsity_orders(&k, 400, 0.1).unwrap().lambda_mc;
        assert!((b - lim).abs() < (a - lim).abs());
    }
}
