use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::crowd::binary_entropy;
use crate::error::{Error, Result};
use crate::exact::{format_ratio, parse_ratio, ratio_to_f64};
use crate::gf2::BitVec;

/// Normalized likelihood pair `(P(y | 0), P(y | 1))`, scaled so the larger
/// entry is 1. Erasures are exactly `[1, 1]`.
pub type Llh = [f64; 2];

pub const ERASED_LLH: Llh = [1.0, 1.0];

/// Channel output symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Zero,
    One,
    Erased,
}

impl Symbol {
    pub fn bit(b: bool) -> Self {
        if b {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }
}

/// Binary-input memoryless symmetric channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    /// Erasure channel with erasure probability `z`.
    Bec(f64),
    /// Symmetric channel with crossover probability `q < 1/2`.
    Bsc(f64),
}

impl ChannelModel {
    pub fn bec(z: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::Domain(format!("erasure probability {z} outside [0, 1]")));
        }
        Ok(ChannelModel::Bec(z))
    }

    pub fn bsc(q: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&q) {
            return Err(Error::Domain(format!("crossover probability {q} outside [0, 1/2)")));
        }
        Ok(ChannelModel::Bsc(q))
    }

    pub fn capacity(&self) -> f64 {
        match *self {
            ChannelModel::Bec(z) => 1.0 - z,
            ChannelModel::Bsc(q) => 1.0 - binary_entropy(q),
        }
    }

    pub fn is_erasure(&self) -> bool {
        matches!(self, ChannelModel::Bec(_))
    }

    pub fn likelihood(&self, s: Symbol) -> Llh {
        match (*self, s) {
            (_, Symbol::Erased) => ERASED_LLH,
            (ChannelModel::Bec(_), Symbol::Zero) => [1.0, 0.0],
            (ChannelModel::Bec(_), Symbol::One) => [0.0, 1.0],
            (ChannelModel::Bsc(q), Symbol::Zero) => [1.0, q / (1.0 - q)],
            (ChannelModel::Bsc(q), Symbol::One) => [q / (1.0 - q), 1.0],
        }
    }

    pub fn likelihoods(&self, obs: &[Symbol]) -> Vec<Llh> {
        obs.iter().map(|&s| self.likelihood(s)).collect()
    }

    /// Sends `bits` through the channel using `rng`.
    pub fn transmit_with<R: Rng + ?Sized>(&self, bits: &[bool], rng: &mut R) -> Vec<Symbol> {
        match *self {
            ChannelModel::Bec(z) => bits
                .iter()
                .map(|&b| if rng.gen::<f64>() < z { Symbol::Erased } else { Symbol::bit(b) })
                .collect(),
            ChannelModel::Bsc(q) => bits
                .iter()
                .map(|&b| Symbol::bit(b ^ (rng.gen::<f64>() < q)))
                .collect(),
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelModel::Bec(z) => write!(f, "bec:{z}"),
            ChannelModel::Bsc(q) => write!(f, "bsc:{q}"),
        }
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    /// Accepts `bec:<z>` or `bsc:<q>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("channel must be bec:<z> or bsc:<q>, got {s:?}")))?;
        let p: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad channel parameter in {s:?}")))?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "bec" => ChannelModel::bec(p),
            "bsc" => ChannelModel::bsc(p),
            other => Err(Error::Parse(format!("unknown channel kind {other:?}"))),
        }
    }
}

impl Serialize for ChannelModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ChannelModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Channel with an exact rational parameter, used by the enumeration oracles.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactChannel {
    Bec(BigRational),
    Bsc(BigRational),
}

impl ExactChannel {
    pub fn bec(z: BigRational) -> Result<Self> {
        if z < BigRational::zero() || z > BigRational::one() {
            return Err(Error::Domain(format!("erasure probability {} outside [0, 1]", format_ratio(&z))));
        }
        Ok(ExactChannel::Bec(z))
    }

    pub fn bsc(q: BigRational) -> Result<Self> {
        let half = BigRational::new(1.into(), 2.into());
        if q < BigRational::zero() || q >= half {
            return Err(Error::Domain(format!("crossover probability {} outside [0, 1/2)", format_ratio(&q))));
        }
        Ok(ExactChannel::Bsc(q))
    }

    pub fn parameter(&self) -> &BigRational {
        match self {
            ExactChannel::Bec(p) | ExactChannel::Bsc(p) => p,
        }
    }

    pub fn to_model(&self) -> ChannelModel {
        match self {
            ExactChannel::Bec(z) => ChannelModel::Bec(ratio_to_f64(z)),
            ExactChannel::Bsc(q) => ChannelModel::Bsc(ratio_to_f64(q)),
        }
    }
}

impl FromStr for ExactChannel {
    type Err = Error;

    /// `bec:<z>` / `bsc:<q>` with `z`, `q` given as decimals or `p/q`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("channel must be bec:<z> or bsc:<q>, got {s:?}")))?;
        let p = parse_ratio(value)?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "bec" => ExactChannel::bec(p),
            "bsc" => ExactChannel::bsc(p),
            other => Err(Error::Parse(format!("unknown channel kind {other:?}"))),
        }
    }
}

/// Deterministic per-trial generator: stream `index` of the ChaCha8 generator
/// keyed by `seed`. Independent of thread scheduling.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Sends codeword `c` through `ch`; reproducible given `(seed, index)`.
pub fn transmit(c: &BitVec, ch: &ChannelModel, seed: u64, index: u64) -> Vec<Symbol> {
    ch.transmit_with(&c.to_bools(), &mut trial_rng(seed, index))
}
