//! Polar-based LDGM codes: GF(2) algebra, polarizing kernels, code
//! construction with column splitting, rate-loss analysis, successive
//! cancellation decoding with exact oracles, and a crowdsourcing query
//! scheme built on top.

pub mod construction;
pub mod crowd;
pub mod error;
pub mod exact;
pub mod gf2;
pub mod kernels;
pub mod simulate;
pub mod weightstats;

pub use error::{Error, Result};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed_1dcf;
