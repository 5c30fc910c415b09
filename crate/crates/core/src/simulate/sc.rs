//! Successive-cancellation decoding for Kronecker powers of arbitrary kernels.

use crate::construction::block_length;
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::kernels::Kernel;
use crate::simulate::channel::{Llh, ERASED_LLH};

/// Result of one SC run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    /// Decoded information bits, in increasing index order.
    pub info_estimate: BitVec,
    /// Whether any information bit differs from the supplied truth. Always
    /// false when no truth was given.
    pub block_error: bool,
    /// Per information bit, whether it was decided wrongly.
    pub per_bit_flags: Option<Vec<bool>>,
}

/// Per-bit outcome of genie-aided SC, over all `N` inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenieReport {
    /// The hard decision differed from the true bit.
    pub errors: Vec<bool>,
    /// Both hypotheses were exactly equally likely.
    pub ties: Vec<bool>,
}

/// Encoder and SC decoder for `G^{(x)n}`. The `u` index `a M + b` (with
/// `M = l^(n-1)`) feeds kernel input `a` of the outermost stage.
#[derive(Debug, Clone)]
pub struct ScDecoder {
    l: usize,
    n: u32,
    big_n: usize,
    /// Row `a` of the kernel as a bit mask over kernel outputs.
    rows: Vec<u32>,
    /// For each `a`, the XOR of every subset of rows `a+1..l`.
    completions: Vec<Vec<u32>>,
}

struct Run<'a> {
    frozen: Option<&'a [Option<bool>]>,
    truth: Option<&'a [bool]>,
    genie: bool,
    u_hat: Vec<bool>,
    errors: Vec<bool>,
    ties: Vec<bool>,
}

impl Run<'_> {
    fn decide(&mut self, i: usize, llh: Llh) -> bool {
        let hard = llh[1] > llh[0];
        self.ties[i] = llh[0] == llh[1];
        let fixed = self.frozen.and_then(|f| f[i]);
        if let Some(t) = self.truth {
            self.errors[i] = fixed.is_none() && hard != t[i];
        }
        let value = match (fixed, self.genie, self.truth) {
            (Some(v), _, _) => v,
            (None, true, Some(t)) => t[i],
            _ => hard,
        };
        self.u_hat[i] = value;
        value
    }
}

impl ScDecoder {
    pub fn new(kernel: &Kernel, n: u32) -> Result<Self> {
        let l = kernel.size();
        if l > 16 {
            return Err(Error::Unsupported(format!("SC decoding supports l <= 16, got {l}")));
        }
        let big_n = block_length(l, n)?;
        let g = kernel.matrix();
        let rows: Vec<u32> = (0..l)
            .map(|r| (0..l).filter(|&c| g.get(r, c)).fold(0u32, |m, c| m | 1 << c))
            .collect();
        let completions = (0..l)
            .map(|a| {
                let tail = &rows[a + 1..];
                (0u32..1 << tail.len())
                    .map(|w| {
                        tail.iter()
                            .enumerate()
                            .filter(|&(j, _)| w >> j & 1 == 1)
                            .fold(0u32, |m, (_, &r)| m ^ r)
                    })
                    .collect()
            })
            .collect();
        Ok(ScDecoder { l, n, big_n, rows, completions })
    }

    pub fn block_length(&self) -> usize {
        self.big_n
    }

    pub fn levels(&self) -> u32 {
        self.n
    }

    /// `x = u G^{(x)n}`.
    pub fn encode(&self, u: &[bool]) -> Vec<bool> {
        assert_eq!(u.len(), self.big_n, "message length must equal N");
        let mut x = u.to_vec();
        self.encode_in_place(&mut x);
        x
    }

    fn encode_in_place(&self, v: &mut [bool]) {
        let len = v.len();
        if len == 1 {
            return;
        }
        let m = len / self.l;
        for block in v.chunks_mut(m) {
            self.encode_in_place(block);
        }
        let mut out = vec![false; len];
        for b in 0..m {
            let mut mask = 0u32;
            for a in 0..self.l {
                if v[a * m + b] {
                    mask ^= self.rows[a];
                }
            }
            for a2 in 0..self.l {
                out[a2 * m + b] = mask >> a2 & 1 == 1;
            }
        }
        v.copy_from_slice(&out);
    }

    /// Plain SC. `frozen[i]` is `Some(value)` for frozen inputs. When `truth`
    /// (the full transmitted `u`) is given, block and bit errors are reported.
    pub fn decode(
        &self,
        frozen: &[Option<bool>],
        llh: &[Llh],
        truth: Option<&[bool]>,
    ) -> Result<DecodeResult> {
        self.check_len(frozen.len(), "frozen map")?;
        self.check_len(llh.len(), "observation")?;
        if let Some(t) = truth {
            self.check_len(t.len(), "truth")?;
        }
        let mut run = self.run(Some(frozen), truth, false);
        self.rec(llh, 0, &mut run);
        let info: Vec<usize> = (0..self.big_n).filter(|&i| frozen[i].is_none()).collect();
        let info_estimate = BitVec::from_bools(&info.iter().map(|&i| run.u_hat[i]).collect::<Vec<_>>());
        let flags = truth.map(|_| info.iter().map(|&i| run.errors[i]).collect::<Vec<bool>>());
        let block_error = flags.as_ref().is_some_and(|f| f.iter().any(|&e| e));
        Ok(DecodeResult { info_estimate, block_error, per_bit_flags: flags })
    }

    /// Genie-aided SC over all inputs: every decision is scored against
    /// `truth` and then replaced by the true bit.
    pub fn genie(&self, llh: &[Llh], truth: &[bool]) -> GenieReport {
        assert_eq!(llh.len(), self.big_n, "observation length must equal N");
        assert_eq!(truth.len(), self.big_n, "truth length must equal N");
        let mut run = self.run(None, Some(truth), true);
        self.rec(llh, 0, &mut run);
        GenieReport { errors: run.errors, ties: run.ties }
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.big_n {
            return Err(Error::Dimension(format!("{what} length {len}, expected {}", self.big_n)));
        }
        Ok(())
    }

    fn run<'a>(&self, frozen: Option<&'a [Option<bool>]>, truth: Option<&'a [bool]>, genie: bool) -> Run<'a> {
        Run {
            frozen,
            truth,
            genie,
            u_hat: vec![false; self.big_n],
            errors: vec![false; self.big_n],
            ties: vec![false; self.big_n],
        }
    }

    /// Decodes the inputs `offset..offset+len` from `llh` and returns their
    /// re-encoded image.
    fn rec(&self, llh: &[Llh], offset: usize, run: &mut Run<'_>) -> Vec<bool> {
        let len = llh.len();
        if len == 1 {
            return vec![run.decide(offset, llh[0])];
        }
        let l = self.l;
        let m = len / l;
        let mut prefix = vec![0u32; m];
        let mut child = vec![ERASED_LLH; m];
        let mut x = vec![false; len];
        for a in 0..l {
            for b in 0..m {
                let mut s = [0.0f64; 2];
                for (t, st) in s.iter_mut().enumerate() {
                    let base = prefix[b] ^ if t == 1 { self.rows[a] } else { 0 };
                    for &w in &self.completions[a] {
                        let cw = base ^ w;
                        let mut p = 1.0;
                        for a2 in 0..l {
                            p *= llh[a2 * m + b][(cw >> a2 & 1) as usize];
                        }
                        *st += p;
                    }
                }
                child[b] = normalize(s);
            }
            let v = self.rec(&child, offset + a * m, run);
            for b in 0..m {
                if v[b] {
                    prefix[b] ^= self.rows[a];
                }
            }
        }
        for b in 0..m {
            for a2 in 0..l {
                x[a2 * m + b] = prefix[b] >> a2 & 1 == 1;
            }
        }
        x
    }
}

fn normalize(s: [f64; 2]) -> Llh {
    let mx = s[0].max(s[1]);
    if mx > 0.0 && mx.is_finite() {
        [s[0] / mx, s[1] / mx]
    } else {
        ERASED_LLH
    }
}
