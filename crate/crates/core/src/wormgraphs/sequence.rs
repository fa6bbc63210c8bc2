use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{q_frac, Q};
use crate::{Error, Result};

/// Deepest generation the construction accepts.
pub const MAX_DEPTH: usize = 24;

/// Subdivision counts `m_k` and their running products `n_k`.
///
/// Generation-`k` cells are split into `m[k + 1]` piles, so the height of a
/// generation-`k` cell is `1 / n[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MkSequence {
    pub max_depth: usize,
    pub m: Vec<u64>,
    pub n: Vec<u64>,
}

impl MkSequence {
    /// The lower target `100 k² 2^k`.
    pub fn lower_target(k: usize) -> u64 {
        (100 * (k as u64).pow(2)) << k
    }

    /// The upper bound `10000 k² 2^k`.
    pub fn upper_target(k: usize) -> u64 {
        (10_000 * (k as u64).pow(2)) << k
    }

    pub(crate) fn with_depth(max_depth: usize) -> Result<Self> {
        if max_depth > MAX_DEPTH {
            return Err(Error::param(
                "depth",
                format!("must be at most {MAX_DEPTH}, got {max_depth}"),
            ));
        }
        let mut m = vec![1u64];
        let mut n = vec![1u64];
        for k in 1..=max_depth {
            let prev = n[k - 1];
            let mk = Self::lower_target(k).div_ceil(prev).max(1);
            m.push(mk);
            n.push(mk * prev);
        }
        Ok(Self { max_depth, m, n })
    }

    /// `∑_{k=1}^{K} 2^k / n_k`, exactly.
    pub fn slope_budget(&self) -> Q {
        (1..=self.max_depth).fold(Q::zero(), |acc, k| acc + q_frac(1i64 << k, self.n[k]))
    }

    /// Checks the sequence invariants exactly; returns the first violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.m.first() != Some(&1) || self.n.first() != Some(&1) {
            return Err("m_0 and n_0 must be 1".into());
        }
        if self.m.len() != self.max_depth + 1 || self.n.len() != self.max_depth + 1 {
            return Err("length mismatch".into());
        }
        for k in 1..=self.max_depth {
            if self.m[k] < 1 {
                return Err(format!("m_{k} < 1"));
            }
            if self.n[k] != self.n[k - 1] * self.m[k] {
                return Err(format!("n_{k} is not the running product"));
            }
            if self.n[k] < self.n[k - 1] {
                return Err(format!("n decreases at {k}"));
            }
            if self.n[k] < Self::lower_target(k) || self.n[k] > Self::upper_target(k) {
                return Err(format!("n_{k} = {} outside [100k²2^k, 10000k²2^k]", self.n[k]));
            }
        }
        if self.slope_budget() >= Q::one() / Q::from_integer(3.into()) {
            return Err("∑ 2^k/n_k is not below 1/3".into());
        }
        Ok(())
    }
}

/// `m_0 = 1`, `m_k = ⌈100 k² 2^k / n_{k−1}⌉`.
pub fn build_sequence(max_depth: usize) -> Result<MkSequence> {
    if !(1..=MAX_DEPTH).contains(&max_depth) {
        return Err(Error::param(
            "K",
            format!("must lie in 1..={MAX_DEPTH}, got {max_depth}"),
        ));
    }
    MkSequence::with_depth(max_depth)
}
