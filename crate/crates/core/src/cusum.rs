//! The CUSUM statistic and its recursion.
//!
//! For a pair `(v⁰, v¹)` and observations `Y_1, …, Y_k`, the CUSUM statistic
//! is the maximum over candidate change points of the accumulated log
//! likelihood ratio:
//!
//! ```text
//! S_k = max_{1 ≤ n ≤ k}  Σ_{ℓ=n}^{k} log (dv¹/dv⁰)(Y_ℓ)
//! ```
//!
//! It satisfies the recursion `S_k = max(S_{k−1}, 0) + Z_k` with `S_0 = 0`,
//! where `Z_k` is the current log likelihood ratio increment. Note the
//! statistic itself may go negative (the recursion floors the *previous*
//! value at zero, not the result); a variant that floors the result changes
//! the first-crossing law and is deliberately not used here.

use serde::{Deserialize, Serialize};

use crate::distributions::{DistPair, Observation};
use crate::error::{Error, Result};
use crate::stream::ObservationSource;

/// Running CUSUM statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CusumState {
    /// Current statistic value `S_k`.
    pub s: f64,
    /// Number of increments absorbed so far.
    pub k: u64,
}

impl CusumState {
    /// Fresh statistic with `S_0 = 0`.
    pub fn new() -> Self {
        CusumState { s: 0.0, k: 0 }
    }

    /// Apply one increment via `S_k = max(S_{k−1}, 0) + z`.
    pub fn update(&mut self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "CUSUM increment must be finite (got {z})"
            )));
        }
        self.s = self.s.max(0.0) + z;
        self.k += 1;
        Ok(self.s)
    }
}

impl Default for CusumState {
    fn default() -> Self {
        CusumState::new()
    }
}

/// Outcome of running a single CUSUM to a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CusumOutcome {
    /// First time `k ≥ 1` with `S_k ≥ h`.
    Crossed { time: u64 },
    /// Budget (or stream) ran out after consuming this many samples.
    Censored { consumed: u64 },
}

/// Brute-force evaluation of the statistic, `max_n Σ_{ℓ=n}^k z_ℓ` computed
/// directly from the definition. Quadratic over a full trajectory; used as an
/// independent check of the recursion.
pub fn cusum_statistic_bruteforce(pair: &DistPair, ys: &[Observation]) -> Result<f64> {
    let zs = ys
        .iter()
        .map(|y| pair.llr_increment(y))
        .collect::<Result<Vec<f64>>>()?;
    if zs.is_empty() {
        return Err(Error::InvalidParameter(
            "brute-force statistic needs at least one observation".into(),
        ));
    }
    Ok(max_suffix_sum(&zs))
}

/// `max_{1 ≤ n ≤ k} Σ_{ℓ=n}^{k} z_ℓ` for `k = zs.len()`, by direct summation.
pub fn max_suffix_sum(zs: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for z in zs.iter().rev() {
        acc += z;
        if acc > best {
            best = acc;
        }
    }
    best
}

/// Run a single CUSUM on a stream until the statistic reaches `h` or `cap`
/// samples have been consumed.
pub fn cusum_run(
    pair: &DistPair,
    stream: &mut dyn ObservationSource,
    h: f64,
    cap: u64,
) -> Result<CusumOutcome> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold must be positive and finite (got {h})"
        )));
    }
    if cap == 0 {
        return Err(Error::InvalidParameter("sample budget must be positive".into()));
    }
    let mut state = CusumState::new();
    for k in 1..=cap {
        let y = match stream.next_obs() {
            Some(y) => y,
            None => return Ok(CusumOutcome::Censored { consumed: k - 1 }),
        };
        let s = state.update(pair.llr_increment(&y)?)?;
        if s >= h {
            return Ok(CusumOutcome::Crossed { time: k });
        }
    }
    Ok(CusumOutcome::Censored { consumed: cap })
}
