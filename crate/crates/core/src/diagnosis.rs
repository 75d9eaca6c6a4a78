//! Common interface for sequential detection/isolation procedures.
//!
//! A procedure consumes observations one at a time and eventually stops with
//! a [`Diagnosis`]: the stopping time `T` and the isolated change type
//! `d ∈ {1, …, J}`. The Monte Carlo harness and the renewal construction for
//! false-metric estimation work against this trait, so they apply equally to
//! the matrix CUSUM and the GLR procedure.

use serde::{Deserialize, Serialize};

use crate::distributions::Observation;
use crate::error::{Error, Result};
use crate::stream::ObservationSource;

/// Stopping time and decision of a diagnosis procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnosis {
    /// 1-based index of the observation at which the procedure stopped.
    pub time: u64,
    /// Isolated change type, in `1..=J`.
    pub decision: usize,
}

/// Outcome of driving a procedure with a bounded sample budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Stopped(Diagnosis),
    /// Budget or stream exhausted after consuming this many samples.
    Censored { consumed: u64 },
}

pub trait DiagnosisProcedure {
    /// Feed one observation. Returns the diagnosis when the procedure stops.
    /// Stepping after a stop is a state error.
    fn step(&mut self, y: &Observation) -> Result<Option<Diagnosis>>;

    /// Return to the initial state (all statistics zeroed, sample counter
    /// restarted). Used by renewal copies and between Monte Carlo runs.
    fn reset(&mut self);

    /// Number of change types the procedure can isolate.
    fn num_types(&self) -> usize;
}

/// Drive `proc` with observations from `stream` until it stops or `cap`
/// samples have been consumed.
pub fn run_procedure(
    proc: &mut dyn DiagnosisProcedure,
    stream: &mut dyn ObservationSource,
    cap: u64,
) -> Result<RunOutcome> {
    if cap == 0 {
        return Err(Error::InvalidParameter("sample budget must be positive".into()));
    }
    for k in 1..=cap {
        let y = match stream.next_obs() {
            Some(y) => y,
            None => return Ok(RunOutcome::Censored { consumed: k - 1 }),
        };
        if let Some(diag) = proc.step(&y)? {
            return Ok(RunOutcome::Stopped(diag));
        }
    }
    Ok(RunOutcome::Censored { consumed: cap })
}

/// Repeatedly restart `proc` on the same stream until a stop with decision
/// `target` occurs, and return the cumulative number of samples consumed.
///
/// Each restart ("renewal copy") begins from zeroed statistics and continues
/// on the very next observation of the stream. The return value is the first
/// time the running sequence of copies produces decision `target`; with
/// `target` interpreted as a false alarm or false isolation this is the
/// quantity whose expectation the false metric takes.
pub fn renewal_first_target(
    proc: &mut dyn DiagnosisProcedure,
    stream: &mut dyn ObservationSource,
    target: usize,
    cap_total: u64,
) -> Result<RunOutcome> {
    if target == 0 || target > proc.num_types() {
        return Err(Error::InvalidParameter(format!(
            "target type {target} outside 1..={}",
            proc.num_types()
        )));
    }
    if cap_total == 0 {
        return Err(Error::InvalidParameter("sample budget must be positive".into()));
    }
    let mut consumed: u64 = 0;
    proc.reset();
    while consumed < cap_total {
        let y = match stream.next_obs() {
            Some(y) => y,
            None => return Ok(RunOutcome::Censored { consumed }),
        };
        consumed += 1;
        if let Some(diag) = proc.step(&y)? {
            if diag.decision == target {
                return Ok(RunOutcome::Stopped(Diagnosis { time: consumed, decision: target }));
            }
            proc.reset();
        }
    }
    Ok(RunOutcome::Censored { consumed })
}
