//! Matrix CUSUM: joint change detection and isolation from a bank of
//! pairwise CUSUM statistics.
//!
//! For `J` change types the procedure carries one CUSUM statistic
//! `S_k(v_ij)` per ordered pair `(i, j)` with `0 ≤ i ≤ J`, `1 ≤ j ≤ J`,
//! `i ≠ j`: type `j` against every competing hypothesis `i`, including the
//! no-change hypothesis `i = 0`. The per-type stopping rule
//!
//! ```text
//! τ̂^j = inf { k ≥ 1 : min_{i ≠ j} S_k(v_ij) ≥ h }
//! ```
//!
//! fires once type `j` beats *all* competitors by threshold `h`; the
//! procedure stops at `τ̂ = min_j τ̂^j` and isolates the type attaining the
//! minimum (smallest index on ties).

use std::collections::BTreeMap;

use crate::cusum::CusumState;
use crate::diagnosis::{run_procedure, Diagnosis, DiagnosisProcedure, RunOutcome};
use crate::distributions::{DistPair, Distribution, Observation};
use crate::error::{Error, Result};
use crate::stream::ObservationSource;

// ---------------------------------------------------------------------------
// Pair bank
// ---------------------------------------------------------------------------

/// Complete bank of `(i, j)` distribution pairs for a `J`-type problem:
/// exactly `J·J` entries (`J(J−1)` cross-type plus `J` no-change-vs-type),
/// all over the same observation space.
#[derive(Debug, Clone, PartialEq)]
pub struct UpsilonSet {
    pairs: BTreeMap<(usize, usize), DistPair>,
    num_types: usize,
}

fn obs_space(dist: &Distribution) -> (bool, usize) {
    match dist {
        Distribution::Gaussian(g) => (true, g.dimension()),
        Distribution::Categorical(c) => (false, c.alphabet_size()),
    }
}

impl UpsilonSet {
    pub fn new(entries: Vec<(usize, usize, DistPair)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("pair bank must not be empty".into()));
        }
        let num_types = entries.iter().map(|(_, j, _)| *j).max().unwrap();
        let mut pairs = BTreeMap::new();
        let space = obs_space(entries[0].2.null());
        for (i, j, pair) in entries {
            if j == 0 || j > num_types || i > num_types || i == j {
                return Err(Error::InvalidParameter(format!(
                    "pair index ({i},{j}) outside 0..={num_types} × 1..={num_types}, i ≠ j"
                )));
            }
            if obs_space(pair.null()) != space {
                return Err(Error::FamilyMismatch(
                    "all pairs must share one observation space".into(),
                ));
            }
            if pairs.insert((i, j), pair).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate pair index ({i},{j})")));
            }
        }
        let expected = num_types * num_types;
        if pairs.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "pair bank for {num_types} types needs {expected} entries, got {}",
                pairs.len()
            )));
        }
        Ok(UpsilonSet { pairs, num_types })
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&DistPair> {
        self.pairs.get(&(i, j))
    }

    /// Pairs in a fixed deterministic order (sorted by index).
    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &DistPair)> {
        self.pairs.iter()
    }
}

// ---------------------------------------------------------------------------
// Procedure state
// ---------------------------------------------------------------------------

/// Running matrix-CUSUM procedure.
#[derive(Debug, Clone)]
pub struct McusumState {
    upsilon: UpsilonSet,
    h: f64,
    stats: BTreeMap<(usize, usize), CusumState>,
    k: u64,
    stopped: Option<Diagnosis>,
}

impl McusumState {
    pub fn new(upsilon: UpsilonSet, h: f64) -> Result<Self> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "threshold must be positive and finite (got {h})"
            )));
        }
        let stats = upsilon.iter().map(|(idx, _)| (*idx, CusumState::new())).collect();
        Ok(McusumState { upsilon, h, stats, k: 0, stopped: None })
    }

    pub fn threshold(&self) -> f64 {
        self.h
    }

    pub fn statistic(&self, i: usize, j: usize) -> Option<f64> {
        self.stats.get(&(i, j)).map(|s| s.s)
    }

    pub fn upsilon(&self) -> &UpsilonSet {
        &self.upsilon
    }

    /// Smallest type whose rule currently fires, given statistic values.
    fn fired_type(stats: &BTreeMap<(usize, usize), f64>, num_types: usize, h: f64) -> Option<usize> {
        (1..=num_types).find(|j| {
            stats
                .iter()
                .filter(|((_, jj), _)| jj == j)
                .all(|(_, s)| *s >= h)
        })
    }

    /// Feed one observation: update every pairwise statistic, then evaluate
    /// the per-type rules. Smallest type wins if several fire at once.
    pub fn step(&mut self, y: &Observation) -> Result<Option<Diagnosis>> {
        if self.stopped.is_some() {
            return Err(Error::InvalidState("procedure already stopped".into()));
        }
        self.k += 1;
        let mut values = BTreeMap::new();
        for (idx, pair) in self.upsilon.pairs.iter() {
            let z = pair.llr_increment(y)?;
            let s = self.stats.get_mut(idx).expect("stat exists").update(z)?;
            values.insert(*idx, s);
        }
        if let Some(j) = Self::fired_type(&values, self.upsilon.num_types, self.h) {
            let diag = Diagnosis { time: self.k, decision: j };
            self.stopped = Some(diag);
            return Ok(Some(diag));
        }
        Ok(None)
    }

    pub fn reset(&mut self) {
        for s in self.stats.values_mut() {
            *s = CusumState::new();
        }
        self.k = 0;
        self.stopped = None;
    }
}

impl DiagnosisProcedure for McusumState {
    fn step(&mut self, y: &Observation) -> Result<Option<Diagnosis>> {
        McusumState::step(self, y)
    }

    fn reset(&mut self) {
        McusumState::reset(self)
    }

    fn num_types(&self) -> usize {
        self.upsilon.num_types
    }
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

/// Run a fresh procedure until it stops or `cap` samples are consumed.
pub fn mcusum_run(
    upsilon: &UpsilonSet,
    h: f64,
    stream: &mut dyn ObservationSource,
    cap: u64,
) -> Result<RunOutcome> {
    let mut proc = McusumState::new(upsilon.clone(), h)?;
    run_procedure(&mut proc, stream, cap)
}

/// Complete bank built from a concrete distribution collection
/// `collection[0..=J]` with `nu` substituted in slot `j`: every ordered pair
/// `(i, target)` with `target ≥ 1` and `i ≠ target`. This is the rule an
/// oracle would run if it knew the data really followed that collection.
pub fn matched_bank(
    collection: &[Distribution],
    j: usize,
    nu: &Distribution,
) -> Result<UpsilonSet> {
    if collection.len() < 2 {
        return Err(Error::InvalidParameter(
            "collection needs a no-change class and at least one change type".into(),
        ));
    }
    let num_types = collection.len() - 1;
    if j == 0 || j > num_types {
        return Err(Error::InvalidParameter(format!(
            "substitution slot {j} outside 1..={num_types}"
        )));
    }
    let mut dists = collection.to_vec();
    dists[j] = nu.clone();
    let mut entries = Vec::new();
    for target in 1..=num_types {
        for i in 0..=num_types {
            if i != target {
                entries.push((i, target, DistPair::new(dists[i].clone(), dists[target].clone())?));
            }
        }
    }
    UpsilonSet::new(entries)
}

/// First time a running sequence of renewal copies stops with decision
/// `target_j`: copies reset all statistics to zero and continue on the same
/// stream. Returns the cumulative sample count, or censoring at `cap_total`.
pub fn renewal_first_detection(
    upsilon: &UpsilonSet,
    h: f64,
    stream: &mut dyn ObservationSource,
    target_j: usize,
    cap_total: u64,
) -> Result<RunOutcome> {
    let mut proc = McusumState::new(upsilon.clone(), h)?;
    crate::diagnosis::renewal_first_target(&mut proc, stream, target_j, cap_total)
}
