//! Window-limited generalized likelihood ratio diagnosis over box-shaped
//! mean sets.
//!
//! Instead of fixing one representative distribution per change type, the
//! GLR procedure profiles the unknown Gaussian mean over each type's box by
//! maximum likelihood. For candidate change points `n` inside a sliding
//! window of the last `w` observations, with segment mean `ȳ_{n:k}` over the
//! `m = k − n + 1` most recent samples and `θ̂_c` the projection of `ȳ_{n:k}`
//! onto box `c`, the statistic for type `j` at time `k` is
//!
//! ```text
//! G_k(j) = max_{k−w+1 ≤ n ≤ k}  min_{i ≠ j}  (m/2)·(‖ȳ_{n:k} − θ̂_i‖² − ‖ȳ_{n:k} − θ̂_j‖²)
//! ```
//!
//! where `i` ranges over all competing classes including the no-change box
//! `i = 0`. The procedure stops as soon as some `G_k(j) ≥ h` and isolates
//! the type with the largest statistic (smallest index on ties).
//!
//! The inner minimum over every competing class is the natural
//! multi-hypothesis form; its small-sample behaviour is sensitive to the
//! window length `w` when the true mean sits at a box corner closest to a
//! competitor, so `w` should comfortably exceed `h` divided by the smallest
//! per-sample divergence gap that must be resolved.

use std::collections::VecDeque;

use crate::boxset::BoxSet;
use crate::diagnosis::{Diagnosis, DiagnosisProcedure};
use crate::distributions::Observation;
use crate::error::{Error, Result};

/// Profile maximum likelihood estimate of a box-constrained Gaussian mean:
/// the componentwise projection of the window sample mean onto the box.
pub fn clipped_mle(set: &BoxSet, samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("clipped MLE needs at least one sample".into()));
    }
    let dim = set.dimension();
    let mut mean = vec![0.0; dim];
    for s in samples {
        if s.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: s.len() });
        }
        for (acc, v) in mean.iter_mut().zip(s.iter()) {
            *acc += v;
        }
    }
    for acc in mean.iter_mut() {
        *acc /= samples.len() as f64;
    }
    set.clip(&mean)
}

/// Running window-limited GLR procedure.
#[derive(Debug, Clone)]
pub struct GlrState {
    sets: Vec<BoxSet>,
    window: usize,
    h: f64,
    buffer: VecDeque<Vec<f64>>,
    k: u64,
    stopped: Option<Diagnosis>,
}

impl GlrState {
    /// `sets[0]` is the no-change box; `sets[1..]` are the change types.
    pub fn new(sets: Vec<BoxSet>, window: usize, h: f64) -> Result<Self> {
        if sets.len() < 2 {
            return Err(Error::InvalidParameter(
                "need the no-change box plus at least one change type".into(),
            ));
        }
        let dim = sets[0].dimension();
        if sets.iter().any(|s| s.dimension() != dim) {
            return Err(Error::InvalidParameter("all boxes must share one dimension".into()));
        }
        if window == 0 {
            return Err(Error::InvalidParameter("window must hold at least one sample".into()));
        }
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "threshold must be positive and finite (got {h})"
            )));
        }
        Ok(GlrState {
            sets,
            window,
            h,
            buffer: VecDeque::with_capacity(window),
            k: 0,
            stopped: None,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn threshold(&self) -> f64 {
        self.h
    }

    /// Squared distance from `point` to its projection onto `set`.
    fn sq_dist_to_box(set: &BoxSet, point: &[f64]) -> f64 {
        point
            .iter()
            .zip(set.lower().iter().zip(set.upper().iter()))
            .map(|(x, (l, u))| {
                let c = x.max(*l).min(*u);
                (x - c) * (x - c)
            })
            .sum()
    }

    /// Current statistics `G_k(j)` for every type `j = 1..=J`, maximizing
    /// over the candidate change points held in the window.
    pub fn statistics(&self) -> Vec<f64> {
        let num_types = self.sets.len() - 1;
        let dim = self.sets[0].dimension();
        let mut best = vec![f64::NEG_INFINITY; num_types];
        let mut sum = vec![0.0; dim];
        let mut mean = vec![0.0; dim];
        let mut dists = vec![0.0; self.sets.len()];
        for (m, y) in self.buffer.iter().rev().enumerate() {
            for (acc, v) in sum.iter_mut().zip(y.iter()) {
                *acc += v;
            }
            let m = (m + 1) as f64;
            for (dst, acc) in mean.iter_mut().zip(sum.iter()) {
                *dst = acc / m;
            }
            for (c, set) in self.sets.iter().enumerate() {
                dists[c] = Self::sq_dist_to_box(set, &mean);
            }
            for j in 1..=num_types {
                let rival = dists
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != j)
                    .map(|(_, d)| *d)
                    .fold(f64::INFINITY, f64::min);
                let term = 0.5 * m * (rival - dists[j]);
                if term > best[j - 1] {
                    best[j - 1] = term;
                }
            }
        }
        best
    }

    /// Statistic for a single type (1-based).
    pub fn statistic(&self, j: usize) -> Result<f64> {
        let num_types = self.sets.len() - 1;
        if j == 0 || j > num_types {
            return Err(Error::InvalidParameter(format!(
                "type {j} outside 1..={num_types}"
            )));
        }
        if self.buffer.is_empty() {
            return Err(Error::InvalidState("no observations in the window yet".into()));
        }
        Ok(self.statistics()[j - 1])
    }

    /// Feed one observation; evict the oldest once the window is full.
    pub fn step(&mut self, y: &Observation) -> Result<Option<Diagnosis>> {
        if self.stopped.is_some() {
            return Err(Error::InvalidState("procedure already stopped".into()));
        }
        let v = match y {
            Observation::Vector(v) => v,
            Observation::Symbol(_) => {
                return Err(Error::FamilyMismatch("GLR expects vector observations".into()))
            }
        };
        let dim = self.sets[0].dimension();
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
        if self.buffer.len() == self.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(v.clone());
        self.k += 1;

        let stats = self.statistics();
        let mut winner: Option<(usize, f64)> = None;
        for (idx, g) in stats.iter().enumerate() {
            if *g >= self.h && winner.map_or(true, |(_, best)| *g > best) {
                winner = Some((idx + 1, *g));
            }
        }
        if let Some((j, _)) = winner {
            let diag = Diagnosis { time: self.k, decision: j };
            self.stopped = Some(diag);
            return Ok(Some(diag));
        }
        Ok(None)
    }

    pub fn reset(&mut self) {
        self.buffer.clear();
        self.k = 0;
        self.stopped = None;
    }
}

impl DiagnosisProcedure for GlrState {
    fn step(&mut self, y: &Observation) -> Result<Option<Diagnosis>> {
        GlrState::step(self, y)
    }

    fn reset(&mut self) {
        GlrState::reset(self)
    }

    fn num_types(&self) -> usize {
        self.sets.len() - 1
    }
}
