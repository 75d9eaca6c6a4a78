//! Observation sources feeding sequential procedures.
//!
//! A source yields observations one at a time; `None` means the source is
//! exhausted (only possible for recorded streams; the stochastic sources are
//! infinite). Runners treat exhaustion like hitting a sample budget.

use crate::distributions::{Distribution, Observation};
use crate::rng::RngStream;

pub trait ObservationSource {
    fn next_obs(&mut self) -> Option<Observation>;
}

/// I.i.d. draws from a fixed distribution.
#[derive(Debug, Clone)]
pub struct IidStream {
    dist: Distribution,
    rng: RngStream,
}

impl IidStream {
    pub fn new(dist: Distribution, rng: RngStream) -> Self {
        IidStream { dist, rng }
    }
}

impl ObservationSource for IidStream {
    fn next_obs(&mut self) -> Option<Observation> {
        Some(self.dist.sample(&mut self.rng))
    }
}

/// Pre-change distribution up to (excluding) `change_time`, post-change from
/// `change_time` on. Sample indices are 1-based, so `change_time = 1` means
/// every observation is post-change.
#[derive(Debug, Clone)]
pub struct ChangeStream {
    pre: Distribution,
    post: Distribution,
    change_time: u64,
    drawn: u64,
    rng: RngStream,
}

impl ChangeStream {
    pub fn new(pre: Distribution, post: Distribution, change_time: u64, rng: RngStream) -> Self {
        ChangeStream { pre, post, change_time, drawn: 0, rng }
    }
}

impl ObservationSource for ChangeStream {
    fn next_obs(&mut self) -> Option<Observation> {
        self.drawn += 1;
        let dist = if self.drawn < self.change_time { &self.pre } else { &self.post };
        Some(dist.sample(&mut self.rng))
    }
}

/// Replays a fixed sequence, then reports exhaustion.
#[derive(Debug, Clone)]
pub struct RecordedStream {
    data: Vec<Observation>,
    next: usize,
}

impl RecordedStream {
    pub fn new(data: Vec<Observation>) -> Self {
        RecordedStream { data, next: 0 }
    }

    /// Record `n` observations from another source into a replayable stream.
    pub fn record(source: &mut dyn ObservationSource, n: usize) -> Self {
        let data = (0..n).filter_map(|_| source.next_obs()).collect();
        RecordedStream::new(data)
    }

    /// Rewind to the first observation.
    pub fn rewind(&mut self) {
        self.next = 0;
    }
}

impl ObservationSource for RecordedStream {
    fn next_obs(&mut self) -> Option<Observation> {
        let obs = self.data.get(self.next).cloned();
        if obs.is_some() {
            self.next += 1;
        }
        obs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::gaussian;

    #[test]
    fn change_stream_switches_at_change_time() {
        // Distinguish pre/post by sign of a huge mean split.
        let pre = gaussian(&[-100.0]);
        let post = gaussian(&[100.0]);
        let mut s = ChangeStream::new(pre, post, 4, RngStream::from_seed(5));
        for k in 1..=8u64 {
            match s.next_obs().unwrap() {
                Observation::Vector(v) => {
                    if k < 4 {
                        assert!(v[0] < 0.0, "sample {k} should be pre-change");
                    } else {
                        assert!(v[0] > 0.0, "sample {k} should be post-change");
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn recorded_stream_replays_then_exhausts() {
        let data = vec![Observation::Symbol(0), Observation::Symbol(1)];
        let mut s = RecordedStream::new(data.clone());
        assert_eq!(s.next_obs(), Some(data[0].clone()));
        assert_eq!(s.next_obs(), Some(data[1].clone()));
        assert_eq!(s.next_obs(), None);
        s.rewind();
        assert_eq!(s.next_obs(), Some(data[0].clone()));
    }
}
