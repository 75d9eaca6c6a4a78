//! Shared fixtures for the integration suites: the two-dimensional Gaussian
//! running example (three box classes on the diagonal) and an exact expected
//! crossing time for quantized two-symbol CUSUMs, solved from the absorbing
//! Markov chain instead of simulation.

// each integration target uses its own subset of these fixtures
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use qcd_core::boxset::BoxSet;
use qcd_core::distributions::{gaussian, DistPair, GaussianId};
use qcd_core::mcusum::UpsilonSet;
use qcd_core::UncertaintyModel;

pub fn pair(a: &[f64], b: &[f64]) -> DistPair {
    DistPair::new(gaussian(a), gaussian(b)).unwrap()
}

/// Candidate pair bank of the running example: a shared null anchor for both
/// change types plus the cross pairs between the two change classes.
pub fn example_bank() -> UpsilonSet {
    UpsilonSet::new(vec![
        (0, 1, pair(&[0.0, 0.0], &[0.4, 0.4])),
        (0, 2, pair(&[0.0, 0.0], &[1.5, 1.5])),
        (1, 2, pair(&[0.8, 0.8], &[1.5, 1.5])),
        (2, 1, pair(&[1.5, 1.5], &[0.8, 0.8])),
    ])
    .unwrap()
}

/// Class boxes of the running example: no-change means below the origin, a
/// bounded type-1 box, an unbounded type-2 quadrant.
pub fn example_sets() -> Vec<BoxSet> {
    vec![
        BoxSet::from_optional(vec![None, None], vec![Some(0.0), Some(0.0)]).unwrap(),
        BoxSet::new(vec![0.4, 0.4], vec![0.8, 0.8]).unwrap(),
        BoxSet::from_optional(vec![Some(1.5), Some(1.5)], vec![None, None]).unwrap(),
    ]
}

pub fn example_lfds() -> Vec<GaussianId> {
    vec![
        GaussianId::new(vec![0.0, 0.0]).unwrap(),
        GaussianId::new(vec![0.4, 0.4]).unwrap(),
        GaussianId::new(vec![1.5, 1.5]).unwrap(),
    ]
}

pub fn example_model() -> UncertaintyModel {
    UncertaintyModel::new(example_sets(), example_bank(), example_lfds()).unwrap()
}

/// Exact mean first-crossing time of a CUSUM whose increments are `+delta`
/// with probability `p_up` and `-delta` otherwise, to a threshold `h` that
/// must not sit on the `delta` lattice (so float jitter in simulated
/// increments cannot move the crossing).
///
/// The recursion `S_k = max(S_{k-1}, 0) + Z_k` keeps `max(S_k, 0)` on the
/// grid `{0, delta, 2 delta, ...}`, and a state below zero behaves exactly
/// like zero afterwards, so the collapsed chain on `i = max(S,0)/delta` is
/// Markov: up moves go to `i + 1`, down moves to `max(i - 1, 0)`, and the
/// walk is absorbed once `(i + 1) delta >= h`. Expected absorption times
/// `m` from each transient state solve `(I - Q) m = 1`.
pub fn chain_expected_crossing(delta: f64, p_up: f64, h: f64) -> f64 {
    assert!(delta > 0.0 && h > 0.0 && (0.0..=1.0).contains(&p_up));
    let raw = h / delta;
    assert!(
        (raw - raw.round()).abs() > 1e-6,
        "threshold sits on the increment lattice; the crossing would be knife-edged"
    );
    let states = raw.ceil() as usize;
    let p_down = 1.0 - p_up;
    let mut q = DMatrix::<f64>::zeros(states, states);
    for i in 0..states {
        if i + 1 < states {
            q[(i, i + 1)] += p_up;
        }
        q[(i, i.saturating_sub(1))] += p_down;
    }
    let system = DMatrix::<f64>::identity(states, states) - q;
    let ones = DVector::<f64>::from_element(states, 1.0);
    let m = system
        .lu()
        .solve(&ones)
        .expect("the absorbing chain system is nonsingular");
    m[0]
}
