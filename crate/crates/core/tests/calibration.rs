//! Threshold calibration against an exact oracle: on a two-symbol model the
//! false-metric map `h -> F(h)` is piecewise constant with jumps at the
//! increment lattice, and each plateau's value solves an absorbing Markov
//! chain exactly. A calibrated threshold must land on a plateau whose exact
//! value sits near the target.

mod common;

use qcd_core::distributions::{two_symbol_pair, Distribution};
use qcd_core::mcusum::{McusumState, UpsilonSet};
use qcd_core::montecarlo::calibrate_threshold;

use common::chain_expected_crossing;

#[test]
fn calibrated_threshold_lands_on_a_plateau_near_the_target() {
    let delta = 0.25;
    let p = two_symbol_pair(delta, -delta).unwrap();
    let class_dists = vec![p.null().clone(), p.alt().clone()];
    let gamma = 100.0;
    let tolerance = 0.2;
    let cal = calibrate_threshold(
        |h| McusumState::new(UpsilonSet::new(vec![(0, 1, p.clone())])?, h),
        &class_dists,
        gamma,
        800,
        31,
        tolerance,
    )
    .unwrap();
    assert!(cal.warning.is_none(), "calibration warned: {:?}", cal.warning);
    let achieved = cal.achieved.as_ref().unwrap();
    assert!(
        (achieved.mean - gamma).abs() <= tolerance * gamma,
        "estimate {} outside the tolerance band around {gamma}",
        achieved.mean
    );

    let p_up = match p.null() {
        Distribution::Categorical(c) => c.probs()[0],
        _ => unreachable!(),
    };
    let exact = chain_expected_crossing(delta, p_up, cal.h);
    // the Monte Carlo band plus estimation noise: double the tolerance
    assert!(
        (exact - gamma).abs() <= 2.0 * tolerance * gamma,
        "exact mean crossing time {exact} at h = {} too far from {gamma}",
        cal.h
    );
    println!(
        "calibrated h = {:.4}, estimated {:.1} +- {:.1}, exact {exact:.1}",
        cal.h, achieved.mean, achieved.se
    );
}
