//! Reproducible Monte Carlo estimation of diagnosis performance.
//!
//! Two quantities drive procedure design: the detection and isolation delay
//! after an immediate change (the worst case over change times is attained
//! at a change on the very first sample when statistics start from zero, so
//! delay runs simulate `λ = 1`), and the mean number of samples until a
//! false alarm or false isolation of a given type occurs under data from a
//! non-matching class, counted across renewal restarts of the procedure.
//!
//! Determinism: run `r` of an estimate draws from
//! `RngStream::for_run(master_seed, salt, r)`, so each run's data is fixed by
//! the master seed and its index alone. Runs execute in parallel over a
//! rayon pool, results are collected in run order and reduced by pairwise
//! summation, so estimates are bit-identical no matter how many threads
//! execute them. Sharing one master seed across procedure variants or across
//! thresholds also gives common random numbers, which tightens comparisons.
//!
//! Censoring: a run that exhausts its sample budget contributes the budget
//! itself as its (truncated) stop time and bumps the `censored` counter.
//! Truncation can only pull estimates down, so checks of the form
//! "estimate ≥ bound" stay conservative; estimates with any censored runs
//! are flagged as lower bounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::boundedness::{check_dsb_direct, delta_ij, UncertaintyModel};
use crate::diagnosis::{renewal_first_target, run_procedure, DiagnosisProcedure, RunOutcome};
use crate::distributions::{DistPair, Distribution, GaussianId};
use crate::error::{Error, Result};
use crate::mcusum::{matched_bank, McusumState};
use crate::rng::RngStream;
use crate::stream::{ChangeStream, IidStream};

const SALT_DELAY: u64 = 0x11;
const SALT_FALSE: u64 = 0x22;

/// Budget for one false-metric run, as a multiple of the target γ. Runs
/// longer than this are censored; the factor keeps truncation bias far from
/// the `e^h` scale the estimates are checked against.
const FALSE_CAP_FACTOR: f64 = 20.0;

/// Bisection budget for threshold calibration, counted in false-metric
/// evaluations (each one a full Monte Carlo batch).
const CALIBRATION_EVALS: usize = 12;

// --- scenarios -------------------------------------------------------------

/// Data-generating description of one simulated run: i.i.d. `pre` up to the
/// change time, i.i.d. `post` from the change time on (1-based, so a change
/// at time 1 means every sample is post-change).
#[derive(Debug, Clone)]
pub struct Scenario {
    pre: Distribution,
    post: Option<Distribution>,
    true_type: Option<usize>,
    change_time: u64,
}

impl Scenario {
    pub fn new(
        pre: Distribution,
        post: Option<Distribution>,
        true_type: Option<usize>,
        change_time: u64,
    ) -> Result<Self> {
        if change_time == 0 {
            return Err(Error::InvalidParameter("change time is 1-based".into()));
        }
        if post.is_some() != true_type.is_some() {
            return Err(Error::InvalidParameter(
                "post-change distribution and true type must come together".into(),
            ));
        }
        if true_type == Some(0) {
            return Err(Error::InvalidParameter("change types are numbered from 1".into()));
        }
        if let Some(p) = &post {
            DistPair::new(pre.clone(), p.clone())?;
        }
        Ok(Scenario { pre, post, true_type, change_time })
    }

    /// Change of type `true_type` active from the first sample.
    pub fn immediate_change(
        pre: Distribution,
        post: Distribution,
        true_type: usize,
    ) -> Result<Self> {
        Scenario::new(pre, Some(post), Some(true_type), 1)
    }

    /// No change ever happens; data is i.i.d. `pre`.
    pub fn no_change(pre: Distribution) -> Self {
        Scenario { pre, post: None, true_type: None, change_time: 1 }
    }

    pub fn pre(&self) -> &Distribution {
        &self.pre
    }

    pub fn post(&self) -> Option<&Distribution> {
        self.post.as_ref()
    }

    pub fn true_type(&self) -> Option<usize> {
        self.true_type
    }

    pub fn change_time(&self) -> u64 {
        self.change_time
    }
}

// --- estimates --------------------------------------------------------------

/// Sample mean with its standard error and censoring bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub runs: usize,
    pub censored: usize,
    pub cap: u64,
}

impl McEstimate {
    /// Summarize raw per-run values. `censored` of them are truncated at the
    /// budget and already recorded as the budget value.
    pub fn from_samples(values: &[f64], censored: usize, cap: u64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(
                "need at least 2 runs for a standard error".into(),
            ));
        }
        let n = values.len() as f64;
        let mean = pairwise_sum(values) / n;
        let devs: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
        let se = (pairwise_sum(&devs) / (n - 1.0) / n).sqrt();
        Ok(McEstimate { mean, se, runs: values.len(), censored, cap })
    }

    /// True when censoring truncated some runs, making the mean a lower
    /// bound on the uncensored quantity.
    pub fn is_lower_bound(&self) -> bool {
        self.censored > 0
    }
}

/// Delay estimate plus the fraction of stopped runs that isolated the wrong
/// type.
#[derive(Debug, Clone, Serialize)]
pub struct DelayEstimate {
    pub delay: McEstimate,
    pub misisolation: f64,
}

/// Summation with a balanced reduction tree; the result depends only on the
/// order of `xs`, not on how work was distributed across threads.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

// --- delay estimation --------------------------------------------------------

/// Mean stop time of a fresh procedure on data that changes at the first
/// sample, over `runs` independent runs. Runs that do not stop within `cap`
/// samples contribute `cap` and are counted as censored.
pub fn estimate_delay<P, F>(
    factory: F,
    scenario: &Scenario,
    runs: usize,
    master_seed: u64,
    cap: u64,
) -> Result<DelayEstimate>
where
    P: DiagnosisProcedure,
    F: Fn() -> Result<P> + Sync,
{
    let post = scenario
        .post()
        .ok_or_else(|| Error::InvalidParameter("delay runs need a post-change distribution".into()))?;
    if scenario.change_time() != 1 {
        return Err(Error::InvalidParameter(
            "delay is estimated with the change on the first sample".into(),
        ));
    }
    if runs < 2 {
        return Err(Error::InvalidParameter("need at least 2 runs".into()));
    }
    if cap == 0 {
        return Err(Error::InvalidParameter("sample budget must be positive".into()));
    }
    let true_type = scenario.true_type().expect("present together with post");
    let probe = factory()?;
    if true_type > probe.num_types() {
        return Err(Error::InvalidParameter(format!(
            "scenario type {true_type} outside the procedure's 1..={}",
            probe.num_types()
        )));
    }
    drop(probe);

    let outcomes: Vec<(f64, Option<usize>)> = (0..runs as u64)
        .into_par_iter()
        .map(|r| -> Result<(f64, Option<usize>)> {
            let mut proc = factory()?;
            let rng = RngStream::for_run(master_seed, SALT_DELAY, r);
            let mut stream =
                ChangeStream::new(scenario.pre().clone(), post.clone(), scenario.change_time(), rng);
            match run_procedure(&mut proc, &mut stream, cap)? {
                RunOutcome::Stopped(d) => Ok((d.time as f64, Some(d.decision))),
                RunOutcome::Censored { .. } => Ok((cap as f64, None)),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let times: Vec<f64> = outcomes.iter().map(|(t, _)| *t).collect();
    let censored = outcomes.iter().filter(|(_, d)| d.is_none()).count();
    let stopped = outcomes.len() - censored;
    let wrong =
        outcomes.iter().filter(|(_, d)| matches!(d, Some(x) if *x != true_type)).count();
    let misisolation = if stopped == 0 { 0.0 } else { wrong as f64 / stopped as f64 };
    Ok(DelayEstimate {
        delay: McEstimate::from_samples(&times, censored, cap)?,
        misisolation,
    })
}

// --- false metric estimation ---------------------------------------------------

/// Mean time until the first `target`-type decision across renewal restarts,
/// under data i.i.d. from `data` (a class other than `target`). Censored
/// runs contribute the whole budget, so the estimate is a lower bound
/// whenever `censored > 0`.
pub fn estimate_false_metric<P, F>(
    factory: F,
    data: &Distribution,
    target: usize,
    runs: usize,
    master_seed: u64,
    cap_total: u64,
) -> Result<McEstimate>
where
    P: DiagnosisProcedure,
    F: Fn() -> Result<P> + Sync,
{
    if runs < 2 {
        return Err(Error::InvalidParameter("need at least 2 runs".into()));
    }
    if cap_total == 0 {
        return Err(Error::InvalidParameter("sample budget must be positive".into()));
    }
    let outcomes: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut proc = factory()?;
            let rng = RngStream::for_run(master_seed, SALT_FALSE + target as u64, r);
            let mut stream = IidStream::new(data.clone(), rng);
            match renewal_first_target(&mut proc, &mut stream, target, cap_total)? {
                RunOutcome::Stopped(d) => Ok(d.time as f64),
                RunOutcome::Censored { .. } => Ok(cap_total as f64),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let censored = outcomes.iter().filter(|t| **t >= cap_total as f64).count();
    McEstimate::from_samples(&outcomes, censored, cap_total)
}

// --- threshold calibration -------------------------------------------------------

/// Default threshold for a false-metric target γ: `h = log γ`, which
/// guarantees the false metric is at least γ for likelihood-ratio CUSUM
/// banks.
pub fn theoretical_threshold(gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "false-metric target must be a finite value above 1 (got {gamma})"
        )));
    }
    Ok(gamma.ln())
}

/// Result of a Monte Carlo threshold search.
#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub h: f64,
    /// Smallest false-metric estimate across class/target combinations at
    /// the returned threshold; absent when the search fell back without a
    /// usable evaluation.
    pub achieved: Option<McEstimate>,
    pub warning: Option<String>,
}

/// Smallest estimated false metric over every ordered (data class, target)
/// combination for the procedure built at threshold `h`.
fn eval_false_floor<P, F>(
    factory: &F,
    class_dists: &[Distribution],
    h: f64,
    runs: usize,
    master_seed: u64,
    cap_total: u64,
) -> Result<McEstimate>
where
    P: DiagnosisProcedure,
    F: Fn(f64) -> Result<P> + Sync,
{
    let num_types = class_dists.len() - 1;
    let mut floor: Option<McEstimate> = None;
    for i in 0..=num_types {
        for j in 1..=num_types {
            if i == j {
                continue;
            }
            let est = estimate_false_metric(
                || factory(h),
                &class_dists[i],
                j,
                runs,
                master_seed,
                cap_total,
            )?;
            if floor.as_ref().map_or(true, |f| est.mean < f.mean) {
                floor = Some(est);
            }
        }
    }
    floor.ok_or_else(|| Error::InvalidParameter("no class/target combination to evaluate".into()))
}

/// Find a threshold whose smallest false-metric estimate lands within
/// `tolerance·γ` of γ. The search starts from the theoretical `h = log γ`,
/// walks along the log of the estimate to bracket the target, then bisects.
/// Every evaluation reuses the same master seed, so the map `h ↦ estimate`
/// is sampled with common random numbers and behaves monotonically up to
/// noise. If estimates still move against the bracket by more than three
/// combined standard errors, or the evaluation budget runs out, the search
/// returns a conservative threshold and says so in `warning`.
pub fn calibrate_threshold<P, F>(
    factory: F,
    class_dists: &[Distribution],
    gamma: f64,
    runs: usize,
    master_seed: u64,
    tolerance: f64,
) -> Result<Calibration>
where
    P: DiagnosisProcedure,
    F: Fn(f64) -> Result<P> + Sync,
{
    let h0 = theoretical_threshold(gamma)?;
    if !(0.0..1.0).contains(&tolerance) || tolerance == 0.0 {
        return Err(Error::InvalidParameter("tolerance must lie in (0, 1)".into()));
    }
    if class_dists.len() < 2 {
        return Err(Error::InvalidParameter(
            "need the no-change class plus at least one change class".into(),
        ));
    }
    let probe = factory(h0)?;
    if class_dists.len() != probe.num_types() + 1 {
        return Err(Error::InvalidParameter(format!(
            "need {} class distributions (got {})",
            probe.num_types() + 1,
            class_dists.len()
        )));
    }
    drop(probe);
    let cap_total = (FALSE_CAP_FACTOR * gamma).ceil() as u64;
    let lo_target = gamma * (1.0 - tolerance);
    let hi_target = gamma * (1.0 + tolerance);

    let eval = |h: f64| -> Result<McEstimate> {
        eval_false_floor(&factory, class_dists, h, runs, master_seed, cap_total)
    };

    let mut evals = 1usize;
    let mut h = h0;
    let mut est = eval(h)?;
    let mut below: Option<(f64, McEstimate)> = None;
    let mut above: Option<(f64, McEstimate)> = None;

    loop {
        if est.mean >= lo_target && est.mean <= hi_target {
            return Ok(Calibration { h, achieved: Some(est), warning: None });
        }
        // update the bracket, watching for reversals beyond noise
        if est.mean < gamma {
            if let Some((hb, eb)) = &below {
                if h > *hb && est.mean + 3.0 * (est.se + eb.se) < eb.mean {
                    return Ok(non_monotone_fallback(h0, above));
                }
            }
            if below.as_ref().map_or(true, |(hb, _)| h > *hb) {
                below = Some((h, est.clone()));
            }
        } else {
            if let Some((ha, ea)) = &above {
                if h < *ha && est.mean > ea.mean + 3.0 * (est.se + ea.se) {
                    return Ok(non_monotone_fallback(h0, above));
                }
            }
            if above.as_ref().map_or(true, |(ha, _)| h < *ha) {
                above = Some((h, est.clone()));
            }
        }
        if evals >= CALIBRATION_EVALS {
            break;
        }
        h = match (&below, &above) {
            // bracketed: bisect
            (Some((hb, _)), Some((ha, _))) => 0.5 * (hb + ha),
            // one-sided: step along the log of the estimate, conservatively
            _ => {
                let step = (est.mean / gamma).ln().clamp(-2.0, 2.0);
                (h - step).max(0.05)
            }
        };
        est = eval(h)?;
        evals += 1;
    }

    match above {
        Some((ha, ea)) => Ok(Calibration {
            h: ha,
            achieved: Some(ea),
            warning: Some(format!(
                "evaluation budget exhausted after {evals} batches; returning the smallest \
                 threshold whose estimate stayed at or above the target"
            )),
        }),
        None => Ok(Calibration {
            h: h0,
            achieved: None,
            warning: Some(format!(
                "evaluation budget exhausted after {evals} batches without reaching the \
                 target from below; falling back to the theoretical threshold"
            )),
        }),
    }
}

fn non_monotone_fallback(h0: f64, above: Option<(f64, McEstimate)>) -> Calibration {
    let msg = "estimates moved against the threshold by more than three standard errors; \
               returning a conservative threshold"
        .to_string();
    match above {
        Some((ha, ea)) => Calibration { h: ha, achieved: Some(ea), warning: Some(msg) },
        None => Calibration { h: h0, achieved: None, warning: Some(msg) },
    }
}

// --- robust vs oracle comparison ----------------------------------------------

/// One sweep point: the true post-change mean, delays of the robust bank and
/// of an oracle matched to the true distribution, and the closed-form bound
/// on their asymptotic ratio.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub true_type: usize,
    pub phi: Vec<f64>,
    pub robust: DelayEstimate,
    pub oracle: DelayEstimate,
    pub ratio: f64,
    pub bound: f64,
}

/// Delays of the robust bank against a correctly specified oracle across a
/// grid of true post-change means, at the theoretical threshold for `gamma`.
///
/// Each grid entry `(j, φ)` simulates data that changes from the class-0
/// bounding distribution to `N(φ, I)` on the first sample. The oracle is the
/// matched procedure: the same matrix rule, but with every pair rebuilt from
/// the true collection, which holds `N(φ, I)` in slot `j` and the model's
/// bounding distributions everywhere else. The `bound` column is the
/// closed-form asymptotic cap on `robust/oracle` for data that only ever
/// visits classes 0 and `j`: `D(N(φ)‖ν₀)` divided by the smallest drift
/// `Δ_ij(N(φ))` among the robust bank's pairs targeting `j`.
pub fn compare_robust_vs_oracle(
    model: &UncertaintyModel,
    grid: &[(usize, Vec<f64>)],
    gamma: f64,
    runs: usize,
    master_seed: u64,
    cap: u64,
) -> Result<Vec<CompareRow>> {
    let cert = check_dsb_direct(model)?;
    if !cert.passed {
        return Err(Error::InvalidState(
            "uncertainty model is not dually stochastically bounded; the delay \
             guarantees being compared do not apply"
                .into(),
        ));
    }
    let h = theoretical_threshold(gamma)?;
    let nu0 = Distribution::Gaussian(model.lfds()[0].clone());
    let mut rows = Vec::with_capacity(grid.len());
    for (j, phi) in grid {
        let j = *j;
        if j == 0 || j > model.num_types() {
            return Err(Error::InvalidParameter(format!(
                "grid change type {j} outside 1..={}",
                model.num_types()
            )));
        }
        let nu_j = Distribution::Gaussian(GaussianId::new(phi.clone())?);
        let scenario = Scenario::immediate_change(nu0.clone(), nu_j.clone(), j)?;

        let bank = model.pairs().clone();
        let robust =
            estimate_delay(|| McusumState::new(bank.clone(), h), &scenario, runs, master_seed, cap)?;

        let oracle_bank = matched_bank(&model.lfd_distributions(), j, &nu_j)?;
        let oracle = estimate_delay(
            || McusumState::new(oracle_bank.clone(), h),
            &scenario,
            runs,
            master_seed,
            cap,
        )?;

        let numerator = nu_j.kl_divergence(&nu0)?;
        let mut drift = f64::INFINITY;
        for (&(i, jj), pair) in model.pairs().iter() {
            if jj == j && i != j {
                drift = drift.min(delta_ij(&nu_j, pair)?);
            }
        }
        let bound = if drift > 0.0 { numerator / drift } else { f64::INFINITY };
        let ratio = robust.delay.mean / oracle.delay.mean;
        rows.push(CompareRow { true_type: j, phi: phi.clone(), robust, oracle, ratio, bound });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxset::BoxSet;
    use crate::diagnosis::Diagnosis;
    use crate::distributions::{gaussian, two_symbol_pair, Categorical, Observation};
    use crate::mcusum::UpsilonSet;

    fn pair(a: &[f64], b: &[f64]) -> DistPair {
        DistPair::new(gaussian(a), gaussian(b)).unwrap()
    }

    fn example_bank() -> UpsilonSet {
        UpsilonSet::new(vec![
            (0, 1, pair(&[0.0, 0.0], &[0.4, 0.4])),
            (0, 2, pair(&[0.0, 0.0], &[1.5, 1.5])),
            (1, 2, pair(&[0.8, 0.8], &[1.5, 1.5])),
            (2, 1, pair(&[1.5, 1.5], &[0.8, 0.8])),
        ])
        .unwrap()
    }

    fn example_model() -> UncertaintyModel {
        let sets = vec![
            BoxSet::from_optional(vec![None, None], vec![Some(0.0), Some(0.0)]).unwrap(),
            BoxSet::new(vec![0.4, 0.4], vec![0.8, 0.8]).unwrap(),
            BoxSet::from_optional(vec![Some(1.5), Some(1.5)], vec![None, None]).unwrap(),
        ];
        let lfds = vec![
            GaussianId::new(vec![0.0, 0.0]).unwrap(),
            GaussianId::new(vec![0.4, 0.4]).unwrap(),
            GaussianId::new(vec![1.5, 1.5]).unwrap(),
        ];
        UncertaintyModel::new(sets, example_bank(), lfds).unwrap()
    }

    struct NeverStop;

    impl DiagnosisProcedure for NeverStop {
        fn step(&mut self, _y: &Observation) -> Result<Option<Diagnosis>> {
            Ok(None)
        }
        fn reset(&mut self) {}
        fn num_types(&self) -> usize {
            1
        }
    }

    // --- estimates -------------------------------------------------------

    #[test]
    fn estimate_summary_hand_values() {
        let est = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0, 5.0], 0, 100).unwrap();
        assert_eq!(est.mean, 3.0);
        assert!((est.se - (0.5f64).sqrt()).abs() < 1e-15);
        assert!(!est.is_lower_bound());
        assert!(McEstimate::from_samples(&[1.0], 0, 100).is_err());
        let flagged = McEstimate::from_samples(&[1.0, 100.0], 1, 100).unwrap();
        assert!(flagged.is_lower_bound());
    }

    #[test]
    fn scenario_validation() {
        let g = gaussian(&[0.0]);
        assert!(Scenario::new(g.clone(), Some(g.clone()), Some(1), 0).is_err());
        assert!(Scenario::new(g.clone(), Some(g.clone()), None, 1).is_err());
        assert!(Scenario::new(g.clone(), None, Some(1), 1).is_err());
        assert!(Scenario::new(g.clone(), Some(g.clone()), Some(0), 1).is_err());
        assert!(Scenario::new(g.clone(), Some(gaussian(&[0.0, 0.0])), Some(1), 1).is_err());
        assert!(Scenario::no_change(g).post().is_none());
    }

    // --- delay -----------------------------------------------------------

    #[test]
    fn deterministic_unit_increments_cross_exactly_at_the_threshold() {
        // the pair's log-likelihood ratio is +1 on symbol 0, the data makes
        // symbol 0 all but impossible to miss, and the threshold sits
        // between lattice points so rounding in the increment cannot move
        // the crossing time
        let p = two_symbol_pair(1.0, -1.0).unwrap();
        let bank = UpsilonSet::new(vec![(0, 1, p)]).unwrap();
        let data = Distribution::Categorical(
            Categorical::new(vec![1.0 - 1e-13, 1e-13]).unwrap(),
        );
        let scenario = Scenario::immediate_change(data.clone(), data, 1).unwrap();
        let est = estimate_delay(
            || McusumState::new(bank.clone(), 9.5),
            &scenario,
            50,
            5,
            1000,
        )
        .unwrap();
        assert_eq!(est.delay.mean, 10.0);
        assert_eq!(est.delay.se, 0.0);
        assert_eq!(est.delay.censored, 0);
        assert_eq!(est.misisolation, 0.0);
    }

    #[test]
    fn delay_at_the_bounding_distribution_sits_in_the_expected_band() {
        let h = (1.0e4f64).ln();
        let scenario =
            Scenario::immediate_change(gaussian(&[0.0, 0.0]), gaussian(&[0.4, 0.4]), 1).unwrap();
        let est = estimate_delay(
            || McusumState::new(example_bank(), h),
            &scenario,
            500,
            1,
            10_000,
        )
        .unwrap();
        assert_eq!(est.delay.censored, 0);
        assert!(
            est.delay.mean > 55.0 && est.delay.mean < 80.0,
            "mean {} se {}",
            est.delay.mean,
            est.delay.se
        );
        assert!(est.misisolation <= 0.01, "misisolation {}", est.misisolation);
    }

    #[test]
    fn matched_oracle_speeds_up_away_from_the_boundary() {
        let h = (1.0e4f64).ln();
        let at = |mean: &[f64]| -> f64 {
            let bank =
                UpsilonSet::new(vec![(0, 1, pair(&[0.0, 0.0], mean))]).unwrap();
            let scenario =
                Scenario::immediate_change(gaussian(&[0.0, 0.0]), gaussian(mean), 1).unwrap();
            estimate_delay(|| McusumState::new(bank.clone(), h), &scenario, 200, 9, 10_000)
                .unwrap()
                .delay
                .mean
        };
        assert!(at(&[2.0, 2.0]) < at(&[1.5, 1.5]));
    }

    #[test]
    fn misisolation_reflects_wrong_decisions() {
        // type-1 scenario fed with data from deep inside the type-2 set
        let h = 5.0;
        let scenario =
            Scenario::immediate_change(gaussian(&[0.0, 0.0]), gaussian(&[1.5, 1.5]), 1).unwrap();
        let est = estimate_delay(
            || McusumState::new(example_bank(), h),
            &scenario,
            100,
            3,
            10_000,
        )
        .unwrap();
        assert!(est.misisolation > 0.9, "misisolation {}", est.misisolation);
    }

    #[test]
    fn censored_runs_are_flagged_and_contribute_the_budget() {
        let scenario =
            Scenario::immediate_change(gaussian(&[0.0]), gaussian(&[0.1]), 1).unwrap();
        let est = estimate_delay(|| Ok(NeverStop), &scenario, 10, 2, 50).unwrap();
        assert_eq!(est.delay.censored, 10);
        assert_eq!(est.delay.mean, 50.0);
        assert!(est.delay.is_lower_bound());
    }

    #[test]
    fn delay_estimation_validates_inputs() {
        let g = gaussian(&[0.0, 0.0]);
        let ok = Scenario::immediate_change(g.clone(), gaussian(&[0.4, 0.4]), 1).unwrap();
        let late = Scenario::new(g.clone(), Some(gaussian(&[0.4, 0.4])), Some(1), 5).unwrap();
        let none = Scenario::no_change(g);
        let factory = || McusumState::new(example_bank(), 4.0);
        assert!(estimate_delay(factory, &late, 10, 0, 100).is_err());
        assert!(estimate_delay(factory, &none, 10, 0, 100).is_err());
        assert!(estimate_delay(factory, &ok, 1, 0, 100).is_err());
        assert!(estimate_delay(factory, &ok, 10, 0, 0).is_err());
        let bad_type =
            Scenario::immediate_change(gaussian(&[0.0, 0.0]), gaussian(&[0.4, 0.4]), 7).unwrap();
        assert!(estimate_delay(factory, &bad_type, 10, 0, 100).is_err());
    }

    #[test]
    fn identical_seeds_are_bit_identical_across_thread_counts() {
        let h = 4.0;
        let scenario =
            Scenario::immediate_change(gaussian(&[0.0, 0.0]), gaussian(&[0.4, 0.4]), 1).unwrap();
        let run = || {
            estimate_delay(
                || McusumState::new(example_bank(), h),
                &scenario,
                64,
                77,
                10_000,
            )
            .unwrap()
        };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run);
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(run);
        assert_eq!(single.delay.mean.to_bits(), many.delay.mean.to_bits());
        assert_eq!(single.delay.se.to_bits(), many.delay.se.to_bits());
        assert_eq!(single.misisolation.to_bits(), many.misisolation.to_bits());
    }

    #[test]
    fn delay_grows_with_the_threshold_under_shared_streams() {
        let scenario =
            Scenario::immediate_change(gaussian(&[0.0, 0.0]), gaussian(&[0.4, 0.4]), 1).unwrap();
        let at = |h: f64| {
            estimate_delay(
                || McusumState::new(example_bank(), h),
                &scenario,
                100,
                11,
                10_000,
            )
            .unwrap()
            .delay
            .mean
        };
        assert!(at(4.0) <= at(8.0));
    }

    // --- false metric ------------------------------------------------------

    #[test]
    fn false_metric_respects_the_exponential_lower_bound() {
        let h = 2.0;
        let est = estimate_false_metric(
            || McusumState::new(example_bank(), h),
            &gaussian(&[0.0, 0.0]),
            1,
            300,
            13,
            2000,
        )
        .unwrap();
        assert!(
            est.mean >= h.exp() - 2.0 * est.se,
            "mean {} se {} vs bound {}",
            est.mean,
            est.se,
            h.exp()
        );
    }

    #[test]
    fn false_metric_censors_never_stopping_procedures() {
        let est = estimate_false_metric(
            || Ok(NeverStop),
            &gaussian(&[0.0]),
            1,
            5,
            0,
            200,
        )
        .unwrap();
        assert_eq!(est.censored, 5);
        assert_eq!(est.mean, 200.0);
        assert!(est.is_lower_bound());
    }

    // --- calibration ---------------------------------------------------------

    #[test]
    fn theoretical_threshold_values() {
        let h = theoretical_threshold(1.0e4).unwrap();
        assert!((h - 9.210340371976184).abs() < 1e-12);
        assert!(theoretical_threshold(1.0).is_err());
        assert!(theoretical_threshold(0.5).is_err());
        assert!(theoretical_threshold(f64::INFINITY).is_err());
    }

    #[test]
    fn calibration_lands_in_the_band_on_a_small_model() {
        let p = two_symbol_pair(0.25, -0.25).unwrap();
        let class_dists = vec![p.null().clone(), p.alt().clone()];
        let factory = |h: f64| -> Result<McusumState> {
            McusumState::new(UpsilonSet::new(vec![(0, 1, p.clone())])?, h)
        };
        let gamma = 100.0;
        let cal =
            calibrate_threshold(factory, &class_dists, gamma, 400, 7, 0.25).unwrap();
        assert!(cal.h > 0.0 && cal.h < 30.0, "h {}", cal.h);
        if cal.warning.is_none() {
            let f = cal.achieved.as_ref().unwrap().mean;
            assert!((75.0..=125.0).contains(&f), "achieved {f}");
        }
        let again =
            calibrate_threshold(factory, &class_dists, gamma, 400, 7, 0.25).unwrap();
        assert_eq!(cal.h.to_bits(), again.h.to_bits());
    }

    #[test]
    fn calibration_validates_inputs() {
        let p = two_symbol_pair(0.25, -0.25).unwrap();
        let class_dists = vec![p.null().clone(), p.alt().clone()];
        let factory = |h: f64| -> Result<McusumState> {
            McusumState::new(UpsilonSet::new(vec![(0, 1, p.clone())])?, h)
        };
        assert!(calibrate_threshold(factory, &class_dists, 0.9, 10, 0, 0.25).is_err());
        assert!(calibrate_threshold(factory, &class_dists, 100.0, 10, 0, 0.0).is_err());
        assert!(calibrate_threshold(factory, &class_dists[..1], 100.0, 10, 0, 0.25).is_err());
    }

    // --- robust vs oracle -----------------------------------------------------

    #[test]
    fn empty_grid_gives_an_empty_table() {
        let rows =
            compare_robust_vs_oracle(&example_model(), &[], 1.0e4, 10, 0, 100).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn comparison_rows_carry_the_closed_form_bound() {
        let rows = compare_robust_vs_oracle(
            &example_model(),
            &[(1, vec![0.8, 0.8])],
            1.0e4,
            60,
            21,
            5000,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert!((row.bound - 0.64 / 0.48).abs() < 1e-9, "bound {}", row.bound);
        assert!(row.oracle.misisolation <= 0.02, "oracle misisolation {}", row.oracle.misisolation);
        assert!(row.ratio > 0.0);
        assert_eq!(row.robust.delay.runs, 60);
    }

    #[test]
    fn comparison_requires_a_certified_model() {
        let lfds = vec![
            GaussianId::new(vec![0.0, 0.0]).unwrap(),
            GaussianId::new(vec![0.8, 0.8]).unwrap(),
            GaussianId::new(vec![1.5, 1.5]).unwrap(),
        ];
        let sets = example_model().sets().to_vec();
        let model = UncertaintyModel::new(sets, example_bank(), lfds).unwrap();
        assert!(compare_robust_vs_oracle(&model, &[(1, vec![0.8, 0.8])], 1.0e4, 10, 0, 100)
            .is_err());
    }

    #[test]
    fn comparison_validates_grid_entries() {
        let model = example_model();
        assert!(compare_robust_vs_oracle(&model, &[(0, vec![0.4, 0.4])], 1.0e4, 10, 0, 100)
            .is_err());
        assert!(compare_robust_vs_oracle(&model, &[(3, vec![0.4, 0.4])], 1.0e4, 10, 0, 100)
            .is_err());
    }
}
