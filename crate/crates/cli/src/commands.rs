//! The five subcommands: verification certificates, threshold calibration,
//! delay and false-metric reports, and the per-type delay figure data.

use std::path::Path;

use serde::Serialize;

use qcd_core::boundedness::{check_dsb_direct, check_dsb_via_wsb, check_wsb, delta_star};
use qcd_core::distributions::{DistPair, Distribution, GaussianId};
use qcd_core::glr::GlrState;
use qcd_core::mcusum::{matched_bank, McusumState, UpsilonSet};
use qcd_core::montecarlo::{
    calibrate_threshold, estimate_delay, estimate_false_metric, theoretical_threshold,
    DelayEstimate, McEstimate, Scenario,
};
use qcd_core::boxset::BoxSet;
use qcd_core::Certificate;

use crate::config::{CalibrationMode, ExperimentConfig, PairSource, ProcedureKind};
use crate::error::Result;
use crate::report::{format_mean, format_sig, write_csv, write_json};

/// Sample horizon for a single delay run; post-change drifts are positive,
/// so this censors only badly misconfigured scenarios.
const DELAY_CAP: u64 = 100_000;

/// False-metric runs stop after this multiple of the target (or of `e^h`
/// when the threshold is explicit); censored runs are flagged lower bounds.
const FALSE_CAP_FACTOR: f64 = 20.0;

// ---------------------------------------------------------------------------
// Algorithm resolution
// ---------------------------------------------------------------------------

enum AlgKind {
    /// A fixed pair bank: the configured robust bank or an explicit one.
    Bank(UpsilonSet),
    /// Rebuilt per grid point around the true post-change distribution; away
    /// from a grid (calibration, false metrics) it uses the class anchors.
    Oracle,
    Glr { sets: Vec<BoxSet>, window: usize },
}

struct ResolvedAlg {
    id: String,
    h: f64,
    gamma: Option<f64>,
    kind: AlgKind,
}

impl ResolvedAlg {
    /// Cap for cumulative false-metric sampling, scaled to the target this
    /// algorithm's threshold encodes.
    fn false_cap(&self) -> u64 {
        let gamma = self.gamma.unwrap_or_else(|| self.h.exp());
        (FALSE_CAP_FACTOR * gamma).ceil() as u64
    }
}

fn resolve_algorithms(cfg: &ExperimentConfig) -> Result<Vec<ResolvedAlg>> {
    let mut out = Vec::with_capacity(cfg.algorithms.len());
    for a in &cfg.algorithms {
        let h = match (a.h, a.gamma) {
            (Some(h), _) => h,
            (None, Some(g)) => theoretical_threshold(g)?,
            (None, None) => unreachable!("validated"),
        };
        let kind = match a.procedure {
            ProcedureKind::Mcusum => match a.pair_source.expect("validated") {
                PairSource::Robust => AlgKind::Bank(cfg.robust_bank()?),
                PairSource::Explicit => {
                    AlgKind::Bank(cfg.bank_from(a.pairs.as_ref().expect("validated"))?)
                }
                PairSource::Oracle => AlgKind::Oracle,
            },
            ProcedureKind::Glr => AlgKind::Glr {
                sets: cfg.box_sets()?,
                window: a.window.expect("validated"),
            },
        };
        out.push(ResolvedAlg { id: a.id.clone(), h, gamma: a.gamma, kind });
    }
    Ok(out)
}

/// Bank of every ordered pair drawn from the class anchors themselves.
fn anchor_bank(dists: &[Distribution]) -> Result<UpsilonSet> {
    let num_types = dists.len() - 1;
    let mut entries = Vec::new();
    for target in 1..=num_types {
        for i in 0..=num_types {
            if i != target {
                entries.push((i, target, DistPair::new(dists[i].clone(), dists[target].clone())?));
            }
        }
    }
    Ok(UpsilonSet::new(entries)?)
}

fn delay_at(
    alg: &ResolvedAlg,
    lfd_dists: &[Distribution],
    scenario: &Scenario,
    change_type: usize,
    true_dist: &Distribution,
    runs: usize,
    master_seed: u64,
) -> Result<DelayEstimate> {
    let est = match &alg.kind {
        AlgKind::Bank(bank) => estimate_delay(
            || McusumState::new(bank.clone(), alg.h),
            scenario,
            runs,
            master_seed,
            DELAY_CAP,
        )?,
        AlgKind::Oracle => {
            let bank = matched_bank(lfd_dists, change_type, true_dist)?;
            estimate_delay(
                || McusumState::new(bank.clone(), alg.h),
                scenario,
                runs,
                master_seed,
                DELAY_CAP,
            )?
        }
        AlgKind::Glr { sets, window } => estimate_delay(
            || GlrState::new(sets.clone(), *window, alg.h),
            scenario,
            runs,
            master_seed,
            DELAY_CAP,
        )?,
    };
    Ok(est)
}

fn false_at(
    alg: &ResolvedAlg,
    lfd_dists: &[Distribution],
    data_class: usize,
    target: usize,
    runs: usize,
    master_seed: u64,
) -> Result<McEstimate> {
    let data = &lfd_dists[data_class];
    let cap = alg.false_cap();
    let est = match &alg.kind {
        AlgKind::Bank(bank) => estimate_false_metric(
            || McusumState::new(bank.clone(), alg.h),
            data,
            target,
            runs,
            master_seed,
            cap,
        )?,
        AlgKind::Oracle => {
            let bank = anchor_bank(lfd_dists)?;
            estimate_false_metric(
                || McusumState::new(bank.clone(), alg.h),
                data,
                target,
                runs,
                master_seed,
                cap,
            )?
        }
        AlgKind::Glr { sets, window } => estimate_false_metric(
            || GlrState::new(sets.clone(), *window, alg.h),
            data,
            target,
            runs,
            master_seed,
            cap,
        )?,
    };
    Ok(est)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct WsbEntry {
    i: usize,
    j: usize,
    certificate: Certificate,
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    delta_star: f64,
    wsb_pairs: Vec<WsbEntry>,
    dsb_via_wsb: Certificate,
    dsb_direct: Certificate,
    warnings: Vec<String>,
}

pub fn cmd_verify(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let model = cfg.model()?;
    let mut wsb_pairs = Vec::new();
    for (&(i, j), pair) in model.pairs().iter() {
        let certificate = check_wsb(&model.sets()[i], &model.sets()[j], pair)?;
        wsb_pairs.push(WsbEntry { i, j, certificate });
    }
    let dsb_via_wsb = check_dsb_via_wsb(&model)?;
    let dsb_direct = check_dsb_direct(&model)?;
    let dstar = delta_star(&model.lfd_distributions(), model.pairs())?;

    let warnings: Vec<String> = model
        .overlapping_sets()
        .into_iter()
        .map(|(i, j)| format!("uncertainty sets {i} and {j} overlap"))
        .collect();
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let report = VerifyReport {
        passed: dsb_direct.passed,
        delta_star: dstar,
        wsb_pairs,
        dsb_via_wsb,
        dsb_direct,
        warnings,
    };
    let path = out_dir.join("certificate.json");
    write_json(&path, &report)?;

    if report.passed {
        println!(
            "verification passed: delta_star = {}, certificate in {}",
            format_sig(dstar),
            path.display()
        );
        Ok(0)
    } else {
        println!("verification FAILED, certificate in {}", path.display());
        for w in report.dsb_direct.failures() {
            println!("  {w}");
        }
        Ok(1)
    }
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CalibrationRow {
    id: String,
    mode: String,
    h: f64,
    achieved: Option<McEstimate>,
    warning: Option<String>,
}

#[derive(Serialize)]
struct CalibrationReport {
    algorithms: Vec<CalibrationRow>,
}

pub fn cmd_calibrate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let algs = resolve_algorithms(cfg)?;
    let lfd_dists = cfg.lfd_distributions()?;
    let mode = cfg.calibration.as_ref().map_or(CalibrationMode::Theoretical, |c| c.mode);
    let tolerance = cfg.calibration.as_ref().and_then(|c| c.tolerance).unwrap_or(0.2);
    let cal_runs = cfg.calibration.as_ref().and_then(|c| c.runs).unwrap_or(cfg.runs);

    let mut rows = Vec::new();
    for (alg, entry) in algs.iter().zip(&cfg.algorithms) {
        let row = match (entry.gamma, mode) {
            (None, _) => CalibrationRow {
                id: alg.id.clone(),
                mode: "fixed".into(),
                h: alg.h,
                achieved: None,
                warning: None,
            },
            (Some(_), CalibrationMode::Theoretical) => CalibrationRow {
                id: alg.id.clone(),
                mode: "theoretical".into(),
                h: alg.h,
                achieved: None,
                warning: None,
            },
            (Some(gamma), CalibrationMode::MonteCarlo) => {
                let cal = match &alg.kind {
                    AlgKind::Bank(bank) => calibrate_threshold(
                        |h| McusumState::new(bank.clone(), h),
                        &lfd_dists,
                        gamma,
                        cal_runs,
                        cfg.master_seed,
                        tolerance,
                    )?,
                    AlgKind::Oracle => {
                        let bank = anchor_bank(&lfd_dists)?;
                        calibrate_threshold(
                            |h| McusumState::new(bank.clone(), h),
                            &lfd_dists,
                            gamma,
                            cal_runs,
                            cfg.master_seed,
                            tolerance,
                        )?
                    }
                    AlgKind::Glr { sets, window } => calibrate_threshold(
                        |h| GlrState::new(sets.clone(), *window, h),
                        &lfd_dists,
                        gamma,
                        cal_runs,
                        cfg.master_seed,
                        tolerance,
                    )?,
                };
                CalibrationRow {
                    id: alg.id.clone(),
                    mode: "monte-carlo".into(),
                    h: cal.h,
                    achieved: cal.achieved,
                    warning: cal.warning,
                }
            }
        };
        match (&row.achieved, &row.warning) {
            (Some(est), None) => println!(
                "{}: h = {} (achieved {} +- {})",
                row.id,
                format_sig(row.h),
                format_sig(est.mean),
                format_sig(est.se)
            ),
            (_, Some(w)) => println!("{}: h = {} (warning: {w})", row.id, format_sig(row.h)),
            _ => println!("{}: h = {} ({})", row.id, format_sig(row.h), row.mode),
        }
        rows.push(row);
    }

    let path = out_dir.join("calibration.json");
    write_json(&path, &CalibrationReport { algorithms: rows })?;
    println!("calibration written to {}", path.display());
    Ok(0)
}

// ---------------------------------------------------------------------------
// delay
// ---------------------------------------------------------------------------

const DELAY_HEADER: &[&str] = &[
    "algorithm",
    "change_type",
    "phi",
    "h",
    "delay_mean",
    "delay_se",
    "misisolation_frac",
    "censored",
];

pub fn cmd_delay(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let algs = resolve_algorithms(cfg)?;
    let lfd_dists = cfg.lfd_distributions()?;
    let grid = cfg.grid()?;
    let pre = lfd_dists[0].clone();

    let mut rows = Vec::new();
    for (change_type, mean) in &grid {
        let true_dist = Distribution::Gaussian(GaussianId::new(mean.clone())?);
        let scenario = Scenario::immediate_change(pre.clone(), true_dist.clone(), *change_type)?;
        for alg in &algs {
            let est = delay_at(
                alg,
                &lfd_dists,
                &scenario,
                *change_type,
                &true_dist,
                cfg.runs,
                cfg.master_seed,
            )?;
            rows.push(vec![
                alg.id.clone(),
                change_type.to_string(),
                format_mean(mean),
                format_sig(alg.h),
                format_sig(est.delay.mean),
                format_sig(est.delay.se),
                format_sig(est.misisolation),
                est.delay.censored.to_string(),
            ]);
        }
    }

    let path = out_dir.join("delay.csv");
    write_csv(&path, DELAY_HEADER, &rows)?;
    println!("{} delay rows written to {}", rows.len(), path.display());
    Ok(0)
}

// ---------------------------------------------------------------------------
// false
// ---------------------------------------------------------------------------

const FALSE_HEADER: &[&str] = &[
    "algorithm",
    "data_class",
    "target",
    "h",
    "f_mean",
    "f_se",
    "runs",
    "censored",
    "lower_bound",
];

pub fn cmd_false(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let algs = resolve_algorithms(cfg)?;
    let lfd_dists = cfg.lfd_distributions()?;
    let num_types = cfg.num_types();

    let mut rows = Vec::new();
    for alg in &algs {
        for data_class in 0..=num_types {
            for target in 1..=num_types {
                if data_class == target {
                    continue;
                }
                let est =
                    false_at(alg, &lfd_dists, data_class, target, cfg.runs, cfg.master_seed)?;
                rows.push(vec![
                    alg.id.clone(),
                    data_class.to_string(),
                    target.to_string(),
                    format_sig(alg.h),
                    format_sig(est.mean),
                    format_sig(est.se),
                    est.runs.to_string(),
                    est.censored.to_string(),
                    if est.is_lower_bound() { "1".into() } else { "0".into() },
                ]);
            }
        }
    }

    let path = out_dir.join("false.csv");
    write_csv(&path, FALSE_HEADER, &rows)?;
    println!("{} false-metric rows written to {}", rows.len(), path.display());
    Ok(0)
}

// ---------------------------------------------------------------------------
// figure
// ---------------------------------------------------------------------------

const FIGURE_HEADER: &[&str] =
    &["phi", "algorithm", "delay_mean", "delay_se", "misisolation_frac"];

pub fn cmd_figure(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32> {
    let model = cfg.model()?;
    let cert = check_dsb_direct(&model)?;
    if !cert.passed {
        eprintln!("model failed verification; run the verify command for the certificate");
        for w in cert.failures() {
            eprintln!("  {w}");
        }
        return Ok(1);
    }

    let algs = resolve_algorithms(cfg)?;
    let lfd_dists = cfg.lfd_distributions()?;
    let grid = cfg.grid()?;
    let pre = lfd_dists[0].clone();

    let mut types: Vec<usize> = Vec::new();
    for (change_type, _) in &grid {
        if !types.contains(change_type) {
            types.push(*change_type);
        }
    }

    for &change_type in &types {
        let mut rows = Vec::new();
        for (ct, mean) in grid.iter().filter(|(ct, _)| *ct == change_type) {
            let true_dist = Distribution::Gaussian(GaussianId::new(mean.clone())?);
            let scenario = Scenario::immediate_change(pre.clone(), true_dist.clone(), *ct)?;
            for alg in &algs {
                let est = delay_at(
                    alg,
                    &lfd_dists,
                    &scenario,
                    *ct,
                    &true_dist,
                    cfg.runs,
                    cfg.master_seed,
                )?;
                rows.push(vec![
                    format_mean(mean),
                    alg.id.clone(),
                    format_sig(est.delay.mean),
                    format_sig(est.delay.se),
                    format_sig(est.misisolation),
                ]);
            }
        }
        let path = out_dir.join(format!("figure_type{change_type}.csv"));
        write_csv(&path, FIGURE_HEADER, &rows)?;
        println!("{} figure rows written to {}", rows.len(), path.display());
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
