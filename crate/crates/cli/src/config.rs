//! Experiment configuration: the JSON schema, its validation rules, and the
//! conversions into library objects.
//!
//! A configuration describes one diagnosis problem (class uncertainty boxes,
//! bounding distributions, candidate pair bank) together with the algorithms
//! to run against it and the Monte Carlo budget. Box bounds use `null` for an
//! unbounded coordinate. Distributions are tagged by family so mixed files
//! fail with a field-level error instead of a silent misread. Every
//! algorithm entry carries exactly one of `gamma` (false-metric target, the
//! threshold defaults to its logarithm) or `h` (explicit threshold).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qcd_core::boxset::BoxSet;
use qcd_core::distributions::{Categorical, DistPair, Distribution, GaussianId};
use qcd_core::mcusum::UpsilonSet;
use qcd_core::UncertaintyModel;

use crate::error::{CliError, Result};

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistSpec {
    Gaussian { mean: Vec<f64> },
    Categorical { probs: Vec<f64> },
}

impl DistSpec {
    pub fn to_distribution(&self) -> Result<Distribution> {
        match self {
            DistSpec::Gaussian { mean } => {
                Ok(Distribution::Gaussian(GaussianId::new(mean.clone())?))
            }
            DistSpec::Categorical { probs } => {
                Ok(Distribution::Categorical(Categorical::new(probs.clone())?))
            }
        }
    }

    fn width(&self) -> usize {
        match self {
            DistSpec::Gaussian { mean } => mean.len(),
            DistSpec::Categorical { probs } => probs.len(),
        }
    }

    fn family(&self) -> &'static str {
        match self {
            DistSpec::Gaussian { .. } => "gaussian",
            DistSpec::Categorical { .. } => "categorical",
        }
    }
}

/// Axis-aligned box with `null` marking an unbounded coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

impl BoxSpec {
    pub fn to_box(&self) -> Result<BoxSet> {
        Ok(BoxSet::from_optional(self.lower.clone(), self.upper.clone())?)
    }
}

/// One candidate pair: the rule's statistic for deciding class `i` data
/// against change type `j` uses the log-likelihood ratio of `alt` to `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub i: usize,
    pub j: usize,
    #[serde(rename = "null")]
    pub null_dist: DistSpec,
    #[serde(rename = "alt")]
    pub alt_dist: DistSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcedureKind {
    Mcusum,
    Glr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairSource {
    /// The configuration's candidate bank.
    Robust,
    /// A bank rebuilt per grid point from the true post-change distribution,
    /// with the configured bounding distributions in the other slots.
    Oracle,
    /// The `pairs` list on the algorithm entry itself.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub id: String,
    pub procedure: ProcedureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_source: Option<PairSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<PairSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

/// True post-change mean to simulate, tagged with the change type it
/// belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub change_type: usize,
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationMode {
    /// Thresholds from the target alone: `h = log gamma`.
    Theoretical,
    /// Search for the threshold whose estimated false metric hits the
    /// target within the tolerance band.
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub mode: CalibrationMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Observation dimension for Gaussian families, alphabet size for
    /// categorical ones.
    pub dimension: usize,
    /// Class uncertainty boxes, one per class `0..=J`. Optional because
    /// categorical problems carry no boxes; required by `verify`, `figure`,
    /// and any GLR algorithm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<Vec<BoxSpec>>,
    /// Bounding (least favourable) distribution of each class, `0..=J`.
    /// Class 0 doubles as the no-change data distribution.
    pub lfds: Vec<DistSpec>,
    /// Candidate pair bank driving the robust rule.
    pub pairs: Vec<PairSpec>,
    pub algorithms: Vec<AlgorithmConfig>,
    pub runs: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationConfig>,
}

// ---------------------------------------------------------------------------
// Loading and validation
// ---------------------------------------------------------------------------

fn bad(msg: String) -> CliError {
    CliError::Config(msg)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn num_types(&self) -> usize {
        self.lfds.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(bad("dimension must be at least 1".into()));
        }
        if self.runs < 2 {
            return Err(bad("runs must be at least 2".into()));
        }
        if self.lfds.len() < 2 {
            return Err(bad("need a class-0 distribution and at least one change type".into()));
        }
        let family = self.lfds[0].family();
        for (i, d) in self.lfds.iter().enumerate() {
            if d.family() != family {
                return Err(bad(format!(
                    "lfds[{i}] is {} but lfds[0] is {family}; classes must share one family",
                    d.family()
                )));
            }
            if d.width() != self.dimension {
                return Err(bad(format!(
                    "lfds[{i}] has width {} but dimension is {}",
                    d.width(),
                    self.dimension
                )));
            }
        }
        let j_max = self.num_types();
        if self.pairs.is_empty() {
            return Err(bad("pairs must not be empty".into()));
        }
        for (k, p) in self.pairs.iter().enumerate() {
            self.validate_pair(p, j_max)
                .map_err(|e| bad(format!("pairs[{k}]: {e}")))?;
        }
        if let Some(sets) = &self.sets {
            if sets.len() != self.lfds.len() {
                return Err(bad(format!(
                    "need {} sets for {} classes (got {})",
                    self.lfds.len(),
                    self.lfds.len(),
                    sets.len()
                )));
            }
            for (i, b) in sets.iter().enumerate() {
                if b.lower.len() != self.dimension || b.upper.len() != self.dimension {
                    return Err(bad(format!(
                        "sets[{i}] bounds must have {} coordinates",
                        self.dimension
                    )));
                }
            }
        }
        if self.algorithms.is_empty() {
            return Err(bad("algorithms must not be empty".into()));
        }
        let mut seen = Vec::new();
        for a in &self.algorithms {
            self.validate_algorithm(a, j_max)
                .map_err(|e| bad(format!("algorithm '{}': {e}", a.id)))?;
            if seen.contains(&a.id) {
                return Err(bad(format!("duplicate algorithm id '{}'", a.id)));
            }
            seen.push(a.id.clone());
        }
        if let Some(sweep) = &self.sweep {
            if family != "gaussian" {
                return Err(bad("a sweep grid needs gaussian classes".into()));
            }
            for (k, pt) in sweep.iter().enumerate() {
                if pt.change_type == 0 || pt.change_type > j_max {
                    return Err(bad(format!(
                        "sweep[{k}] change_type {} outside 1..={j_max}",
                        pt.change_type
                    )));
                }
                if pt.mean.len() != self.dimension {
                    return Err(bad(format!(
                        "sweep[{k}] mean must have {} coordinates",
                        self.dimension
                    )));
                }
            }
        }
        if let Some(cal) = &self.calibration {
            if let Some(t) = cal.tolerance {
                if !(t > 0.0 && t < 1.0) {
                    return Err(bad(format!("calibration tolerance {t} outside (0, 1)")));
                }
            }
            if let Some(r) = cal.runs {
                if r < 2 {
                    return Err(bad("calibration runs must be at least 2".into()));
                }
            }
        }
        Ok(())
    }

    fn validate_pair(&self, p: &PairSpec, j_max: usize) -> std::result::Result<(), String> {
        if p.j == 0 || p.j > j_max || p.i > j_max || p.i == p.j {
            return Err(format!("index ({}, {}) outside 0..={j_max} x 1..={j_max}, i != j", p.i, p.j));
        }
        for (label, d) in [("null", &p.null_dist), ("alt", &p.alt_dist)] {
            if d.family() != self.lfds[0].family() {
                return Err(format!("{label} distribution family differs from the classes"));
            }
            if d.width() != self.dimension {
                return Err(format!("{label} distribution width differs from dimension"));
            }
        }
        Ok(())
    }

    fn validate_algorithm(
        &self,
        a: &AlgorithmConfig,
        j_max: usize,
    ) -> std::result::Result<(), String> {
        if a.id.is_empty()
            || !a.id.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c))
        {
            return Err("id must be non-empty and use only [A-Za-z0-9._-]".into());
        }
        match a.procedure {
            ProcedureKind::Mcusum => {
                if a.window.is_some() {
                    return Err("window applies only to glr".into());
                }
                match a.pair_source {
                    None => return Err("mcusum needs a pair_source".into()),
                    Some(PairSource::Explicit) => {
                        let pairs =
                            a.pairs.as_ref().ok_or("pair_source explicit needs pairs")?;
                        for p in pairs {
                            self.validate_pair(p, j_max)?;
                        }
                    }
                    Some(_) => {
                        if a.pairs.is_some() {
                            return Err("pairs only apply with pair_source explicit".into());
                        }
                    }
                }
            }
            ProcedureKind::Glr => {
                if a.pair_source.is_some() || a.pairs.is_some() {
                    return Err("pair_source/pairs apply only to mcusum".into());
                }
                match a.window {
                    Some(w) if w >= 1 => {}
                    Some(_) => return Err("window must be at least 1".into()),
                    None => return Err("glr needs a window".into()),
                }
                if self.sets.is_none() {
                    return Err("glr needs the sets field".into());
                }
            }
        }
        match (a.gamma, a.h) {
            (Some(g), None) => {
                if !g.is_finite() || g <= 1.0 {
                    return Err(format!("gamma must be a finite value above 1 (got {g})"));
                }
            }
            (None, Some(h)) => {
                if !h.is_finite() || h <= 0.0 {
                    return Err(format!("h must be a finite positive value (got {h})"));
                }
            }
            _ => return Err("exactly one of gamma or h is required".into()),
        }
        Ok(())
    }

    // --- conversions -------------------------------------------------------

    pub fn lfd_distributions(&self) -> Result<Vec<Distribution>> {
        self.lfds.iter().map(|d| d.to_distribution()).collect()
    }

    pub fn bank_from(&self, pairs: &[PairSpec]) -> Result<UpsilonSet> {
        let mut entries = Vec::with_capacity(pairs.len());
        for p in pairs {
            entries.push((
                p.i,
                p.j,
                DistPair::new(p.null_dist.to_distribution()?, p.alt_dist.to_distribution()?)?,
            ));
        }
        Ok(UpsilonSet::new(entries)?)
    }

    pub fn robust_bank(&self) -> Result<UpsilonSet> {
        self.bank_from(&self.pairs)
    }

    pub fn box_sets(&self) -> Result<Vec<BoxSet>> {
        let specs = self
            .sets
            .as_ref()
            .ok_or_else(|| bad("this operation needs the sets field".into()))?;
        specs.iter().map(|b| b.to_box()).collect()
    }

    /// The full verification object: boxes, candidate bank, and Gaussian
    /// bounding distributions.
    pub fn model(&self) -> Result<UncertaintyModel> {
        let sets = self.box_sets()?;
        let mut lfds = Vec::with_capacity(self.lfds.len());
        for d in &self.lfds {
            match d {
                DistSpec::Gaussian { mean } => lfds.push(GaussianId::new(mean.clone())?),
                DistSpec::Categorical { .. } => {
                    return Err(bad("verification needs gaussian classes".into()))
                }
            }
        }
        Ok(UncertaintyModel::new(sets, self.robust_bank()?, lfds)?)
    }

    /// The sweep grid as (change type, true mean) entries. Without an
    /// explicit grid, a two-type problem gets the default diagonal sweep:
    /// type 1 over 0.4..0.8 and type 2 over 1.5..2.0, both in steps of 0.1.
    pub fn grid(&self) -> Result<Vec<(usize, Vec<f64>)>> {
        if let Some(sweep) = &self.sweep {
            return Ok(sweep.iter().map(|p| (p.change_type, p.mean.clone())).collect());
        }
        if self.num_types() != 2 {
            return Err(bad(
                "no sweep grid configured and the default grid only covers two-type problems"
                    .into(),
            ));
        }
        if self.lfds[0].family() != "gaussian" {
            return Err(bad("a sweep grid needs gaussian classes".into()));
        }
        let mut grid = Vec::new();
        for phi in [0.4, 0.5, 0.6, 0.7, 0.8] {
            grid.push((1, vec![phi; self.dimension]));
        }
        for phi in [1.5, 1.6, 1.7, 1.8, 1.9, 2.0] {
            grid.push((2, vec![phi; self.dimension]));
        }
        Ok(grid)
    }
}

// ---------------------------------------------------------------------------
