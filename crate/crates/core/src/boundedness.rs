//! Certificates of stochastic boundedness for box-shaped Gaussian
//! uncertainty sets.
//!
//! The robust procedure fixes one candidate pair per ordered class
//! combination and needs those pairs to dominate every distribution the
//! uncertainty sets allow. Two levels of domination are certified here.
//!
//! Pairwise (weak) boundedness of `(P_i, P_j)` by `(v⁰, v¹) ∈ P_i × P_j`:
//!
//! ```text
//! (wsb1)  D(ν_j‖v⁰) − D(ν_j‖v¹) ≥ D(v¹‖v⁰)   for all ν_j ∈ P_j
//! (wsb2)  E^{ν_i}[ dv¹/dv⁰ (Y) ] ≤ 1          for all ν_i ∈ P_i
//! ```
//!
//! Collection-level (dual) boundedness by least favourable distributions
//! `ν̃ = (ν̃₀, …, ν̃_J)` with `ν̃_i ∈ P_i`, writing `Δ_ij(ν) = D(ν‖v⁰_ij) −
//! D(ν‖v¹_ij)` and `Δ_*(ν̃) = min-min Δ_ij(ν̃_j)` over ordered pairs:
//!
//! ```text
//! (dsb1)  Δ_*(ν̃) ≤ min-min inf_{ν_j ∈ P_j} Δ_ij(ν_j)
//! (dsb2)  min-min D(ν̃_j‖ν̃_i) ≤ Δ_*(ν̃)
//! (dsb3)  sup_{ν_i ∈ P_i} E^{ν_i}[ dv¹_ij/dv⁰_ij ] ≤ 1  for every pair
//! ```
//!
//! A sufficient route replaces (dsb1) and (dsb2) by all-pairs weak
//! boundedness together with
//!
//! ```text
//! (pdsb1) min-min inf_{ν_j ∈ P_j} Δ_ij(ν_j) = Δ_*(ν̃)
//! (pdsb2) min-min D(ν̃_j‖ν̃_i) ≤ min-min D(v¹_ij‖v⁰_ij)
//! ```
//!
//! For identity-covariance Gaussians over box mean sets, every optimization
//! above is affine in the unknown mean: Δ as a function of the mean `µ` is
//! `aᵀµ + c` with `a = θ¹ − θ⁰`, and the likelihood-ratio expectation is
//! `exp(aᵀ(µ − θ⁰))`. Extrema therefore sit at box corners found by
//! per-coordinate sign checks, never by numeric optimizers; unbounded
//! directions yield `±∞` and an absent witness point.
//!
//! Certificates also record membership of each anchor distribution in its
//! set, since the definitions place `v⁰_ij ∈ P_i`, `v¹_ij ∈ P_j`, and
//! `ν̃_i ∈ P_i`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::boxset::BoxSet;
use crate::distributions::{DistPair, Distribution, GaussianId};
use crate::error::{Error, Result};
use crate::mcusum::UpsilonSet;

// --- tolerances -----------------------------------------------------------

/// Slack for one-sided conditions; several hold with exact real-arithmetic
/// equality (corner value vs closed-form divergence), so strict comparison
/// would fail on the last floating-point bit.
const INEQ_SLACK: f64 = 1e-9;

/// Tolerance for the equality condition (pdsb1).
const EQ_TOL: f64 = 1e-12;

// --- certificate types ----------------------------------------------------

/// Direction of a certified comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtLeast,
    AtMost,
    Equal,
}

impl Relation {
    fn holds(self, achieved: f64, bound: f64) -> bool {
        match self {
            Relation::AtLeast => achieved >= bound - INEQ_SLACK,
            Relation::AtMost => achieved <= bound + INEQ_SLACK,
            Relation::Equal => (achieved - bound).abs() <= EQ_TOL,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
            Relation::Equal => "=",
        }
    }
}

fn serialize_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v == f64::INFINITY {
        s.serialize_str("inf")
    } else if *v == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("nan")
    }
}

/// One checked condition with the extremal point that decides it.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub condition: String,
    pub relation: Relation,
    /// Mean vector at which the extremum is attained; absent when the
    /// optimum is unbounded.
    pub extremal_mean: Option<Vec<f64>>,
    #[serde(serialize_with = "serialize_extended")]
    pub achieved: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub bound: f64,
    pub passed: bool,
}

impl Witness {
    fn new(
        condition: String,
        relation: Relation,
        extremal_mean: Option<Vec<f64>>,
        achieved: f64,
        bound: f64,
    ) -> Self {
        let passed = relation.holds(achieved, bound);
        Witness { condition, relation, extremal_mean, achieved, bound, passed }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {:.6} {} {:.6} [{}]",
            self.condition,
            self.achieved,
            self.relation.symbol(),
            self.bound,
            if self.passed { "pass" } else { "FAIL" }
        )?;
        if let Some(m) = &self.extremal_mean {
            let coords: Vec<String> = m.iter().map(|x| format!("{x:.6}")).collect();
            write!(f, " at ({})", coords.join(", "))?;
        }
        Ok(())
    }
}

/// Full verification outcome: passes iff every witness does.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub passed: bool,
    pub witnesses: Vec<Witness>,
}

impl Certificate {
    fn from_witnesses(witnesses: Vec<Witness>) -> Self {
        let passed = witnesses.iter().all(|w| w.passed);
        Certificate { passed, witnesses }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Witness> {
        self.witnesses.iter().filter(|w| !w.passed)
    }
}

// --- model ----------------------------------------------------------------

/// Box uncertainty sets `P₀..P_J`, candidate pairs, and candidate least
/// favourable distributions, all over one Gaussian observation space.
///
/// Membership of the anchors in their sets is checked by the certificate
/// functions, not at construction, so deliberately broken models can be
/// examined.
#[derive(Debug, Clone)]
pub struct UncertaintyModel {
    sets: Vec<BoxSet>,
    candidate_pairs: UpsilonSet,
    lfds: Vec<GaussianId>,
}

impl UncertaintyModel {
    pub fn new(
        sets: Vec<BoxSet>,
        candidate_pairs: UpsilonSet,
        lfds: Vec<GaussianId>,
    ) -> Result<Self> {
        let j = candidate_pairs.num_types();
        if sets.len() != j + 1 {
            return Err(Error::InvalidParameter(format!(
                "need {} uncertainty sets for {} change types (got {})",
                j + 1,
                j,
                sets.len()
            )));
        }
        if lfds.len() != j + 1 {
            return Err(Error::InvalidParameter(format!(
                "need {} least favourable distributions (got {})",
                j + 1,
                lfds.len()
            )));
        }
        let dim = sets[0].dimension();
        if sets.iter().any(|s| s.dimension() != dim) {
            return Err(Error::InvalidParameter("all sets must share one dimension".into()));
        }
        if lfds.iter().any(|d| d.dimension() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: 0 });
        }
        for (&(i, j), pair) in candidate_pairs.iter() {
            let g = pair
                .null()
                .as_gaussian()
                .ok_or_else(|| {
                    Error::FamilyMismatch(format!(
                        "pair ({i},{j}) is not Gaussian; box certificates need Gaussian pairs"
                    ))
                })?;
            if g.dimension() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: g.dimension() });
            }
        }
        Ok(UncertaintyModel { sets, candidate_pairs, lfds })
    }

    pub fn sets(&self) -> &[BoxSet] {
        &self.sets
    }

    pub fn pairs(&self) -> &UpsilonSet {
        &self.candidate_pairs
    }

    pub fn lfds(&self) -> &[GaussianId] {
        &self.lfds
    }

    pub fn num_types(&self) -> usize {
        self.candidate_pairs.num_types()
    }

    pub fn dimension(&self) -> usize {
        self.sets[0].dimension()
    }

    pub fn lfd_distributions(&self) -> Vec<Distribution> {
        self.lfds.iter().map(|g| Distribution::Gaussian(g.clone())).collect()
    }

    /// Index pairs of sets that overlap. The sets are meant to be mutually
    /// disjoint; overlap is worth a warning but does not invalidate the
    /// certificate arithmetic.
    pub fn overlapping_sets(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.sets.len() {
            for b in (a + 1)..self.sets.len() {
                if !self.sets[a].is_disjoint_from(&self.sets[b]).unwrap_or(true) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

// --- divergence gaps ------------------------------------------------------

/// `Δ_ij(ν) = D(ν‖v⁰) − D(ν‖v¹)`: per-sample drift of the pair's
/// log-likelihood ratio under `ν`.
pub fn delta_ij(nu: &Distribution, pair: &DistPair) -> Result<f64> {
    Ok(nu.kl_divergence(pair.null())? - nu.kl_divergence(pair.alt())?)
}

/// `Δ_* = min over ordered pairs (i,j) of Δ_ij(ν_j)`; `nu` lists one
/// distribution per class, index 0 being the no-change class.
pub fn delta_star(nu: &[Distribution], upsilon: &UpsilonSet) -> Result<f64> {
    if nu.len() != upsilon.num_types() + 1 {
        return Err(Error::InvalidParameter(format!(
            "need {} distributions (got {})",
            upsilon.num_types() + 1,
            nu.len()
        )));
    }
    let mut best = f64::INFINITY;
    for (&(_, j), pair) in upsilon.iter() {
        best = best.min(delta_ij(&nu[j], pair)?);
    }
    Ok(best)
}

// --- exact box optimization -----------------------------------------------

/// Extremum of the affine map `µ ↦ coef·µ + konst` over a box. Returns the
/// optimum and the attaining corner, or `±∞` and no corner when the box is
/// unbounded in an improving direction.
fn extremize_affine(
    coef: &[f64],
    konst: f64,
    set: &BoxSet,
    maximize: bool,
) -> (f64, Option<Vec<f64>>) {
    let mut point = Vec::with_capacity(coef.len());
    for ((a, l), u) in coef.iter().zip(set.lower()).zip(set.upper()) {
        let x = if *a == 0.0 {
            0f64.max(*l).min(*u)
        } else if (*a > 0.0) == maximize {
            *u
        } else {
            *l
        };
        if *a != 0.0 && x.is_infinite() {
            let v = if maximize { f64::INFINITY } else { f64::NEG_INFINITY };
            return (v, None);
        }
        point.push(x);
    }
    let value = konst + coef.iter().zip(point.iter()).map(|(a, x)| a * x).sum::<f64>();
    (value, Some(point))
}

fn gaussian_means<'a>(pair: &'a DistPair) -> Result<(&'a [f64], &'a [f64])> {
    let t0 = pair
        .null()
        .as_gaussian()
        .ok_or_else(|| Error::FamilyMismatch("box analysis needs a Gaussian pair".into()))?;
    let t1 = pair.alt().as_gaussian().expect("pair components share a family");
    Ok((t0.mean(), t1.mean()))
}

/// `inf over means φ in the box of Δ(N(φ,I))` for a Gaussian pair, with the
/// minimizing corner; `−∞` when the box is unbounded in a decreasing
/// direction of the affine objective.
pub fn inf_delta_over_box(set: &BoxSet, pair: &DistPair) -> Result<(f64, Option<Vec<f64>>)> {
    let (t0, t1) = gaussian_means(pair)?;
    if t0.len() != set.dimension() {
        return Err(Error::DimensionMismatch { expected: set.dimension(), got: t0.len() });
    }
    let coef: Vec<f64> = t1.iter().zip(t0.iter()).map(|(b, a)| b - a).collect();
    let konst = 0.5
        * (t0.iter().map(|x| x * x).sum::<f64>() - t1.iter().map(|x| x * x).sum::<f64>());
    Ok(extremize_affine(&coef, konst, set, false))
}

/// `sup over means µ in the box of E^{N(µ,I)}[ dv¹/dv⁰ ]` for a Gaussian
/// pair. The expectation is `exp((θ¹−θ⁰)ᵀ(µ−θ⁰))`, so the supremum is the
/// exponential of an affine maximum; `+∞` when unbounded.
pub fn sup_lr_expectation_over_box(
    set: &BoxSet,
    pair: &DistPair,
) -> Result<(f64, Option<Vec<f64>>)> {
    let (t0, t1) = gaussian_means(pair)?;
    if t0.len() != set.dimension() {
        return Err(Error::DimensionMismatch { expected: set.dimension(), got: t0.len() });
    }
    let coef: Vec<f64> = t1.iter().zip(t0.iter()).map(|(b, a)| b - a).collect();
    let konst = -coef.iter().zip(t0.iter()).map(|(a, x)| a * x).sum::<f64>();
    let (g, corner) = extremize_affine(&coef, konst, set, true);
    Ok((g.exp(), corner))
}

// --- condition checks -----------------------------------------------------

/// Membership of a Gaussian mean in a box, reported as the worst
/// per-coordinate violation distance (zero inside).
fn membership_witness(condition: String, dist: &Distribution, set: &BoxSet) -> Result<Witness> {
    let g = dist
        .as_gaussian()
        .ok_or_else(|| Error::FamilyMismatch("membership checks need Gaussian means".into()))?;
    if g.dimension() != set.dimension() {
        return Err(Error::DimensionMismatch { expected: set.dimension(), got: g.dimension() });
    }
    let mut worst = 0.0f64;
    for ((x, l), u) in g.mean().iter().zip(set.lower()).zip(set.upper()) {
        worst = worst.max(l - x).max(x - u);
    }
    Ok(Witness::new(condition, Relation::AtMost, Some(g.mean().to_vec()), worst, 0.0))
}

/// The four witnesses of weak boundedness for one pair; `suffix` carries
/// index labels when the check runs inside a collection certificate.
fn wsb_witnesses(
    set_i: &BoxSet,
    set_j: &BoxSet,
    pair: &DistPair,
    suffix: &str,
) -> Result<Vec<Witness>> {
    let mut ws = Vec::with_capacity(4);
    ws.push(membership_witness(format!("v0 membership{suffix}"), pair.null(), set_i)?);
    ws.push(membership_witness(format!("v1 membership{suffix}"), pair.alt(), set_j)?);

    let (inf, corner) = inf_delta_over_box(set_j, pair)?;
    let kl = pair.alt().kl_divergence(pair.null())?;
    ws.push(Witness::new(format!("wsb1{suffix}"), Relation::AtLeast, corner, inf, kl));

    let (sup, corner) = sup_lr_expectation_over_box(set_i, pair)?;
    ws.push(Witness::new(format!("wsb2{suffix}"), Relation::AtMost, corner, sup, 1.0));
    Ok(ws)
}

/// Weak stochastic boundedness of `(set_i, set_j)` by one pair: membership
/// of the pair in the sets plus the drift and likelihood-ratio conditions.
pub fn check_wsb(set_i: &BoxSet, set_j: &BoxSet, pair: &DistPair) -> Result<Certificate> {
    if set_i.dimension() != set_j.dimension() {
        return Err(Error::DimensionMismatch {
            expected: set_i.dimension(),
            got: set_j.dimension(),
        });
    }
    Ok(Certificate::from_witnesses(wsb_witnesses(set_i, set_j, pair, "")?))
}

fn lfd_membership_witnesses(model: &UncertaintyModel) -> Result<Vec<Witness>> {
    let dists = model.lfd_distributions();
    dists
        .iter()
        .enumerate()
        .map(|(i, d)| membership_witness(format!("lfd membership {i}"), d, &model.sets()[i]))
        .collect()
}

/// Smallest box infimum of Δ over all pairs, with its attaining corner.
fn min_inf_delta(model: &UncertaintyModel) -> Result<(f64, Option<Vec<f64>>)> {
    let mut best = f64::INFINITY;
    let mut corner = None;
    for (&(_, j), pair) in model.pairs().iter() {
        let (v, c) = inf_delta_over_box(&model.sets()[j], pair)?;
        if v < best {
            best = v;
            corner = c;
        }
    }
    Ok((best, corner))
}

/// Smallest pairwise divergence between the candidate LFDs over the ordered
/// index pairs, with the mean attaining it.
fn min_lfd_divergence(model: &UncertaintyModel) -> Result<(f64, Vec<f64>)> {
    let dists = model.lfd_distributions();
    let mut best = f64::INFINITY;
    let mut mean = Vec::new();
    for (&(i, j), _) in model.pairs().iter() {
        let d = dists[j].kl_divergence(&dists[i])?;
        if d < best {
            best = d;
            mean = model.lfds()[j].mean().to_vec();
        }
    }
    Ok((best, mean))
}

/// Sufficient route to dual boundedness: every pair weakly bounds its sets,
/// the worst box infimum of Δ is attained by the candidate LFDs (pdsb1),
/// and the LFDs are no farther apart than the pairs (pdsb2).
pub fn check_dsb_via_wsb(model: &UncertaintyModel) -> Result<Certificate> {
    let mut ws = lfd_membership_witnesses(model)?;
    for (&(i, j), pair) in model.pairs().iter() {
        let suffix = format!(" ({i},{j})");
        ws.extend(wsb_witnesses(&model.sets()[i], &model.sets()[j], pair, &suffix)?);
    }

    let (inf_min, corner) = min_inf_delta(model)?;
    let dstar = delta_star(&model.lfd_distributions(), model.pairs())?;
    ws.push(Witness::new("pdsb1".into(), Relation::Equal, corner, inf_min, dstar));

    let (lfd_div, mean) = min_lfd_divergence(model)?;
    let mut pair_div = f64::INFINITY;
    for (_, pair) in model.pairs().iter() {
        pair_div = pair_div.min(pair.alt().kl_divergence(pair.null())?);
    }
    ws.push(Witness::new("pdsb2".into(), Relation::AtMost, Some(mean), lfd_div, pair_div));

    Ok(Certificate::from_witnesses(ws))
}

/// Direct evaluation of the three dual-boundedness inequalities.
pub fn check_dsb_direct(model: &UncertaintyModel) -> Result<Certificate> {
    let mut ws = lfd_membership_witnesses(model)?;
    for (&(i, j), pair) in model.pairs().iter() {
        let suffix = format!(" ({i},{j})");
        ws.push(membership_witness(
            format!("v0 membership{suffix}"),
            pair.null(),
            &model.sets()[i],
        )?);
        ws.push(membership_witness(
            format!("v1 membership{suffix}"),
            pair.alt(),
            &model.sets()[j],
        )?);
    }

    let dstar = delta_star(&model.lfd_distributions(), model.pairs())?;
    let (inf_min, corner) = min_inf_delta(model)?;
    ws.push(Witness::new("dsb1".into(), Relation::AtMost, corner, dstar, inf_min));

    let (lfd_div, mean) = min_lfd_divergence(model)?;
    ws.push(Witness::new("dsb2".into(), Relation::AtMost, Some(mean), lfd_div, dstar));

    for (&(i, j), pair) in model.pairs().iter() {
        let (sup, corner) = sup_lr_expectation_over_box(&model.sets()[i], pair)?;
        ws.push(Witness::new(format!("dsb3 ({i},{j})"), Relation::AtMost, corner, sup, 1.0));
    }

    Ok(Certificate::from_witnesses(ws))
}

// ---------------------------------------------------------------------------
