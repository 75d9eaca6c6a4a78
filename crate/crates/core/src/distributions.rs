//! Observation models and likelihood ratio primitives.
//!
//! Two families are supported:
//!
//! * [`GaussianId`]: `N(θ, I)` on `ℝ^N`, a Gaussian with known identity
//!   covariance and mean vector `θ`. For this family the relative entropy has
//!   the closed form `D(N(θ_p, I) ‖ N(θ_q, I)) = ‖θ_p − θ_q‖² / 2`, and the
//!   expected likelihood ratio under a third Gaussian `N(µ, I)` is
//!   `E[dv¹/dv⁰] = exp((θ¹ − θ⁰)ᵀ(µ − θ⁰))`.
//! * [`Categorical`]: a finite alphabet with strictly positive symbol
//!   probabilities (strict positivity guarantees mutual absolute continuity,
//!   so every log likelihood ratio is finite).
//!
//! A [`DistPair`] is an ordered (null, alternative) pair `(v⁰, v¹)` from the
//! same family; it produces the per-sample log likelihood ratio increments
//! `log (dv¹/dv⁰)(y)` that drive every procedure in this crate.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// A single observation: a real vector for Gaussian models, a symbol index
/// for categorical models.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Vector(Vec<f64>),
    Symbol(usize),
}

// ---------------------------------------------------------------------------
// Gaussian with identity covariance
// ---------------------------------------------------------------------------

/// `N(mean, I)` on `ℝ^N` with `N = mean.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianId {
    mean: Vec<f64>,
}

impl GaussianId {
    pub fn new(mean: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::InvalidParameter("Gaussian mean must be non-empty".into()));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter("Gaussian mean must be finite".into()));
        }
        Ok(GaussianId { mean })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }
}

// ---------------------------------------------------------------------------
// Categorical on a finite alphabet
// ---------------------------------------------------------------------------

/// Finite distribution with strictly positive probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Categorical {
    probs: Vec<f64>,
}

impl Categorical {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("categorical needs at least one symbol".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::InvalidParameter(
                "categorical probabilities must be strictly positive".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "categorical probabilities must sum to 1 (got {total})"
            )));
        }
        Ok(Categorical { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }
}

// ---------------------------------------------------------------------------
// Family-tagged distribution
// ---------------------------------------------------------------------------

/// An observation distribution from one of the supported families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Distribution {
    Gaussian(GaussianId),
    Categorical(Categorical),
}

impl Distribution {
    /// Log density (or log mass) of `y`.
    pub fn log_density(&self, y: &Observation) -> Result<f64> {
        match (self, y) {
            (Distribution::Gaussian(g), Observation::Vector(v)) => {
                if v.len() != g.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected: g.dimension(),
                        got: v.len(),
                    });
                }
                let sq: f64 = v
                    .iter()
                    .zip(g.mean.iter())
                    .map(|(yi, mi)| (yi - mi) * (yi - mi))
                    .sum();
                Ok(-0.5 * (g.dimension() as f64) * LN_2PI - 0.5 * sq)
            }
            (Distribution::Categorical(c), Observation::Symbol(s)) => {
                if *s >= c.alphabet_size() {
                    return Err(Error::DimensionMismatch {
                        expected: c.alphabet_size(),
                        got: *s,
                    });
                }
                Ok(c.probs[*s].ln())
            }
            _ => Err(Error::FamilyMismatch(
                "observation kind does not match distribution family".into(),
            )),
        }
    }

    /// Draw one observation.
    pub fn sample(&self, rng: &mut RngStream) -> Observation {
        match self {
            Distribution::Gaussian(g) => {
                let v = g
                    .mean
                    .iter()
                    .map(|m| m + rng.sample::<f64, _>(StandardNormal))
                    .collect();
                Observation::Vector(v)
            }
            Distribution::Categorical(c) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (s, p) in c.probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Observation::Symbol(s);
                    }
                }
                Observation::Symbol(c.alphabet_size() - 1)
            }
        }
    }

    /// Relative entropy `D(self ‖ other)`, exact in closed form.
    pub fn kl_divergence(&self, other: &Distribution) -> Result<f64> {
        match (self, other) {
            (Distribution::Gaussian(p), Distribution::Gaussian(q)) => {
                if p.dimension() != q.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected: p.dimension(),
                        got: q.dimension(),
                    });
                }
                let sq: f64 = p
                    .mean
                    .iter()
                    .zip(q.mean.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                Ok(0.5 * sq)
            }
            (Distribution::Categorical(p), Distribution::Categorical(q)) => {
                if p.alphabet_size() != q.alphabet_size() {
                    return Err(Error::DimensionMismatch {
                        expected: p.alphabet_size(),
                        got: q.alphabet_size(),
                    });
                }
                Ok(p.probs
                    .iter()
                    .zip(q.probs.iter())
                    .map(|(a, b)| a * (a / b).ln())
                    .sum())
            }
            _ => Err(Error::FamilyMismatch(
                "relative entropy requires matching families".into(),
            )),
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianId> {
        match self {
            Distribution::Gaussian(g) => Some(g),
            Distribution::Categorical(_) => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Null / alternative pair
// ---------------------------------------------------------------------------

/// Ordered pair `(v⁰, v¹)` of distributions from the same family and
/// dimension. `v⁰` plays the null (pre-change) role, `v¹` the alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistPair {
    null: Distribution,
    alt: Distribution,
}

impl DistPair {
    pub fn new(null: Distribution, alt: Distribution) -> Result<Self> {
        match (&null, &alt) {
            (Distribution::Gaussian(a), Distribution::Gaussian(b)) => {
                if a.dimension() != b.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected: a.dimension(),
                        got: b.dimension(),
                    });
                }
            }
            (Distribution::Categorical(a), Distribution::Categorical(b)) => {
                if a.alphabet_size() != b.alphabet_size() {
                    return Err(Error::DimensionMismatch {
                        expected: a.alphabet_size(),
                        got: b.alphabet_size(),
                    });
                }
            }
            _ => {
                return Err(Error::FamilyMismatch(
                    "pair members must come from the same family".into(),
                ))
            }
        }
        Ok(DistPair { null, alt })
    }

    pub fn null(&self) -> &Distribution {
        &self.null
    }

    pub fn alt(&self) -> &Distribution {
        &self.alt
    }

    /// Log likelihood ratio increment `log (dv¹/dv⁰)(y)`.
    pub fn llr_increment(&self, y: &Observation) -> Result<f64> {
        Ok(self.alt.log_density(y)? - self.null.log_density(y)?)
    }

    /// Expected likelihood ratio `E^{under}[dv¹/dv⁰(Y)]`.
    ///
    /// Exact for both families: for Gaussians `exp((θ¹ − θ⁰)ᵀ(µ − θ⁰))` with
    /// `µ` the mean of `under`; for categoricals the finite sum
    /// `Σ_y under(y) · v¹(y)/v⁰(y)`.
    pub fn lr_expectation(&self, under: &Distribution) -> Result<f64> {
        match (&self.null, &self.alt, under) {
            (
                Distribution::Gaussian(n),
                Distribution::Gaussian(a),
                Distribution::Gaussian(u),
            ) => {
                if u.dimension() != n.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected: n.dimension(),
                        got: u.dimension(),
                    });
                }
                let exponent: f64 = n
                    .mean
                    .iter()
                    .zip(a.mean.iter())
                    .zip(u.mean.iter())
                    .map(|((t0, t1), mu)| (t1 - t0) * (mu - t0))
                    .sum();
                Ok(exponent.exp())
            }
            (
                Distribution::Categorical(n),
                Distribution::Categorical(a),
                Distribution::Categorical(u),
            ) => {
                if u.alphabet_size() != n.alphabet_size() {
                    return Err(Error::DimensionMismatch {
                        expected: n.alphabet_size(),
                        got: u.alphabet_size(),
                    });
                }
                Ok(u.probs
                    .iter()
                    .zip(a.probs.iter())
                    .zip(n.probs.iter())
                    .map(|((pu, p1), p0)| pu * p1 / p0)
                    .sum())
            }
            _ => Err(Error::FamilyMismatch(
                "expectation requires all three distributions from one family".into(),
            )),
        }
    }
}

/// Shorthand for `N(mean, I)` wrapped as a [`Distribution`].
pub fn gaussian(mean: &[f64]) -> Distribution {
    Distribution::Gaussian(GaussianId::new(mean.to_vec()).expect("valid mean"))
}

/// Two-symbol categorical pair whose log likelihood ratio increments are
/// exactly `z0` (on symbol 0) and `z1` (on symbol 1).
///
/// Requires `z0` and `z1` of opposite sign; then the null distribution
/// `p⁰ = ((1−e^{z1})/(e^{z0}−e^{z1}), …)` is the unique one for which
/// `p¹ = p⁰ · e^z` is again a probability vector. Useful for toy models
/// whose CUSUM statistic lives on a known lattice.
pub fn two_symbol_pair(z0: f64, z1: f64) -> Result<DistPair> {
    if !(z0.is_finite() && z1.is_finite()) || z0.signum() == z1.signum() || z0 == 0.0 || z1 == 0.0 {
        return Err(Error::InvalidParameter(
            "increments must be finite and of opposite sign".into(),
        ));
    }
    let e0 = z0.exp();
    let e1 = z1.exp();
    let p0 = (1.0 - e1) / (e0 - e1);
    let null = Categorical::new(vec![p0, 1.0 - p0])?;
    let alt = Categorical::new(vec![p0 * e0, (1.0 - p0) * e1])?;
    DistPair::new(Distribution::Categorical(null), Distribution::Categorical(alt))
}
