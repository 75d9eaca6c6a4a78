//! Axis-aligned boxes of mean vectors, with extended-real bounds.
//!
//! A box `[l_1, u_1] × … × [l_N, u_N]` describes an uncertainty set of
//! Gaussian means. Bounds may be `−∞`/`+∞` for coordinates unbounded on that
//! side; constructors accept `Option<f64>` with `None` standing for the
//! corresponding infinity, which is also how configuration files encode
//! unbounded coordinates (JSON `null`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    /// Build from finite bound vectors.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidParameter("box must have at least one coordinate".into()));
        }
        for (l, u) in lower.iter().zip(upper.iter()) {
            if l.is_nan() || u.is_nan() {
                return Err(Error::InvalidParameter("box bounds must not be NaN".into()));
            }
            if l > u {
                return Err(Error::InvalidParameter(format!(
                    "lower bound {l} exceeds upper bound {u}"
                )));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    /// Build from nullable bounds; `None` means unbounded on that side.
    pub fn from_optional(lower: Vec<Option<f64>>, upper: Vec<Option<f64>>) -> Result<Self> {
        let lo = lower.into_iter().map(|b| b.unwrap_or(f64::NEG_INFINITY)).collect();
        let hi = upper.into_iter().map(|b| b.unwrap_or(f64::INFINITY)).collect();
        BoxSet::new(lo, hi)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    /// Componentwise membership (bounds inclusive).
    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        if point.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: point.len() });
        }
        Ok(point
            .iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(x, (l, u))| l <= x && x <= u))
    }

    /// Componentwise projection onto the box.
    pub fn clip(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: point.len() });
        }
        Ok(point
            .iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .map(|(x, (l, u))| x.max(*l).min(*u))
            .collect())
    }

    /// Whether this box and `other` share no point (touching boxes overlap).
    pub fn is_disjoint_from(&self, other: &BoxSet) -> Result<bool> {
        if other.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: other.dimension(),
            });
        }
        Ok(self
            .lower
            .iter()
            .zip(self.upper.iter())
            .zip(other.lower.iter().zip(other.upper.iter()))
            .any(|((al, au), (bl, bu))| au < bl || bu < al))
    }
}
