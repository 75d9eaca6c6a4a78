//! Quickest change diagnosis toolkit.
//!
//! A sequence of observations starts out i.i.d. with distribution `ν_0` and at
//! some unknown time switches to being i.i.d. with distribution `ν_j`, where
//! `j` is one of `J` possible change types. A diagnosis procedure observes the
//! sequence online and must both *detect* that a change happened and *isolate*
//! its type, stopping at a time `T` with a decision `d ∈ {1, …, J}`.
//!
//! This crate provides:
//!
//! * log likelihood ratio primitives for Gaussian-with-identity-covariance and
//!   finite categorical observation models ([`distributions`]),
//! * the CUSUM statistic and its recursion ([`cusum`]),
//! * the matrix-CUSUM diagnosis procedure built from a bank of CUSUM
//!   statistics ([`mcusum`]),
//! * a window-limited generalized likelihood ratio procedure over box-shaped
//!   mean sets ([`glr`]),
//! * closed-form certificates that a candidate bank of distributions is a
//!   saddle point for an entire uncertainty class, so the same procedure is
//!   simultaneously robust for every distribution in the class
//!   ([`boundedness`]),
//! * a deterministic, parallel Monte Carlo harness for delay and
//!   false-alarm/false-isolation estimation and threshold calibration
//!   ([`montecarlo`]).
//!
//! All random estimation is reproducible: every Monte Carlo run draws from a
//! counter-based stream derived from `(master_seed, run_index)`, and
//! aggregation is order-insensitive, so results are bit-identical regardless
//! of how many threads execute the runs.

pub mod boundedness;
pub mod boxset;
pub mod cusum;
pub mod diagnosis;
pub mod distributions;
pub mod error;
pub mod glr;
pub mod mcusum;
pub mod montecarlo;
pub mod rng;
pub mod stream;

pub use boundedness::{Certificate, UncertaintyModel, Witness};
pub use boxset::BoxSet;
pub use cusum::CusumState;
pub use diagnosis::{Diagnosis, DiagnosisProcedure, RunOutcome};
pub use distributions::{Categorical, DistPair, Distribution, GaussianId, Observation};
pub use error::{Error, Result};
pub use glr::GlrState;
pub use mcusum::{matched_bank, McusumState, UpsilonSet};
pub use montecarlo::{DelayEstimate, McEstimate, Scenario};
pub use rng::RngStream;
pub use stream::{ChangeStream, IidStream, ObservationSource, RecordedStream};
