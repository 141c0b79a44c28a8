//! Multiple change point detection in univariate series under a
//! piecewise-linear signal model.
//!
//! The detector slides two adjacent windows of width `G` along the series,
//! fits a local line in each by least squares, and turns the scaled
//! difference of the two coefficient pairs into a Wald-type moving-sum
//! (MOSUM) statistic. Maxima of the statistic above an asymptotic
//! Gumbel-based critical value mark change points, which may be either
//! discontinuous jumps or kinks in the slope. A multiscale variant runs
//! several bandwidths and merges the candidate sets in BIC order.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`signal`]: piecewise-linear ground truth, change magnitudes and the
//!   theoretical drift curves used for diagnostics and exact tests.
//! - [`mosum`]: sliding-window least squares, local variance and the MOSUM
//!   statistic, all in O(n) total via prefix sums.
//! - [`critical`]: Gumbel critical values and Monte-Carlo calibration of
//!   the constant `H`.
//! - [`detect`]: the eta-rule turning a statistic profile into estimates,
//!   and the BIC-ordered multiscale merge.
//! - [`sim`]: seeded generators for the benchmark scenarios and noise
//!   families.
//! - [`eval`]: scoring against ground truth and the benchmark harness.
//!
//! # Example
//!
//! ```
//! use mosum_lin::{detect_multiscale, sim, DetectionParams};
//!
//! let spec = sim::ScenarioSpec {
//!     id: sim::ScenarioId::Sim1,
//!     noise: sim::NoiseSpec { family: sim::NoiseFamily::Gaussian, sigma_eps: 1.0 },
//!     seed: 7,
//! };
//! let (series, _truth) = sim::gen_scenario(&spec).unwrap();
//! let params = DetectionParams::with_bandwidths(vec![50, 100, 150, 250, 400, 650]);
//! let result = detect_multiscale(&series, &params).unwrap();
//! assert_eq!(result.change_points.len(), 3);
//! ```

#![forbid(unsafe_code)]

pub mod critical;
pub mod detect;
mod error;
pub mod eval;
pub mod mosum;
pub mod signal;
pub mod sim;

pub use crate::critical::{calibrate_log_h, critical_value, CriticalValueSpec};
pub use crate::detect::{
    bic, detect_multiscale, detect_single, fibonacci_bandwidths, multiscale_merge, segment_rss,
    CandidateSet, ChangePoint, DetectionParams, DetectionResult, ExceedanceInterval,
};
pub use crate::error::{Error, Result};
pub use crate::eval::{run_benchmark, score, BenchmarkReport, ScoreTriple};
pub use crate::mosum::{
    mosum_profile, theoretical_z_covariance, MosumProfile, Series, WindowFit,
};
pub use crate::signal::{PiecewiseLinearSignal, Segment, TimeGrid};
