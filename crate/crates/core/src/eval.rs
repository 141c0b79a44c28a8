//! Scoring detected change sets against ground truth, and the replication
//! harness behind the benchmark tables.

use std::time::Instant;

use crate::detect::{detect_multiscale, fibonacci_bandwidths, DetectionParams};
use crate::error::{Error, Result};
use crate::signal::TimeGrid;
use crate::sim::{gen_scenario_replicate, NoiseFamily, NoiseSpec, ScenarioId, ScenarioSpec};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Detection-quality scores, distances in time units.
///
/// `max_score1` is the worst distance from a true change to its nearest
/// estimate (large on misses); `max_score2` the worst distance from an
/// estimate to its nearest truth (large on false positives). Their max is
/// the Hausdorff distance of the two sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTriple {
    pub count_score: usize,
    pub max_score1: f64,
    pub max_score2: f64,
    pub hausdorff: f64,
}

/// Scores an estimated change set against the truth, both as sorted
/// index sets on the same grid.
///
/// Empty-set conventions: a miss of everything (`J > 0`, none estimated)
/// scores `max_score1 = T` and `max_score2 = 0`; pure false positives
/// (`J = 0`) score `max_score2 = T` and `max_score1 = 0`; two empty sets
/// score zero throughout.
pub fn score(truth: &[usize], estimate: &[usize], grid: &TimeGrid) -> ScoreTriple {
    let count_score = truth.len().abs_diff(estimate.len());
    let span = grid.span();
    let (max_score1, max_score2) = match (truth.is_empty(), estimate.is_empty()) {
        (true, true) => (0.0, 0.0),
        (false, true) => (span, 0.0),
        (true, false) => (0.0, span),
        (false, false) => {
            let dist = |a: usize, b: usize| (grid.t(a) - grid.t(b)).abs();
            let worst_from = |from: &[usize], to: &[usize]| {
                from.iter()
                    .map(|&a| to.iter().map(|&b| dist(a, b)).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max)
            };
            (worst_from(truth, estimate), worst_from(estimate, truth))
        }
    };
    ScoreTriple {
        count_score,
        max_score1,
        max_score2,
        hausdorff: max_score1.max(max_score2),
    }
}

pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Aggregates for one noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub sigma_eps: f64,
    pub count_mean: f64,
    pub count_se: f64,
    pub max1_mean: f64,
    pub max1_se: f64,
    pub max2_mean: f64,
    pub max2_se: f64,
    /// Mean wall time of the detection step per replication.
    pub mean_detect_secs: f64,
}

/// Benchmark outcome across noise levels.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub scenario: ScenarioId,
    pub family: NoiseFamily,
    pub replications: usize,
    pub params: DetectionParams,
    pub rows: Vec<BenchRow>,
    pub total_secs: f64,
}

/// Runs `replications` seeded realizations of a scenario per noise level,
/// detects with the multiscale procedure and aggregates the scores.
///
/// An empty `params.bandwidths` resolves to the Fibonacci set starting at
/// 50. Replication `r` of noise level `s` draws from stream
/// `s * 2^32 + r`, so the report is identical no matter how the work is
/// scheduled.
pub fn run_benchmark(
    scenario: ScenarioId,
    family: NoiseFamily,
    sigmas: &[f64],
    params: &DetectionParams,
    replications: usize,
    seed: u64,
) -> Result<BenchmarkReport> {
    if replications == 0 {
        return Err(Error::input("need at least one replication"));
    }
    if sigmas.is_empty() {
        return Err(Error::input("need at least one noise level"));
    }
    let started = Instant::now();
    let mut params = params.clone();
    if params.bandwidths.is_empty() {
        params.bandwidths = fibonacci_bandwidths(50, crate::sim::SCENARIO_N)?;
    }

    let mut rows = Vec::with_capacity(sigmas.len());
    for (si, &sigma_eps) in sigmas.iter().enumerate() {
        let spec = ScenarioSpec {
            id: scenario,
            noise: NoiseSpec { family, sigma_eps },
            seed,
        };
        let one = |r: usize| -> Result<(ScoreTriple, f64)> {
            let stream = (si as u64) << 32 | r as u64;
            let (series, truth) = gen_scenario_replicate(&spec, stream)?;
            let t0 = Instant::now();
            let result = detect_multiscale(&series, &params)?;
            let secs = t0.elapsed().as_secs_f64();
            let estimate: Vec<usize> = result.change_points.iter().map(|c| c.k).collect();
            Ok((score(truth.change_indices(), &estimate, series.grid()), secs))
        };

        #[cfg(feature = "parallel")]
        let outcomes: Vec<(ScoreTriple, f64)> = (0..replications)
            .into_par_iter()
            .map(one)
            .collect::<Result<_>>()?;
        #[cfg(not(feature = "parallel"))]
        let outcomes: Vec<(ScoreTriple, f64)> =
            (0..replications).map(one).collect::<Result<_>>()?;

        let counts: Vec<f64> = outcomes.iter().map(|(s, _)| s.count_score as f64).collect();
        let m1: Vec<f64> = outcomes.iter().map(|(s, _)| s.max_score1).collect();
        let m2: Vec<f64> = outcomes.iter().map(|(s, _)| s.max_score2).collect();
        let (count_mean, count_se) = mean_se(&counts);
        let (max1_mean, max1_se) = mean_se(&m1);
        let (max2_mean, max2_se) = mean_se(&m2);
        let mean_detect_secs =
            outcomes.iter().map(|(_, s)| s).sum::<f64>() / replications as f64;
        rows.push(BenchRow {
            sigma_eps,
            count_mean,
            count_se,
            max1_mean,
            max1_se,
            max2_mean,
            max2_se,
            mean_detect_secs,
        });
    }
    Ok(BenchmarkReport {
        scenario,
        family,
        replications,
        params,
        rows,
        total_secs: started.elapsed().as_secs_f64(),
    })
}
