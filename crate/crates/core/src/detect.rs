//! From statistic profiles to change point estimates.
//!
//! A single bandwidth is handled by the eta-rule: every maximal run of
//! positions whose statistic stays at or above the critical value becomes
//! an estimate if the run spans at least `eta * G` indices, the estimate
//! being the first argmax inside the run. Candidate sets from several
//! bandwidths are merged by sorting the sets in increasing BIC order and
//! accepting a candidate only if it keeps a distance of more than
//! `theta * G` to everything accepted before it.

use serde::{Deserialize, Serialize};

use crate::critical::{critical_value, DEFAULT_LOG_H};
use crate::error::{Error, Result};
use crate::mosum::{mosum_profile, MosumProfile, Series};

/// Maximal run of threshold exceedances: `stat >= c` exactly on
/// `start..=end`, with the peak at the smallest argmax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceedanceInterval {
    pub start: usize,
    pub end: usize,
    pub peak_k: usize,
    pub peak_stat: f64,
}

/// Estimates produced by one bandwidth, plus the BIC of the segmentation
/// they induce (`NAN` until evaluated, `+inf` if a segment is too short to
/// fit a line).
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub g: usize,
    pub estimates: Vec<ExceedanceInterval>,
    pub bic: f64,
}

impl CandidateSet {
    pub fn peaks(&self) -> Vec<usize> {
        self.estimates.iter().map(|e| e.peak_k).collect()
    }
}

/// One detected change point of the merged result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub k: usize,
    pub t: f64,
    #[serde(rename = "G")]
    pub source_g: usize,
    pub stat: f64,
}

/// Tuning parameters of the full procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    pub alpha: f64,
    pub eta: f64,
    pub theta: f64,
    pub log_h: f64,
    pub bandwidths: Vec<usize>,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            alpha: 0.05,
            eta: 0.3,
            theta: 0.8,
            log_h: DEFAULT_LOG_H,
            bandwidths: Vec::new(),
        }
    }
}

impl DetectionParams {
    pub fn with_bandwidths(bandwidths: Vec<usize>) -> Self {
        DetectionParams { bandwidths, ..DetectionParams::default() }
    }
}

/// Final detection output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    #[serde(rename = "changes")]
    pub change_points: Vec<ChangePoint>,
    pub params: DetectionParams,
}

/// Applies the eta-rule to one profile.
///
/// Positions outside `[G, n-G]` count as below threshold, so runs may
/// close at the profile edges. An empty candidate set is a valid outcome.
pub fn detect_single(profile: &MosumProfile, critical: f64, eta: f64) -> Result<CandidateSet> {
    if profile.is_empty() {
        return Err(Error::input("profile is empty"));
    }
    if !(critical > 0.0) {
        return Err(Error::input(format!("critical value must be positive, got {critical}")));
    }
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::input(format!("eta must lie in (0, 1/2), got {eta}")));
    }
    let g = profile.g();
    // smallest admissible index span w - v; the tiny slack keeps exact
    // boundary cases like eta*G = 30 from being lost to float rounding
    let min_span = (eta * g as f64 - 1e-9).ceil() as usize;
    let fits = profile.fits();
    let mut estimates = Vec::new();
    let mut i = 0usize;
    while i < fits.len() {
        if fits[i].stat < critical {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < fits.len() && fits[j + 1].stat >= critical {
            j += 1;
        }
        if j - i >= min_span {
            let mut peak = i;
            for m in i + 1..=j {
                if fits[m].stat > fits[peak].stat {
                    peak = m;
                }
            }
            estimates.push(ExceedanceInterval {
                start: fits[i].k,
                end: fits[j].k,
                peak_k: fits[peak].k,
                peak_stat: fits[peak].stat,
            });
        }
        i = j + 1;
    }
    Ok(CandidateSet { g, estimates, bic: f64::NAN })
}

fn validate_change_points(n: usize, change_points: &[usize]) -> Result<()> {
    let mut prev = 0usize;
    for &k in change_points {
        if k <= prev || k >= n {
            return Err(Error::input(format!(
                "change points must be strictly increasing interior indices, offending {k}"
            )));
        }
        prev = k;
    }
    Ok(())
}

/// Residual sum of squares of per-segment line fits, or `None` if any
/// segment has fewer than 3 observations.
pub fn segment_rss(series: &Series, change_points: &[usize]) -> Result<Option<f64>> {
    let n = series.len();
    validate_change_points(n, change_points)?;
    let grid = series.grid();
    let x = series.values();
    let mut total = 0.0f64;
    let mut lo = 0usize; // segment is (lo, hi] in 1-based indices
    for &hi in change_points.iter().chain(std::iter::once(&n)) {
        let len = hi - lo;
        if len < 3 {
            return Ok(None);
        }
        let lenf = len as f64;
        let (mut st, mut sx) = (0.0f64, 0.0f64);
        for i in lo + 1..=hi {
            st += grid.t(i);
            sx += x[i - 1];
        }
        let (tbar, xbar) = (st / lenf, sx / lenf);
        let (mut stt, mut stx, mut sxx) = (0.0f64, 0.0f64, 0.0f64);
        for i in lo + 1..=hi {
            let dt = grid.t(i) - tbar;
            let dx = x[i - 1] - xbar;
            stt += dt * dt;
            stx += dt * dx;
            sxx += dx * dx;
        }
        total += (sxx - stx * stx / stt).max(0.0);
        lo = hi;
    }
    Ok(Some(total))
}

fn bic_from_rss(n: usize, rss: f64, change_count: usize) -> f64 {
    let nf = n as f64;
    let rss = rss.max(nf * 1e-18);
    nf * (rss / nf).ln() + 2.0 * (change_count as f64 + 1.0) * nf.ln()
}

/// `n log(RSS/n) + 2 (|K| + 1) log(n)`; `+inf` for an infeasible set.
pub fn bic(series: &Series, change_points: &[usize]) -> Result<f64> {
    Ok(match segment_rss(series, change_points)? {
        Some(rss) => bic_from_rss(series.len(), rss, change_points.len()),
        None => f64::INFINITY,
    })
}

/// Fibonacci bandwidth set: `G_1 = G_0 = g1`, `G_b = G_{b-1} + G_{b-2}`,
/// keeping every value below `n / log10(n)`.
pub fn fibonacci_bandwidths(g1: usize, n: usize) -> Result<Vec<usize>> {
    if g1 < 3 {
        return Err(Error::input("initial bandwidth must be >= 3"));
    }
    if n <= 10 {
        return Err(Error::input("series too short for a bandwidth set"));
    }
    let limit = n as f64 / (n as f64).log10();
    if (g1 as f64) >= limit {
        return Err(Error::input(format!(
            "initial bandwidth {g1} is not below n/log10(n) = {limit:.1}; no admissible bandwidths"
        )));
    }
    let mut out = vec![g1];
    let (mut prev2, mut prev1) = (g1, g1);
    loop {
        let next = prev1 + prev2;
        if (next as f64) >= limit {
            break;
        }
        out.push(next);
        prev2 = prev1;
        prev1 = next;
    }
    Ok(out)
}

/// Merges per-bandwidth candidate sets.
///
/// Sets are ordered by ascending BIC (ties broken towards the smaller
/// bandwidth), everything from the best set is accepted, and a later
/// candidate survives only if its distance to every accepted estimate
/// exceeds `theta * G` of its own bandwidth. Candidates within a set are
/// processed in increasing position.
pub fn multiscale_merge(
    mut sets: Vec<CandidateSet>,
    series: &Series,
    params: &DetectionParams,
) -> Result<DetectionResult> {
    if sets.is_empty() {
        return Err(Error::input("need at least one candidate set"));
    }
    let theta = params.theta;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::input(format!("theta must lie in (0, 1], got {theta}")));
    }
    for set in &mut sets {
        set.bic = bic(series, &set.peaks())?;
    }
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by(|&a, &b| sets[a].bic.total_cmp(&sets[b].bic).then(sets[a].g.cmp(&sets[b].g)));

    let mut accepted: Vec<ChangePoint> = Vec::new();
    for (rank, &idx) in order.iter().enumerate() {
        let set = &sets[idx];
        let radius = theta * set.g as f64;
        for est in &set.estimates {
            let isolated = accepted
                .iter()
                .all(|cp| (est.peak_k as f64 - cp.k as f64).abs() > radius);
            if rank == 0 || isolated {
                accepted.push(ChangePoint {
                    k: est.peak_k,
                    t: series.grid().t(est.peak_k),
                    source_g: set.g,
                    stat: est.peak_stat,
                });
            }
        }
    }
    accepted.sort_by_key(|cp| cp.k);
    Ok(DetectionResult { change_points: accepted, params: params.clone() })
}

/// Full pipeline: per-bandwidth profiles, critical values, eta-rule, then
/// the BIC merge.
pub fn detect_multiscale(series: &Series, params: &DetectionParams) -> Result<DetectionResult> {
    if params.bandwidths.is_empty() {
        return Err(Error::input("no bandwidths configured"));
    }
    let n = series.len();
    let mut sets = Vec::with_capacity(params.bandwidths.len());
    for &g in &params.bandwidths {
        let profile = mosum_profile(series, g)?;
        let cv = critical_value(n, g, params.alpha, params.log_h)?;
        sets.push(detect_single(&profile, cv.c_n, params.eta)?);
    }
    multiscale_merge(sets, series, params)
}
