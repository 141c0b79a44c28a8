//! Critical values for the max-MOSUM test.
//!
//! Under the no-change hypothesis the normalized maximum statistic
//! converges to a Gumbel-type limit with distribution function
//! `exp(-2 exp(-z))`. The location constant `H` entering `b_G` has no
//! closed form here; [`calibrate_log_h`] estimates `log(H)` by matching
//! the empirical median of the normalized maximum on simulated noise to
//! the median of the limit.

use crate::error::{Error, Result};
use crate::mosum::WindowSums;
use crate::sim::replication_rng;
use rand::Rng;
use rand_distr::StandardNormal;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default `log(H)`, calibrated on long null series.
pub const DEFAULT_LOG_H: f64 = 0.7284;

/// Critical value `C_n(G, alpha)` together with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValueSpec {
    pub n: usize,
    pub g: usize,
    pub alpha: f64,
    pub log_h: f64,
    /// `sqrt(2 log(n/G))`
    pub a_g: f64,
    /// `2 log(n/G) + log log(n/G) + log(H)`
    pub b_g: f64,
    /// `(b_G - log(-log(1 - alpha) / 2)) / a_G`
    pub c_n: f64,
}

impl CriticalValueSpec {
    /// Whether the bandwidth is large enough (`G >= n^(2/3)`) for the
    /// Gumbel approximation to be reliable. Small bandwidths are allowed
    /// but callers may want to surface a warning.
    pub fn bandwidth_meets_growth_condition(&self) -> bool {
        (self.g as f64) >= (self.n as f64).powf(2.0 / 3.0)
    }
}

/// Distribution function `exp(-2 exp(-z))` of the limit `Gamma_2`.
pub fn gumbel2_cdf(z: f64) -> f64 {
    (-2.0 * (-z).exp()).exp()
}

/// Quantile function of `Gamma_2`: `-log(-log(p) / 2)` for `p` in (0, 1).
pub fn gumbel2_quantile(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) || p == 0.0 {
        return Err(Error::input(format!("probability must lie in (0, 1), got {p}")));
    }
    Ok(-(-p.ln() / 2.0).ln())
}

/// Critical value of the level-`alpha` max-MOSUM test.
pub fn critical_value(n: usize, g: usize, alpha: f64, log_h: f64) -> Result<CriticalValueSpec> {
    if g == 0 {
        return Err(Error::input("bandwidth must be positive"));
    }
    let ratio = n as f64 / g as f64;
    if ratio <= std::f64::consts::E {
        return Err(Error::input(format!(
            "critical value needs n/G > e so that log log(n/G) is defined, got n/G = {ratio}"
        )));
    }
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::input(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let log_ratio = ratio.ln();
    let a_g = (2.0 * log_ratio).sqrt();
    let b_g = 2.0 * log_ratio + log_ratio.ln() + log_h;
    let c_n = (b_g - (-(1.0 - alpha).ln() / 2.0).ln()) / a_g;
    Ok(CriticalValueSpec { n, g, alpha, log_h, a_g, b_g, c_n })
}

/// Maximum of the statistic over all positions with the noise scale fixed
/// to one, straight from the window sums.
fn max_stat_unit_sigma(values: &[f64], g: usize) -> f64 {
    let n = values.len();
    let sums = WindowSums::from_values(values);
    let sqrt_g = (g as f64).sqrt();
    let mut max = 0.0f64;
    for k in g..=n - g {
        let (bp, bm, _, _) = sums.fit_pair(k, g);
        let d0 = bp[0] - bm[0];
        let d1 = bp[1] - bm[1];
        let w = sqrt_g * (d0 * d0 / 8.0 + d1 * d1 / 24.0).sqrt();
        if w > max {
            max = w;
        }
    }
    max
}

/// Monte-Carlo estimate of `log(H)`.
///
/// Simulates `replications` standard normal series of length `n`, records
/// `a_G max_k W - 2 log(n/G) - log log(n/G)` per replication with the
/// noise scale fixed to one, and returns the lower median minus the median
/// of `Gamma_2`. Each replication draws from its own counter-derived
/// stream, so the result does not depend on scheduling.
pub fn calibrate_log_h(n: usize, g: usize, replications: usize, seed: u64) -> Result<f64> {
    if g < 3 || 2 * g >= n {
        return Err(Error::input(format!("need 3 <= G and 2G < n, got G={g}, n={n}")));
    }
    let ratio = n as f64 / g as f64;
    if ratio <= std::f64::consts::E {
        return Err(Error::input(format!(
            "calibration needs n/G > e, got n/G = {ratio}"
        )));
    }
    if replications < 100 {
        return Err(Error::input("calibration needs at least 100 replications"));
    }
    let log_ratio = ratio.ln();
    let a_g = (2.0 * log_ratio).sqrt();
    let shift = 2.0 * log_ratio + log_ratio.ln();

    let one = |r: usize| -> f64 {
        let mut rng = replication_rng(seed, r as u64);
        let values: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        a_g * max_stat_unit_sigma(&values, g) - shift
    };

    #[cfg(feature = "parallel")]
    let mut ms: Vec<f64> = (0..replications).into_par_iter().map(one).collect();
    #[cfg(not(feature = "parallel"))]
    let mut ms: Vec<f64> = (0..replications).map(one).collect();

    ms.sort_by(f64::total_cmp);
    let lower_median = ms[(replications - 1) / 2];
    Ok(lower_median - gumbel2_quantile(0.5).expect("0.5 is a valid probability"))
}
