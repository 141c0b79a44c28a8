//! Sliding-window least squares and the MOSUM Wald statistic.
//!
//! At every admissible position `k` two windows of width `G` are fitted:
//! `I-(k) = {k-G+1..k}` and `I+(k) = {k+1..k+G}`, each by least squares of
//! `X_i` on the regressor pair `(1, (i-k)/G)`. The statistic
//!
//! ```text
//! W_k = sqrt(G) / sigma_k * || diag(8, 24)^{-1/2} (beta+ - beta-) ||
//! ```
//!
//! weights the coefficient gap by the asymptotic covariance of the gap
//! under the no-change hypothesis and scales by a local noise estimate.
//! All per-window quantities come from three prefix-sum arrays, so the
//! whole profile costs O(n) arithmetic regardless of `G`.

use crate::error::{Error, Result};
use crate::signal::TimeGrid;

/// Lower clamp applied to the local variance before dividing by it, so
/// (near-)noiseless windows cannot blow the statistic up to infinity.
pub const DEFAULT_CLAMP_FLOOR: f64 = 1e-12;

/// Observed series on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
    grid: TimeGrid,
}

impl Series {
    pub fn new(values: Vec<f64>, grid: TimeGrid) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::input(format!(
                "series has {} values but the grid expects {}",
                values.len(),
                grid.n()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::input(format!("series contains non-finite value {bad}")));
        }
        Ok(Series { values, grid })
    }

    /// Builds the grid from the value count and a time step.
    pub fn from_values(values: Vec<f64>, delta_t: f64) -> Result<Self> {
        let grid = TimeGrid::new(values.len().max(1), delta_t)?;
        Series::new(values, grid)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Which window at position `k` to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowSide {
    /// `I-(k) = {k-G+1, ..., k}`
    Minus,
    /// `I+(k) = {k+1, ..., k+G}`
    Plus,
}

/// Intercept/slope fits of both windows at one position, together with the
/// local variance estimates and the statistic value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFit {
    pub k: usize,
    pub beta_plus: [f64; 2],
    pub beta_minus: [f64; 2],
    pub sigma2_plus: f64,
    pub sigma2_minus: f64,
    /// `(sigma2_plus + sigma2_minus) / 2`
    pub sigma2: f64,
    /// MOSUM statistic `W_k`.
    pub stat: f64,
}

/// Prefix sums of `x`, `i * x` and `x^2` enabling O(1) window fits.
///
/// Sums are accumulated with Neumaier compensation; each stored prefix is
/// the compensated total, so differences of prefixes stay accurate over
/// long series.
#[derive(Debug, Clone)]
pub struct WindowSums {
    s1: Vec<f64>,
    si: Vec<f64>,
    s2: Vec<f64>,
    n: usize,
}

fn compensated_prefix(values: impl Iterator<Item = f64>, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len + 1);
    out.push(0.0);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

impl WindowSums {
    pub fn new(series: &Series) -> Self {
        WindowSums::from_values(series.values())
    }

    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        WindowSums {
            s1: compensated_prefix(values.iter().copied(), n),
            si: compensated_prefix(
                values.iter().enumerate().map(|(i0, &x)| (i0 + 1) as f64 * x),
                n,
            ),
            s2: compensated_prefix(values.iter().map(|&x| x * x), n),
            n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_window(&self, k: usize, g: usize, side: WindowSide) -> Result<()> {
        if g < 2 {
            return Err(Error::input("bandwidth must be >= 2 for a rank-2 window fit"));
        }
        let ok = match side {
            WindowSide::Plus => k + g <= self.n,
            WindowSide::Minus => k >= g && k <= self.n,
        };
        if !ok {
            return Err(Error::input(format!(
                "window {side:?} at k={k} with G={g} falls outside 1..={}",
                self.n
            )));
        }
        Ok(())
    }

    /// Least-squares coefficients of `X_i` on `(1, (i-k)/G)` over the
    /// requested window, in O(1).
    pub fn ols(&self, k: usize, g: usize, side: WindowSide) -> Result<[f64; 2]> {
        self.check_window(k, g, side)?;
        let (beta, _rss) = self.fit(k, g, side);
        Ok(beta)
    }

    /// Residual variance pair and their average at position `k`.
    pub fn local_variance(&self, k: usize, g: usize) -> Result<(f64, f64, f64)> {
        if g < 3 {
            return Err(Error::input("local variance needs G >= 3 (denominator G - 2)"));
        }
        self.check_window(k, g, WindowSide::Minus)?;
        self.check_window(k, g, WindowSide::Plus)?;
        let (_, rss_plus) = self.fit(k, g, WindowSide::Plus);
        let (_, rss_minus) = self.fit(k, g, WindowSide::Minus);
        let denom = (g - 2) as f64;
        let sp = rss_plus / denom;
        let sm = rss_minus / denom;
        Ok((sp, sm, 0.5 * (sp + sm)))
    }

    /// Coefficients and residual sum of squares of one window. Range
    /// checks are the caller's responsibility.
    fn fit(&self, k: usize, g: usize, side: WindowSide) -> ([f64; 2], f64) {
        let gf = g as f64;
        let (lo, hi, sum_z) = match side {
            WindowSide::Plus => (k + 1, k + g, 0.5 * (gf + 1.0)),
            WindowSide::Minus => (k - g + 1, k, -0.5 * (gf - 1.0)),
        };
        let sx = self.s1[hi] - self.s1[lo - 1];
        let six = self.si[hi] - self.si[lo - 1];
        let sxx = self.s2[hi] - self.s2[lo - 1];
        // regressor z = (i - k)/G; centered second moment is the same for
        // both windows: sum (z - mean z)^2 = (G^2 - 1) / (12 G)
        let szx = (six - k as f64 * sx) / gf;
        let szz_c = (gf * gf - 1.0) / (12.0 * gf);
        let b1 = (szx - sum_z * sx / gf) / szz_c;
        let b0 = (sx - b1 * sum_z) / gf;
        let rss = (sxx - sx * sx / gf - b1 * b1 * szz_c).max(0.0);
        ([b0, b1], rss)
    }

    pub(crate) fn fit_pair(&self, k: usize, g: usize) -> ([f64; 2], [f64; 2], f64, f64) {
        let (beta_plus, rss_plus) = self.fit(k, g, WindowSide::Plus);
        let (beta_minus, rss_minus) = self.fit(k, g, WindowSide::Minus);
        (beta_plus, beta_minus, rss_plus, rss_minus)
    }
}

/// One-shot window fit. Builds the prefix sums for `series`; use
/// [`WindowSums`] directly when fitting many windows.
pub fn window_ols(series: &Series, k: usize, g: usize, side: WindowSide) -> Result<[f64; 2]> {
    WindowSums::new(series).ols(k, g, side)
}

/// One-shot local variance `(sigma2_plus, sigma2_minus, sigma2)` at `k`.
pub fn local_variance(series: &Series, k: usize, g: usize) -> Result<(f64, f64, f64)> {
    WindowSums::new(series).local_variance(k, g)
}

/// MOSUM statistic from its parts.
///
/// The variance estimate is clamped from below by `clamp_floor`; if on top
/// of that the coefficient gap is exactly zero the statistic is defined as
/// zero rather than 0/0.
pub fn mosum_statistic(
    beta_plus: [f64; 2],
    beta_minus: [f64; 2],
    sigma2: f64,
    g: usize,
    clamp_floor: f64,
) -> f64 {
    let d0 = beta_plus[0] - beta_minus[0];
    let d1 = beta_plus[1] - beta_minus[1];
    let sigma = if sigma2 <= clamp_floor {
        if d0 == 0.0 && d1 == 0.0 {
            return 0.0;
        }
        clamp_floor.sqrt()
    } else {
        sigma2.sqrt()
    };
    (g as f64).sqrt() / sigma * (d0 * d0 / 8.0 + d1 * d1 / 24.0).sqrt()
}

/// All window fits and statistics of one series at one bandwidth.
#[derive(Debug, Clone)]
pub struct MosumProfile {
    g: usize,
    clamp_floor: f64,
    fits: Vec<WindowFit>,
}

impl MosumProfile {
    pub fn g(&self) -> usize {
        self.g
    }

    pub fn clamp_floor(&self) -> f64 {
        self.clamp_floor
    }

    /// Fits for `k = G..=n-G`, contiguous in `k`.
    pub fn fits(&self) -> &[WindowFit] {
        &self.fits
    }

    /// First admissible position, `k = G`.
    pub fn first_k(&self) -> usize {
        self.g
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }

    pub fn max_stat(&self) -> f64 {
        self.fits.iter().map(|f| f.stat).fold(0.0, f64::max)
    }

    /// Synthetic profile with prescribed statistic values, for exercising
    /// the detection rules in isolation.
    #[cfg(test)]
    pub(crate) fn from_stats(g: usize, stats: Vec<f64>) -> Self {
        let fits = stats
            .into_iter()
            .enumerate()
            .map(|(i, stat)| WindowFit {
                k: g + i,
                beta_plus: [0.0; 2],
                beta_minus: [0.0; 2],
                sigma2_plus: 1.0,
                sigma2_minus: 1.0,
                sigma2: 1.0,
                stat,
            })
            .collect();
        MosumProfile { g, clamp_floor: DEFAULT_CLAMP_FLOOR, fits }
    }
}

/// Computes the full MOSUM profile for `k = G..=n-G` in O(n) total.
pub fn mosum_profile(series: &Series, g: usize) -> Result<MosumProfile> {
    mosum_profile_with_floor(series, g, DEFAULT_CLAMP_FLOOR)
}

pub fn mosum_profile_with_floor(
    series: &Series,
    g: usize,
    clamp_floor: f64,
) -> Result<MosumProfile> {
    let n = series.len();
    if g < 3 {
        return Err(Error::input("bandwidth must be >= 3"));
    }
    if 2 * g >= n {
        return Err(Error::input(format!(
            "bandwidth G={g} too large for n={n}: the procedure needs 2G < n"
        )));
    }
    let sums = WindowSums::new(series);
    let denom = (g - 2) as f64;
    let mut fits = Vec::with_capacity(n - 2 * g + 1);
    for k in g..=n - g {
        let (beta_plus, beta_minus, rss_plus, rss_minus) = sums.fit_pair(k, g);
        let sigma2_plus = rss_plus / denom;
        let sigma2_minus = rss_minus / denom;
        let sigma2 = 0.5 * (sigma2_plus + sigma2_minus);
        let stat = mosum_statistic(beta_plus, beta_minus, sigma2, g, clamp_floor);
        fits.push(WindowFit {
            k,
            beta_plus,
            beta_minus,
            sigma2_plus,
            sigma2_minus,
            sigma2,
            stat,
        });
    }
    Ok(MosumProfile { g, clamp_floor, fits })
}

fn cov_z0(h: f64) -> f64 {
    let u = h.abs();
    if u < 1.0 {
        1.0 - 4.5 * u + 3.0 * u * u + 0.75 * u * u * u
    } else if u < 2.0 {
        -1.0 + 3.5 * u - 3.0 * u * u + 0.75 * u * u * u
    } else {
        0.0
    }
}

fn cov_z1(h: f64) -> f64 {
    let u = h.abs();
    if u < 1.0 {
        1.0 - 1.5 * u - 3.0 * u * u + 3.0 * u * u * u
    } else if u < 2.0 {
        -1.0 - 1.5 * u + 3.0 * u * u - u * u * u
    } else {
        0.0
    }
}

fn cov_cross(h: f64) -> f64 {
    let s3 = 3.0f64.sqrt();
    if (0.0..1.0).contains(&h) {
        s3 * (-1.5 * h + 2.25 * h * h - 0.5 * h * h * h)
    } else if (1.0..2.0).contains(&h) {
        s3 * (1.5 * h - 1.75 * h * h + 0.5 * h * h * h)
    } else if (-1.0..0.0).contains(&h) {
        s3 * (-1.5 * h - 2.25 * h * h - 0.5 * h * h * h)
    } else if (-2.0..-1.0).contains(&h) {
        s3 * (1.5 * h + 1.75 * h * h + 0.5 * h * h * h)
    } else {
        0.0
    }
}

/// Covariance of the limiting bivariate process of the scaled window-fit
/// gap at lag `h` (in units of `G`): entry `(a, b)` is
/// `Cov(Z_a(t), Z_b(t + h))`. Identity at `h = 0`, identically zero for
/// `|h| >= 2`.
pub fn theoretical_z_covariance(h: f64) -> [[f64; 2]; 2] {
    [[cov_z0(h), cov_cross(h)], [cov_cross(-h), cov_z1(h)]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::replication_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn series(values: Vec<f64>) -> Series {
        Series::from_values(values, 1.0).unwrap()
    }

    /// Direct normal-equations solve over one window, summing the window
    /// values themselves. Independent of the prefix-sum path.
    fn naive_ols(values: &[f64], k: usize, g: usize, side: WindowSide) -> [f64; 2] {
        let idx: Vec<usize> = match side {
            WindowSide::Plus => (k + 1..=k + g).collect(),
            WindowSide::Minus => (k - g + 1..=k).collect(),
        };
        let gf = g as f64;
        let (mut sz, mut szz, mut sx, mut szx) = (0.0, 0.0, 0.0, 0.0);
        for &i in &idx {
            let z = (i as f64 - k as f64) / gf;
            let x = values[i - 1];
            sz += z;
            szz += z * z;
            sx += x;
            szx += z * x;
        }
        let det = gf * szz - sz * sz;
        [(szz * sx - sz * szx) / det, (gf * szx - sz * sx) / det]
    }

    fn naive_rss(values: &[f64], k: usize, g: usize, side: WindowSide, beta: [f64; 2]) -> f64 {
        let idx: Vec<usize> = match side {
            WindowSide::Plus => (k + 1..=k + g).collect(),
            WindowSide::Minus => (k - g + 1..=k).collect(),
        };
        idx.iter()
            .map(|&i| {
                let z = (i as f64 - k as f64) / g as f64;
                let r = values[i - 1] - beta[0] - z * beta[1];
                r * r
            })
            .sum()
    }

    #[test]
    fn window_ols_recovers_exact_line() {
        // X_5..X_8 = (7, 8, 9, 10) lie exactly on 6 + 4 * (i-4)/4.
        let s = series(vec![0.0, 0.0, 0.0, 0.0, 7.0, 8.0, 9.0, 10.0]);
        let beta = window_ols(&s, 4, 4, WindowSide::Plus).unwrap();
        assert!((beta[0] - 6.0).abs() < 1e-12);
        assert!((beta[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn window_ols_constant_series() {
        let s = series(vec![3.5; 40]);
        for side in [WindowSide::Plus, WindowSide::Minus] {
            let beta = window_ols(&s, 20, 10, side).unwrap();
            assert!((beta[0] - 3.5).abs() < 1e-12);
            assert!(beta[1].abs() < 1e-12);
        }
    }

    #[test]
    fn window_bounds_and_rank_checks() {
        let s = series(vec![1.0; 20]);
        assert!(window_ols(&s, 0, 5, WindowSide::Plus).is_ok());
        assert!(window_ols(&s, 0, 5, WindowSide::Minus).is_err());
        assert!(window_ols(&s, 16, 5, WindowSide::Plus).is_err());
        assert!(window_ols(&s, 15, 5, WindowSide::Plus).is_ok());
        assert!(window_ols(&s, 10, 1, WindowSide::Plus).is_err());
        assert!(local_variance(&s, 10, 2).is_err());
        assert!(local_variance(&s, 2, 3).is_err());
    }

    #[test]
    fn exactly_linear_window_has_zero_variance() {
        let vals: Vec<f64> = (1..=30).map(|i| 2.0 - 0.25 * i as f64).collect();
        let (sp, sm, s) = local_variance(&series(vals), 15, 10).unwrap();
        assert!(sp >= 0.0 && sp < 1e-15);
        assert!(sm >= 0.0 && sm < 1e-15);
        assert!(s < 1e-15);
    }

    #[test]
    fn prefix_sums_match_naive_solve() {
        let mut rng = replication_rng(11, 0);
        let vals: Vec<f64> = (0..400).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let s = series(vals.clone());
        let sums = WindowSums::new(&s);
        for g in [3usize, 10, 50] {
            for k in g..=400 - g {
                for side in [WindowSide::Plus, WindowSide::Minus] {
                    let fast = sums.ols(k, g, side).unwrap();
                    let slow = naive_ols(&vals, k, g, side);
                    assert!((fast[0] - slow[0]).abs() <= 1e-9, "b0 k={k} g={g}");
                    assert!((fast[1] - slow[1]).abs() <= 1e-9, "b1 k={k} g={g}");
                }
                let (sp, sm, _) = sums.local_variance(k, g).unwrap();
                let denom = (g - 2) as f64;
                let rp = naive_rss(&vals, k, g, WindowSide::Plus, naive_ols(&vals, k, g, WindowSide::Plus));
                let rm = naive_rss(&vals, k, g, WindowSide::Minus, naive_ols(&vals, k, g, WindowSide::Minus));
                assert!((sp - rp / denom).abs() <= 1e-9);
                assert!((sm - rm / denom).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn statistic_zero_gap_and_closed_form() {
        assert_eq!(
            mosum_statistic([1.0, 2.0], [1.0, 2.0], 4.0, 100, DEFAULT_CLAMP_FLOOR),
            0.0
        );
        // gap (2*sqrt(2), 0), sigma = 1, G = 100: 10 * sqrt(8/8) = 10
        let w = mosum_statistic([2.0f64.sqrt() * 2.0, 0.0], [0.0, 0.0], 1.0, 100, DEFAULT_CLAMP_FLOOR);
        assert!((w - 10.0).abs() < 1e-12);
        // clamped variance with zero gap stays zero
        assert_eq!(mosum_statistic([5.0, 1.0], [5.0, 1.0], 0.0, 50, DEFAULT_CLAMP_FLOOR), 0.0);
        // clamped variance with a gap stays finite
        let w = mosum_statistic([5.0, 1.0], [4.0, 1.0], 0.0, 50, DEFAULT_CLAMP_FLOOR);
        assert!(w.is_finite() && w > 0.0);
    }

    #[test]
    fn profile_covers_expected_range() {
        let mut rng = replication_rng(3, 0);
        let vals: Vec<f64> = (0..3500).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let p = mosum_profile(&Series::from_values(vals, 0.01).unwrap(), 200).unwrap();
        assert_eq!(p.len(), 3101);
        assert_eq!(p.fits().first().unwrap().k, 200);
        assert_eq!(p.fits().last().unwrap().k, 3300);
        for f in p.fits() {
            assert!((f.sigma2 - 0.5 * (f.sigma2_plus + f.sigma2_minus)).abs() < 1e-15);
            assert!(f.stat >= 0.0);
        }
    }

    #[test]
    fn profile_rejects_bad_bandwidths() {
        let s = series(vec![0.0; 100]);
        assert!(mosum_profile(&s, 2).is_err());
        assert!(mosum_profile(&s, 50).is_err());
        assert!(mosum_profile(&s, 49).is_ok());
    }

    #[test]
    fn statistic_scale_equivariant_and_trend_invariant() {
        let n = 2000;
        let mut rng = replication_rng(5, 0);
        let vals: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let base = mosum_profile(&series(vals.clone()), 50).unwrap();

        let scaled: Vec<f64> = vals.iter().map(|x| x * std::f64::consts::PI).collect();
        let scaled = mosum_profile(&series(scaled), 50).unwrap();

        // a + b * t_i with t_i on the usual 0.01 grid
        let trended: Vec<f64> = vals
            .iter()
            .enumerate()
            .map(|(i0, x)| x + 2.5 - 0.75 * ((i0 + 1) as f64 * 0.01))
            .collect();
        let trended = mosum_profile(&series(trended), 50).unwrap();

        for ((a, b), c) in base.fits().iter().zip(scaled.fits()).zip(trended.fits()) {
            assert!((a.stat - b.stat).abs() <= 1e-9, "scaling changed W at k={}", a.k);
            assert!((a.stat - c.stat).abs() <= 1e-9, "global line changed W at k={}", a.k);
        }
    }

    #[test]
    fn z_covariance_reference_values() {
        let id = theoretical_z_covariance(0.0);
        assert_eq!(id, [[1.0, 0.0], [0.0, 1.0]]);

        let s3 = 3.0f64.sqrt();
        let c1 = theoretical_z_covariance(1.0);
        assert!((c1[0][0] - 0.25).abs() < 1e-15);
        assert!((c1[1][1] + 0.5).abs() < 1e-15);
        assert!((c1[0][1] - s3 / 4.0).abs() < 1e-15);
        assert!((c1[1][0] + s3 / 4.0).abs() < 1e-15);

        let c05 = theoretical_z_covariance(0.5);
        assert!((c05[0][0] + 0.40625).abs() < 1e-15);
        assert!((c05[1][1] + 0.125).abs() < 1e-15);
        assert!((c05[0][1] + s3 / 4.0).abs() < 1e-15);
        assert!((c05[1][0] - s3 / 4.0).abs() < 1e-15);

        let c15 = theoretical_z_covariance(1.5);
        assert!((c15[0][0] - 0.03125).abs() < 1e-15);
        assert!((c15[1][1] - 0.125).abs() < 1e-15);
        assert!(c15[0][1].abs() < 1e-15);
        assert!(c15[1][0].abs() < 1e-15);

        assert_eq!(theoretical_z_covariance(2.5), [[0.0; 2]; 2]);
        assert_eq!(theoretical_z_covariance(-3.0), [[0.0; 2]; 2]);
    }

    #[test]
    fn z_covariance_continuity_and_transpose_symmetry() {
        for h in [-1.999, -1.5, -1.0, -0.3, 0.0, 0.7, 1.0, 1.7] {
            let a = theoretical_z_covariance(h);
            let b = theoretical_z_covariance(-h);
            assert!((a[0][1] - b[1][0]).abs() < 1e-15);
            assert!((a[0][0] - b[0][0]).abs() < 1e-15);
            assert!((a[1][1] - b[1][1]).abs() < 1e-15);
        }
        // branch joins
        for h in [1.0, 2.0] {
            let eps = 1e-9;
            let lo = theoretical_z_covariance(h - eps);
            let hi = theoretical_z_covariance(h + eps);
            for r in 0..2 {
                for c in 0..2 {
                    assert!((lo[r][c] - hi[r][c]).abs() < 1e-7, "jump at h={h} [{r}][{c}]");
                }
            }
        }
    }

    #[test]
    fn series_validation() {
        assert!(Series::from_values(vec![1.0, f64::NAN], 1.0).is_err());
        assert!(Series::from_values(vec![1.0, f64::INFINITY], 1.0).is_err());
        let grid = TimeGrid::new(3, 1.0).unwrap();
        assert!(Series::new(vec![1.0, 2.0], grid).is_err());
    }
}
