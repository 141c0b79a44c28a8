//! Piecewise-linear ground-truth signals, change magnitudes and the
//! theoretical drift curves of the sliding-window fits around a change.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid: observations at `t_i = i * delta_t` for `i = 1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    n: usize,
    delta_t: f64,
}

impl TimeGrid {
    pub fn new(n: usize, delta_t: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("grid needs n >= 1"));
        }
        if !delta_t.is_finite() || delta_t <= 0.0 {
            return Err(Error::input(format!("delta_t must be positive, got {delta_t}")));
        }
        Ok(TimeGrid { n, delta_t })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    /// Time point of the 1-based observation index.
    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.delta_t
    }

    /// Length of the observation period, `T = n * delta_t`.
    pub fn span(&self) -> f64 {
        self.n as f64 * self.delta_t
    }
}

/// Coefficients of one linear piece, `f(t) = a0 + a1 * t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a0: f64,
    pub a1: f64,
}

/// Piecewise-linear signal with change points at the given indices.
///
/// Observation `i` belongs to segment `j` iff `k_j < i <= k_{j+1}`, with
/// the implicit boundaries `k_0 = 0` and `k_{J+1} = n`. In particular the
/// change index itself is the last observation of its segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearSignal {
    grid: TimeGrid,
    change_indices: Vec<usize>,
    segments: Vec<Segment>,
}

/// Magnitudes of one change, measured at bandwidth `G`.
///
/// `delta0` is the jump of the signal at the change point and `delta1` the
/// slope change scaled by `G * delta_t`, which puts the two on a comparable
/// scale. `d` is the absolute second difference of the signal there,
/// `|f_{k+1} - 2 f_k + f_{k-1}| = |delta0 + delta1 / G|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeMagnitudes {
    pub delta0: f64,
    pub delta1: f64,
    pub d: f64,
}

impl PiecewiseLinearSignal {
    /// Builds a signal, validating that change indices are strictly
    /// increasing interior points and that adjacent segments actually
    /// differ in at least one coefficient.
    pub fn new(grid: TimeGrid, change_indices: Vec<usize>, segments: Vec<Segment>) -> Result<Self> {
        if segments.len() != change_indices.len() + 1 {
            return Err(Error::input(format!(
                "need one segment more than change indices, got {} segments for {} changes",
                segments.len(),
                change_indices.len()
            )));
        }
        let mut prev = 0usize;
        for &k in &change_indices {
            if k <= prev || k >= grid.n() {
                return Err(Error::input(format!(
                    "change indices must satisfy 0 < k_1 < ... < k_J < n, offending index {k}"
                )));
            }
            prev = k;
        }
        for (j, pair) in segments.windows(2).enumerate() {
            if pair[0] == pair[1] {
                return Err(Error::input(format!(
                    "segments {j} and {} are identical; adjacent segments must differ",
                    j + 1
                )));
            }
        }
        for s in &segments {
            if !s.a0.is_finite() || !s.a1.is_finite() {
                return Err(Error::input("segment coefficients must be finite"));
            }
        }
        Ok(PiecewiseLinearSignal { grid, change_indices, segments })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn change_indices(&self) -> &[usize] {
        &self.change_indices
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Number of change points.
    pub fn change_count(&self) -> usize {
        self.change_indices.len()
    }

    /// Signal value `f_i` at the 1-based observation index.
    pub fn evaluate(&self, i: usize) -> Result<f64> {
        if i == 0 || i > self.grid.n() {
            return Err(Error::input(format!(
                "index {i} out of range 1..={}",
                self.grid.n()
            )));
        }
        let j = self.change_indices.partition_point(|&k| k < i);
        let s = self.segments[j];
        Ok(s.a0 + s.a1 * self.grid.t(i))
    }

    /// All signal values `f_1..f_n`.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.n());
        let mut j = 0usize;
        for i in 1..=self.grid.n() {
            while j < self.change_indices.len() && self.change_indices[j] < i {
                j += 1;
            }
            let s = self.segments[j];
            out.push(s.a0 + s.a1 * self.grid.t(i));
        }
        out
    }

    /// Jump and slope-change magnitudes of the `j`-th change (1-based) at
    /// bandwidth `g`. Both deltas are signed as pre-change minus
    /// post-change.
    pub fn change_magnitudes(&self, j: usize, g: usize) -> Result<ChangeMagnitudes> {
        if j == 0 || j > self.change_indices.len() {
            return Err(Error::input(format!(
                "change ordinal {j} out of range 1..={}",
                self.change_indices.len()
            )));
        }
        if g == 0 {
            return Err(Error::input("bandwidth must be >= 1"));
        }
        let k = self.change_indices[j - 1];
        let pre = self.segments[j - 1];
        let post = self.segments[j];
        let g = g as f64;
        let delta0 = (pre.a0 - post.a0) + (pre.a1 - post.a1) * self.grid.t(k);
        let delta1 = g * self.grid.delta_t() * (pre.a1 - post.a1);
        Ok(ChangeMagnitudes { delta0, delta1, d: (delta0 + delta1 / g).abs() })
    }
}

/// File schema for a piecewise-linear signal:
/// `{"n":…, "delta_t":…, "changes":[…], "segments":[{"a0":…,"a1":…},…]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalSpec {
    pub n: usize,
    pub delta_t: f64,
    pub changes: Vec<usize>,
    pub segments: Vec<Segment>,
}

impl SignalSpec {
    pub fn build(self) -> Result<PiecewiseLinearSignal> {
        PiecewiseLinearSignal::new(TimeGrid::new(self.n, self.delta_t)?, self.changes, self.segments)
    }
}

impl From<&PiecewiseLinearSignal> for SignalSpec {
    fn from(sig: &PiecewiseLinearSignal) -> Self {
        SignalSpec {
            n: sig.grid.n(),
            delta_t: sig.grid.delta_t(),
            changes: sig.change_indices.clone(),
            segments: sig.segments.clone(),
        }
    }
}

/// Which side of the change point a window position `k` lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftSide {
    /// `k <= k_j`
    Before,
    /// `k > k_j`
    After,
}

fn check_kappa(kappa: f64) -> Result<f64> {
    if !kappa.is_finite() || kappa.abs() > 1.0 {
        return Err(Error::input(format!("kappa must lie in [-1, 1], got {kappa}")));
    }
    Ok(kappa.abs())
}

/// Leading drift matrix `A(kappa)` of the window-fit difference around a
/// change point at relative offset `|kappa| = |k - k_j| / G`.
///
/// Applied to the post-minus-pre change vector, `A + O_G` maps the change
/// magnitudes to the exact expected difference of the two window fits; see
/// [`drift_matrix_og`] for the finite-bandwidth correction.
pub fn drift_matrix_a(kappa: f64, side: DriftSide) -> Result<[[f64; 2]; 2]> {
    let u = check_kappa(kappa)?;
    let f = 1.0 - u;
    let m = match side {
        DriftSide::Before => [[1.0 - 3.0 * u, u * u - u], [6.0 * u, -2.0 * u * u + u + 1.0]],
        DriftSide::After => [[1.0 - 3.0 * u, u - u * u], [-6.0 * u, -2.0 * u * u + u + 1.0]],
    };
    Ok([[f * m[0][0], f * m[0][1]], [f * m[1][0], f * m[1][1]]])
}

/// Order-`1/G` correction matrix `O_G(kappa)`, vanishing at `kappa = 0`
/// and `|kappa| = 1`.
pub fn drift_matrix_og(kappa: f64, g: usize, side: DriftSide) -> Result<[[f64; 2]; 2]> {
    let u = check_kappa(kappa)?;
    if g < 2 {
        return Err(Error::input("bandwidth must be >= 2"));
    }
    let gf = g as f64;
    let (scale, m) = match side {
        DriftSide::Before => (
            -u * (1.0 - u) / (gf - 1.0),
            [[3.0, 2.0 - u], [-6.0 / (gf + 1.0), (2.0 * u - 1.0 - 3.0 * gf) / (gf + 1.0)]],
        ),
        DriftSide::After => (
            -u * (1.0 - u) / (gf + 1.0),
            [[-3.0, 2.0 - u], [6.0 / (gf - 1.0), (2.0 * u - 1.0 + 3.0 * gf) / (gf - 1.0)]],
        ),
    };
    Ok([
        [scale * m[0][0], scale * m[0][1]],
        [scale * m[1][0], scale * m[1][1]],
    ])
}

/// Large-`G` drift curve `delta_j(kappa)` of the window-fit difference, as
/// a function of the signed offset `kappa = (k - k_j) / G` in `[-1, 1]`.
pub fn delta_curve(delta: [f64; 2], kappa: f64) -> Result<[f64; 2]> {
    let u = check_kappa(kappa)?;
    let f = 1.0 - u;
    Ok([
        f * ((1.0 - 3.0 * u) * delta[0] + kappa * f * delta[1]),
        f * (-6.0 * kappa * delta[0] + (-2.0 * u * u + u + 1.0) * delta[1]),
    ])
}

/// Signal-strength curve `g_j(kappa)`: the `diag(1, 1/3)`-weighted norm of
/// [`delta_curve`]. For a continuous change (`delta0 = 0`) it simplifies to
/// `(1-|kappa|)^2 sqrt(kappa^2 + (2|kappa|+1)^2 / 3) |delta1|`, maximized
/// at `kappa = 0`.
pub fn g_curve(delta: [f64; 2], kappa: f64) -> Result<f64> {
    let d = delta_curve(delta, kappa)?;
    Ok((d[0] * d[0] + d[1] * d[1] / 3.0).sqrt())
}
