//! Dependent multichannel dynamic time warping.
//!
//! All channels share one warping path and the local cost of aligning two
//! frames is the Euclidean norm of their difference. Accumulated costs are
//! not weighted or normalized by path length; [`sim`] rescales a distance
//! against a corpus maximum instead.
//!
//! DTW is not a metric (the triangle inequality fails), so nothing here
//! assumes one.

use crate::corpus::ClipSeries;
use crate::error::{Error, Result};

/// Sakoe-Chiba band around the length-adjusted diagonal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Band {
    #[default]
    Unbounded,
    /// Extra columns allowed on each side of the diagonal cells of a row.
    Radius(usize),
}

impl Band {
    pub fn from_option(radius: Option<usize>) -> Self {
        radius.map_or(Band::Unbounded, Band::Radius)
    }

    pub fn radius(&self) -> Option<usize> {
        match *self {
            Band::Unbounded => None,
            Band::Radius(r) => Some(r),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DtwConfig {
    pub band: Band,
    /// Stop as soon as every cell of a DP row exceeds this cost.
    pub early_abandon: Option<f64>,
}

impl DtwConfig {
    pub fn banded(radius: usize) -> Self {
        DtwConfig {
            band: Band::Radius(radius),
            early_abandon: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtwResult {
    pub distance: f64,
    /// False when the computation was abandoned; `distance` is then a lower
    /// bound of the banded DTW value.
    pub exact: bool,
}

#[inline]
fn frame_cost(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Inclusive column range of row `i` in an `n × m` grid.
///
/// The unbanded core of a row is the run of columns the straight line from
/// `(0, 0)` to `(n-1, m-1)` passes through, which keeps the band connected
/// for any pair of lengths; the radius widens it on both sides.
pub(crate) fn band_window(i: usize, n: usize, m: usize, band: Band) -> (usize, usize) {
    let r = match band {
        Band::Unbounded => return (0, m - 1),
        Band::Radius(r) => r,
    };
    let (lo, hi) = if n == 1 {
        (0, m - 1)
    } else if m == 1 {
        (0, 0)
    } else {
        let (num, den) = (m - 1, n - 1);
        let lo = i * num / den;
        let next = ((i + 1) * num).div_ceil(den);
        (lo, next.saturating_sub(1).max(lo).min(m - 1))
    };
    (lo.saturating_sub(r), hi.saturating_add(r).min(m - 1))
}

fn check_pair(x: &ClipSeries, y: &ClipSeries) -> Result<()> {
    x.require_same_schema(y)
}

/// Unconstrained DTW over the full `T_x × T_y` grid.
pub fn dtw_full(x: &ClipSeries, y: &ClipSeries) -> Result<f64> {
    check_pair(x, y)?;
    let (n, m) = (x.n_frames(), y.n_frames());
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for i in 0..n {
        let xi = x.frame(i);
        for j in 0..m {
            let cost = frame_cost(xi, y.frame(j));
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = prev[j];
                let diag = if j > 0 { prev[j - 1] } else { f64::INFINITY };
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                up.min(diag).min(left)
            };
            cur[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// Banded DTW with optional early abandoning.
pub fn dtw_banded(x: &ClipSeries, y: &ClipSeries, config: &DtwConfig) -> Result<DtwResult> {
    check_pair(x, y)?;
    let (n, m) = (x.n_frames(), y.n_frames());
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    let mut prev_window = (0, 0);
    for i in 0..n {
        let (lo, hi) = band_window(i, n, m, config.band);
        let xi = x.frame(i);
        let mut row_min = f64::INFINITY;
        for j in lo..=hi {
            let cost = frame_cost(xi, y.frame(j));
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = prev[j];
                let diag = if j > 0 { prev[j - 1] } else { f64::INFINITY };
                let left = if j > lo { cur[j - 1] } else { f64::INFINITY };
                up.min(diag).min(left)
            };
            let v = cost + best;
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if let Some(cutoff) = config.early_abandon {
            if row_min > cutoff {
                return Ok(DtwResult {
                    distance: row_min,
                    exact: false,
                });
            }
        }
        // Clear what the previous row left in `prev` before it becomes `cur`.
        if i > 0 {
            prev[prev_window.0..=prev_window.1].fill(f64::INFINITY);
        }
        prev_window = (lo, hi);
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(DtwResult {
        distance: prev[m - 1],
        exact: true,
    })
}

/// LB_Keogh for dependent multichannel DTW: each frame of `x` contributes
/// its Euclidean distance to the per-channel min/max box of `y` over that
/// row's band window. Never exceeds [`dtw_banded`] with the same band.
pub fn lb_keogh(x: &ClipSeries, y: &ClipSeries, band: Band) -> Result<f64> {
    check_pair(x, y)?;
    let (n, m) = (x.n_frames(), y.n_frames());
    let c = x.n_channels();
    let mut lower = vec![0.0; c];
    let mut upper = vec![0.0; c];
    let mut total = 0.0;
    let mut cached: Option<(usize, usize)> = None;
    for i in 0..n {
        let window = band_window(i, n, m, band);
        if cached != Some(window) {
            lower.fill(f64::INFINITY);
            upper.fill(f64::NEG_INFINITY);
            for j in window.0..=window.1 {
                for (ch, &v) in y.frame(j).iter().enumerate() {
                    lower[ch] = lower[ch].min(v);
                    upper[ch] = upper[ch].max(v);
                }
            }
            cached = Some(window);
        }
        let sq: f64 = x
            .frame(i)
            .iter()
            .enumerate()
            .map(|(ch, &v)| {
                let d = if v > upper[ch] {
                    v - upper[ch]
                } else if v < lower[ch] {
                    lower[ch] - v
                } else {
                    0.0
                };
                d * d
            })
            .sum();
        total += sq.sqrt();
    }
    Ok(total)
}

/// `1 - distance / max_dtw`.
pub fn sim(distance: f64, max_dtw: f64) -> Result<f64> {
    if max_dtw.is_nan() || max_dtw <= 0.0 || !max_dtw.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "max_dtw must be positive, got {max_dtw}"
        )));
    }
    if !(0.0..=max_dtw).contains(&distance) {
        return Err(Error::InvalidArgument(format!(
            "distance {distance} outside [0, max_dtw = {max_dtw}]"
        )));
    }
    Ok(1.0 - distance / max_dtw)
}
