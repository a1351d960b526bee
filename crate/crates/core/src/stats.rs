//! Numerical kernels behind the metric suite.
//!
//! Moments are population moments throughout. Zero-variance inputs follow
//! fixed rules instead of producing NaN:
//!
//! * CCC of two constant sequences is 1 if they are equal and 0 otherwise;
//!   CCC with exactly one constant sequence is 0.
//! * A Pearson correlation over a zero-variance overlap is 0.

use nalgebra::{DMatrix, DVector};

use crate::corpus::ClipSeries;
use crate::error::{Error, Result};

/// Ridge added to fitted covariances.
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Correlations closer than this are treated as tied in the lag scan.
const LAG_TIE_TOL: f64 = 1e-12;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn is_constant(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] == w[1])
}

/// Lin's concordance correlation coefficient.
pub fn ccc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Length(format!(
            "ccc over {} vs {} samples",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Length("ccc needs at least 2 samples".into()));
    }
    match (is_constant(x), is_constant(y)) {
        (true, true) => return Ok(if x[0] == y[0] { 1.0 } else { 0.0 }),
        (true, false) | (false, true) => return Ok(0.0),
        (false, false) => {}
    }
    let (mx, my) = (mean(x), mean(y));
    let n = x.len() as f64;
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        vx += da * da;
        vy += db * db;
        cov += da * db;
    }
    let (vx, vy, cov) = (vx / n, vy / n, cov / n);
    let shift = mx - my;
    Ok(2.0 * cov / (vx + vy + shift * shift))
}

/// Unweighted mean of per-channel CCC.
pub fn ccc_multichannel(x: &ClipSeries, y: &ClipSeries) -> Result<f64> {
    x.require_same_shape(y)?;
    let c = x.n_channels();
    let mut total = 0.0;
    for ch in 0..c {
        total += ccc(&x.channel(ch), &y.channel(ch))?;
    }
    Ok(total / c as f64)
}

/// Mean squared difference over all frames and channels.
pub fn mse(x: &ClipSeries, y: &ClipSeries) -> Result<f64> {
    x.require_same_shape(y)?;
    let sum: f64 = x
        .values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / x.values().len() as f64)
}

/// Population variance across frames, averaged over channels.
pub fn series_variance(x: &ClipSeries) -> Result<f64> {
    if x.n_frames() < 2 {
        return Err(Error::Length("variance needs at least 2 frames".into()));
    }
    let c = x.n_channels();
    let mut total = 0.0;
    for ch in 0..c {
        let v = x.channel(ch);
        let m = mean(&v);
        total += v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64;
    }
    Ok(total / c as f64)
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        vx += da * da;
        vy += db * db;
        cov += da * db;
    }
    if vx <= 0.0 || vy <= 0.0 {
        return 0.0;
    }
    (cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LagResult {
    pub peak_lag: i64,
    pub peak_correlation: f64,
}

/// Channel-averaged Pearson correlation of `x[t]` against `y[t + lag]`.
pub fn lagged_correlation(x: &ClipSeries, y: &ClipSeries, lag: i64) -> Result<f64> {
    x.require_same_shape(y)?;
    let t = x.n_frames();
    let k = lag.unsigned_abs() as usize;
    if k >= t {
        return Err(Error::InvalidArgument(format!(
            "lag {lag} needs more than {t} frames"
        )));
    }
    let (xr, yr) = if lag >= 0 {
        (0..t - k, k..t)
    } else {
        (k..t, 0..t - k)
    };
    let c = x.n_channels();
    let mut total = 0.0;
    for ch in 0..c {
        let xs = x.channel(ch);
        let ys = y.channel(ch);
        total += pearson(&xs[xr.clone()], &ys[yr.clone()]);
    }
    Ok(total / c as f64)
}

/// Scans lags in `[-max_lag, max_lag]` for the largest absolute
/// channel-averaged correlation. Ties go to the smaller `|lag|`, then to the
/// negative lag.
pub fn tlcc(x: &ClipSeries, y: &ClipSeries, max_lag: usize) -> Result<LagResult> {
    x.require_same_shape(y)?;
    if max_lag >= x.n_frames() {
        return Err(Error::InvalidArgument(format!(
            "max lag {max_lag} must be below the series length {}",
            x.n_frames()
        )));
    }
    let mut best = LagResult {
        peak_lag: 0,
        peak_correlation: lagged_correlation(x, y, 0)?,
    };
    for k in 1..=max_lag as i64 {
        for lag in [-k, k] {
            let r = lagged_correlation(x, y, lag)?;
            if r.abs() > best.peak_correlation.abs() + LAG_TIE_TOL {
                best = LagResult {
                    peak_lag: lag,
                    peak_correlation: r,
                };
            }
        }
    }
    Ok(best)
}

/// Mean and covariance of a cloud of frame vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianModel {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianModel {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let c = mean.len();
        if cov.nrows() != c || cov.ncols() != c {
            return Err(Error::InvalidArgument(format!(
                "covariance is {}x{}, mean has {c} entries",
                cov.nrows(),
                cov.ncols()
            )));
        }
        Ok(GaussianModel { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean, population covariance and `ridge * I`.
pub fn gaussian_fit_with_ridge<'a, I>(vectors: I, ridge: f64) -> Result<GaussianModel>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let rows: Vec<&[f64]> = vectors.into_iter().collect();
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "gaussian fit needs at least 2 vectors, got {}",
            rows.len()
        )));
    }
    let c = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != c) {
        return Err(Error::Length(format!(
            "vector of length {} among length {c}",
            bad.len()
        )));
    }
    let n = rows.len() as f64;
    let mut mu = DVector::zeros(c);
    for r in &rows {
        for (m, v) in mu.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    mu /= n;
    let mut cov = DMatrix::zeros(c, c);
    let mut centred = vec![0.0; c];
    for r in &rows {
        for (d, (v, m)) in centred.iter_mut().zip(r.iter().zip(mu.iter())) {
            *d = v - m;
        }
        for i in 0..c {
            for j in i..c {
                cov[(i, j)] += centred[i] * centred[j];
            }
        }
    }
    for i in 0..c {
        for j in i..c {
            let v = cov[(i, j)] / n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
        cov[(i, i)] += ridge;
    }
    GaussianModel::new(mu, cov)
}

pub fn gaussian_fit<'a, I>(vectors: I) -> Result<GaussianModel>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    gaussian_fit_with_ridge(vectors, DEFAULT_RIDGE)
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Principal square root of a symmetric positive semi-definite matrix via
/// eigendecomposition; negative eigenvalues are clamped to zero.
pub fn sqrtm_psd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::InvalidArgument(
            "matrix square root of a non-square matrix".into(),
        ));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite matrix entry".into()));
    }
    let eig = symmetrize(a).symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(symmetrize(
        &(v * DMatrix::from_diagonal(&roots) * v.transpose()),
    ))
}

fn trace_sqrt_psd(a: &DMatrix<f64>) -> f64 {
    symmetrize(a)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum()
}

/// Fréchet distance between two Gaussians:
/// `|mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1 S2)^(1/2))`.
///
/// The trace of `(S1 S2)^(1/2)` is taken from the symmetric product
/// `S1^(1/2) S2 S1^(1/2)`, which has the same eigenvalues.
pub fn frechet_distance(g1: &GaussianModel, g2: &GaussianModel) -> Result<f64> {
    if g1.dim() != g2.dim() {
        return Err(Error::InvalidArgument(format!(
            "Gaussians of dimension {} and {}",
            g1.dim(),
            g2.dim()
        )));
    }
    if g1.cov.iter().chain(g2.cov.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite covariance".into()));
    }
    let diff = &g1.mean - &g2.mean;
    let root1 = sqrtm_psd(&g1.cov)?;
    let cross = &root1 * &g2.cov * &root1;
    let fd = diff.norm_squared() + g1.cov.trace() + g2.cov.trace() - 2.0 * trace_sqrt_psd(&cross);
    Ok(fd.max(0.0))
}
