use super::series::ClipSeries;
use crate::error::{Error, Result};

/// Channels whose standard deviation falls below this are treated as
/// constant and map to 0 under normalization.
pub const CONSTANT_STD: f64 = 1e-8;

/// Per-channel z-score parameters, keyed by channel name.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationParams {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationParams {
    pub fn is_constant(&self, channel: usize) -> bool {
        self.std[channel] < CONSTANT_STD
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Adds the channels of `other` that are not already present.
    pub fn merge(mut self, other: &NormalizationParams) -> Self {
        for (i, name) in other.names.iter().enumerate() {
            if self.position(name).is_none() {
                self.names.push(name.clone());
                self.mean.push(other.mean[i]);
                self.std.push(other.std[i]);
            }
        }
        self
    }
}

/// Population mean and standard deviation per channel over every frame of
/// every clip, accumulated in clip order.
pub fn fit_normalization(corpus: &[ClipSeries]) -> Result<NormalizationParams> {
    let first = corpus.first().ok_or_else(|| {
        Error::InvalidArgument("cannot fit normalization on an empty corpus".into())
    })?;
    for s in &corpus[1..] {
        first.require_same_schema(s)?;
    }
    let c = first.n_channels();
    let n: usize = corpus.iter().map(ClipSeries::n_frames).sum();
    let n = n as f64;

    let mut sum = vec![0.0; c];
    for s in corpus {
        for frame in s.frames() {
            for (acc, v) in sum.iter_mut().zip(frame) {
                *acc += v;
            }
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();

    let mut sq = vec![0.0; c];
    for s in corpus {
        for frame in s.frames() {
            for ((acc, v), m) in sq.iter_mut().zip(frame).zip(&mean) {
                let d = v - m;
                *acc += d * d;
            }
        }
    }
    let std = sq.iter().map(|s| (s / n).sqrt()).collect();

    Ok(NormalizationParams {
        names: first.schema().names().to_vec(),
        mean,
        std,
    })
}

/// Z-scores each channel; constant channels become 0.
pub fn apply_normalization(
    series: &ClipSeries,
    params: &NormalizationParams,
) -> Result<ClipSeries> {
    let idx = series
        .schema()
        .names()
        .iter()
        .map(|name| {
            params.position(name).ok_or_else(|| {
                Error::Schema(format!(
                    "normalization has no parameters for channel '{name}'"
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(series.values().len());
    for frame in series.frames() {
        for (v, &p) in frame.iter().zip(&idx) {
            out.push(if params.is_constant(p) {
                0.0
            } else {
                (v - params.mean[p]) / params.std[p]
            });
        }
    }
    series.with_values(out)
}
