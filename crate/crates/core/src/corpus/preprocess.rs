use super::normalize::{apply_normalization, NormalizationParams};
use super::series::{downsample, ClipSeries};
use crate::error::Result;

/// The transforms applied to raw clips before comparison.
///
/// Frame-level views are only normalized; distance views are also pooled
/// in time so that DTW runs on the same grid the similarity matrix used.
#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessor {
    pub normalization: Option<NormalizationParams>,
    pub downsample: usize,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor {
            normalization: None,
            downsample: 1,
        }
    }
}

impl Preprocessor {
    pub fn frame_view(&self, series: &ClipSeries) -> Result<ClipSeries> {
        match &self.normalization {
            Some(p) => apply_normalization(series, p),
            None => Ok(series.clone()),
        }
    }

    pub fn distance_view(&self, series: &ClipSeries) -> Result<ClipSeries> {
        downsample(&self.frame_view(series)?, self.downsample)
    }
}
