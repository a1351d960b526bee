//! Dyadic behaviour corpus: channel layout, per-clip time-series, manifest
//! and clip file I/O, and the preprocessing applied before distance
//! computation (z-normalization and mean pooling).

mod manifest;
mod normalize;
mod preprocess;
mod schema;
mod series;

pub use manifest::{load_manifest, write_manifest, CorpusManifest, ManifestEntry, Split};
pub use normalize::{apply_normalization, fit_normalization, NormalizationParams, CONSTANT_STD};
pub use preprocess::Preprocessor;
pub use schema::{ChannelKind, ChannelSchema, ACTION_UNITS, AFFECT, EXPRESSIONS, FACIAL_CHANNELS};
pub use series::{
    default_downsample_factor, downsample, load_clip_series, read_clip_csv, write_clip_series,
    ClipSeries, RangeCheck, Role, MAX_POOLED_FRAMES,
};
