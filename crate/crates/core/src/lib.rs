//! Appropriate facial reaction labelling and evaluation.
//!
//! The crate turns a corpus of dyadic speaker/listener behaviour clips into
//! an appropriateness index (which real listener reactions are acceptable
//! answers to each speaker behaviour) using multichannel dynamic time
//! warping, and scores generated reaction sets with eight objective
//! metrics covering appropriateness, diversity, realism and synchrony.
//!
//! Modules, bottom-up:
//!
//! * [`corpus`]: channel schema, clip series, manifest and clip CSV I/O,
//!   normalization and temporal pooling.
//! * [`elastic`]: DTW distance kernels, Sakoe-Chiba banding, early
//!   abandoning, LB_Keogh envelope bound and the normalized similarity.
//! * [`labelling`]: all-pairs similarity matrix, thresholding into
//!   appropriateness sets, binary/text persistence.
//! * [`stats`]: CCC, MSE, variance, lagged cross-correlation and Gaussian
//!   Fréchet distance.
//! * [`metrics`]: the metric suite over a generated set.
//! * [`generators`]: synthetic corpora with planted structure and
//!   reference reaction generators.
//! * [`pipeline`]: file-level commands used by the `fmarg` binary.

pub mod corpus;
pub mod elastic;
pub mod error;
pub mod generators;
pub mod labelling;
pub mod metrics;
pub mod pipeline;
pub mod stats;

pub use error::{Error, Result};
