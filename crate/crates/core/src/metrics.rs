//! Objective metrics for generated listener reactions.
//!
//! Appropriateness: FRDist (DTW to the closest appropriate reaction),
//! FRCorr (CCC with the most concordant appropriate reaction) and ACC
//! (share of generations similar enough to some appropriate reaction).
//! Diversity: FRVar (within-sequence variance), FRDiv (pairwise MSE among
//! the generations for one speaker behaviour) and FRDvs (MSE between
//! generations for different behaviours). Realism: FRRea (Fréchet distance
//! between Gaussian fits of generated and appropriate frames). Synchrony:
//! FRSyn (absolute peak lag of the cross-correlation with the speaker).
//!
//! Per-clip sums run over the α generations; corpus values average the
//! per-clip sums over clips.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::corpus::{ClipSeries, Preprocessor};
use crate::elastic::{dtw_banded, DtwConfig};
use crate::error::{Error, Result};
use crate::labelling::{AppropriatenessIndex, SimilarityMatrix};
use crate::stats::{
    ccc_multichannel, frechet_distance, gaussian_fit_with_ridge, mse, series_variance, tlcc,
    DEFAULT_RIDGE,
};

pub const METRIC_NAMES: [&str; 8] = [
    "FRDist", "FRCorr", "ACC", "FRVar", "FRDiv", "FRDvs", "FRRea", "FRSyn",
];

/// `alpha` generated reactions for each speaker behaviour, in corpus order.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedSet {
    alpha: usize,
    items: Vec<Vec<ClipSeries>>,
}

impl GeneratedSet {
    pub fn new(items: Vec<Vec<ClipSeries>>) -> Result<Self> {
        let first = items
            .first()
            .and_then(|g| g.first())
            .ok_or_else(|| Error::InvalidArgument("generated set is empty".into()))?;
        let alpha = items[0].len();
        for (m, gens) in items.iter().enumerate() {
            if gens.len() != alpha {
                return Err(Error::Validation(format!(
                    "clip {m} has {} generations, expected {alpha}",
                    gens.len()
                )));
            }
            for g in gens {
                first.require_same_schema(g)?;
            }
        }
        Ok(GeneratedSet { alpha, items })
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn generations(&self, m: usize) -> &[ClipSeries] {
        &self.items[m]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[ClipSeries]> {
        self.items.iter().map(Vec::as_slice)
    }

    /// Applies `f` to every generation, preserving order.
    pub fn try_map<F>(&self, f: F) -> Result<GeneratedSet>
    where
        F: Fn(&ClipSeries) -> Result<ClipSeries> + Sync,
    {
        let items = self
            .items
            .par_iter()
            .map(|gens| gens.iter().map(&f).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        GeneratedSet::new(items)
    }
}

fn check_coverage(
    gen: &GeneratedSet,
    index: &AppropriatenessIndex,
    corpus_len: usize,
) -> Result<()> {
    if gen.len() != index.len() || gen.len() != corpus_len {
        return Err(Error::Length(format!(
            "generated set covers {} clips, index {}, corpus {corpus_len}",
            gen.len(),
            index.len()
        )));
    }
    Ok(())
}

fn mean_over_clips(terms: &[f64]) -> f64 {
    terms.iter().sum::<f64>() / terms.len() as f64
}

fn appropriate_set(index: &AppropriatenessIndex, m: usize) -> Result<&[usize]> {
    let set = index.appropriate(m);
    if set.is_empty() {
        return Err(Error::Validation(format!(
            "appropriate set of clip '{}' is empty",
            index.clip_ids[m]
        )));
    }
    Ok(set)
}

fn dist_term(
    gens: &[ClipSeries],
    set: &[usize],
    reactions: &[ClipSeries],
    dtw: &DtwConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for p in gens {
        let mut best = f64::INFINITY;
        for &eta in set {
            best = best.min(dtw_banded(p, &reactions[eta], dtw)?.distance);
        }
        total += best;
    }
    Ok(total)
}

fn corr_term(gens: &[ClipSeries], set: &[usize], reactions: &[ClipSeries]) -> Result<f64> {
    let mut total = 0.0;
    for p in gens {
        let mut best = f64::NEG_INFINITY;
        for &eta in set {
            best = best.max(ccc_multichannel(p, &reactions[eta])?);
        }
        total += best;
    }
    Ok(total)
}

/// Similarity of a generated reaction; distances beyond the corpus maximum
/// count as similarity 0.
fn generated_similarity(distance: f64, max_dtw: f64) -> f64 {
    if distance >= max_dtw {
        0.0
    } else {
        1.0 - distance / max_dtw
    }
}

fn acc_term(
    gens: &[ClipSeries],
    set: &[usize],
    reactions: &[ClipSeries],
    dtw: &DtwConfig,
    max_dtw: f64,
    threshold: f64,
) -> Result<usize> {
    let mut count = 0;
    for p in gens {
        let mut best = f64::INFINITY;
        for &eta in set {
            best = best.min(dtw_banded(p, &reactions[eta], dtw)?.distance);
        }
        if generated_similarity(best, max_dtw) > threshold {
            count += 1;
        }
    }
    Ok(count)
}

fn smse_term(gens: &[ClipSeries]) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            total += mse(&gens[i], &gens[j])?;
        }
    }
    Ok(total)
}

fn pooled_fit<'a, I>(series: I, ridge: f64) -> Result<crate::stats::GaussianModel>
where
    I: IntoIterator<Item = &'a ClipSeries>,
{
    gaussian_fit_with_ridge(series.into_iter().flat_map(|s| s.frames()), ridge)
        .map_err(|e| Error::Degenerate(format!("realism needs at least 2 frames: {e}")))
}

fn rea_term(
    gens: &[ClipSeries],
    set: &[usize],
    reactions: &[ClipSeries],
    ridge: f64,
) -> Result<f64> {
    let g = pooled_fit(gens, ridge)?;
    let r = pooled_fit(set.iter().map(|&eta| &reactions[eta]), ridge)?;
    frechet_distance(&g, &r)
}

fn syn_term(gens: &[ClipSeries], speaker: &ClipSeries, max_lag: usize) -> Result<f64> {
    let mut total = 0.0;
    for p in gens {
        total += tlcc(p, speaker, max_lag)?.peak_lag.unsigned_abs() as f64;
    }
    Ok(total)
}

/// FRDist: per clip, the sum over generations of the DTW distance to the
/// closest appropriate reaction; averaged over clips.
pub fn fr_dist(
    gen: &GeneratedSet,
    index: &AppropriatenessIndex,
    reactions: &[ClipSeries],
    dtw: &DtwConfig,
) -> Result<f64> {
    check_coverage(gen, index, reactions.len())?;
    let terms = (0..gen.len())
        .into_par_iter()
        .map(|m| {
            dist_term(
                gen.generations(m),
                appropriate_set(index, m)?,
                reactions,
                dtw,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_over_clips(&terms))
}

/// FRCorr: per clip, the sum over generations of the best CCC against an
/// appropriate reaction; averaged over clips.
pub fn fr_corr(
    gen: &GeneratedSet,
    index: &AppropriatenessIndex,
    reactions: &[ClipSeries],
) -> Result<f64> {
    check_coverage(gen, index, reactions.len())?;
    let terms = (0..gen.len())
        .into_par_iter()
        .map(|m| corr_term(gen.generations(m), appropriate_set(index, m)?, reactions))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_over_clips(&terms))
}

/// ACC: fraction of generations whose best similarity to a member of their
/// own appropriate set exceeds the index threshold. Reactions outside the
/// set are never consulted. `reactions` must be in the matrix's distance
/// space.
pub fn acc(
    gen: &GeneratedSet,
    index: &AppropriatenessIndex,
    matrix: &SimilarityMatrix,
    reactions: &[ClipSeries],
) -> Result<f64> {
    index.check_provenance(matrix)?;
    check_coverage(gen, index, reactions.len())?;
    let dtw = matrix.settings().dtw();
    let counts = (0..gen.len())
        .into_par_iter()
        .map(|m| {
            acc_term(
                gen.generations(m),
                appropriate_set(index, m)?,
                reactions,
                &dtw,
                matrix.max_dtw(),
                index.threshold,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let total: usize = counts.iter().sum();
    Ok(total as f64 / (gen.len() * gen.alpha()) as f64)
}

/// FRVar: mean per-sequence variance over all generations.
pub fn fr_var(gen: &GeneratedSet) -> Result<f64> {
    let mut total = 0.0;
    for gens in gen.iter() {
        for p in gens {
            total += series_variance(p)?;
        }
    }
    Ok(total / (gen.len() * gen.alpha()) as f64)
}

/// FRDiv: per clip, the sum of MSE over unordered pairs of generations;
/// averaged over clips. Zero when `alpha == 1`.
pub fn fr_div(gen: &GeneratedSet) -> Result<f64> {
    let mut total = 0.0;
    for gens in gen.iter() {
        total += smse_term(gens)?;
    }
    Ok(total / gen.len() as f64)
}

/// FRDvs: MSE between generations with the same generation index for
/// different speaker behaviours, averaged over unordered clip pairs and
/// generation indices.
pub fn fr_dvs(gen: &GeneratedSet) -> Result<f64> {
    let m = gen.len();
    if m < 2 {
        return Err(Error::InvalidArgument(
            "FRDvs needs at least 2 clips".into(),
        ));
    }
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
        .collect();
    let per_pair = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut s = 0.0;
            for i in 0..gen.alpha() {
                s += mse(&gen.generations(a)[i], &gen.generations(b)[i])?;
            }
            Ok(s)
        })
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = per_pair.iter().sum();
    Ok(total / (gen.alpha() * pairs.len()) as f64)
}

/// FRRea: per clip, the Fréchet distance between Gaussian fits of the
/// pooled generated frames and the pooled appropriate-reaction frames;
/// averaged over clips.
pub fn fr_rea(
    gen: &GeneratedSet,
    index: &AppropriatenessIndex,
    reactions: &[ClipSeries],
    ridge: f64,
) -> Result<f64> {
    check_coverage(gen, index, reactions.len())?;
    let terms = (0..gen.len())
        .into_par_iter()
        .map(|m| {
            rea_term(
                gen.generations(m),
                appropriate_set(index, m)?,
                reactions,
                ridge,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_over_clips(&terms))
}

/// Corpus-pooled realism: one Fréchet distance between all generated frames
/// and all reaction frames.
pub fn fr_rea_pooled(gen: &GeneratedSet, reactions: &[ClipSeries], ridge: f64) -> Result<f64> {
    let g = pooled_fit(gen.iter().flatten(), ridge)?;
    let r = pooled_fit(reactions, ridge)?;
    frechet_distance(&g, &r)
}

/// FRSyn: per clip, the sum over generations of `|peak lag|` of the
/// cross-correlation with the speaker's facial signal; averaged over clips.
pub fn fr_syn(gen: &GeneratedSet, speakers: &[ClipSeries], max_lag: usize) -> Result<f64> {
    if gen.len() != speakers.len() {
        return Err(Error::Length(format!(
            "{} generated clips for {} speakers",
            gen.len(),
            speakers.len()
        )));
    }
    let terms = (0..gen.len())
        .into_par_iter()
        .map(|m| syn_term(gen.generations(m), &speakers[m], max_lag))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_over_clips(&terms))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricConfig {
    /// Largest lag scanned by the synchrony metric, in frames.
    pub max_lag: usize,
    /// Ridge added to covariance fits in the realism metric.
    pub ridge: f64,
    /// Replace per-clip realism with one corpus-pooled Fréchet distance.
    pub pooled_realism: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            max_lag: 10,
            ridge: DEFAULT_RIDGE,
            pooled_realism: false,
        }
    }
}

/// Raw corpus clips for evaluation plus the transforms that map them into
/// the labelling space.
#[derive(Clone, Debug)]
pub struct EvalCorpus {
    pub clip_ids: Vec<String>,
    /// Speaker facial channels, raw.
    pub speakers: Vec<ClipSeries>,
    /// Listener reactions, raw.
    pub listeners: Vec<ClipSeries>,
    pub preprocess: Preprocessor,
}

/// Per-clip terms behind the corpus values.
#[derive(Clone, Debug, PartialEq)]
pub struct ClipBreakdown {
    pub clip_id: String,
    pub appropriate: usize,
    pub dist: f64,
    pub corr: f64,
    pub accepted: usize,
    pub variance: f64,
    pub smse: f64,
    pub realism: f64,
    pub synchrony: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub fr_dist: f64,
    pub fr_corr: f64,
    pub acc: f64,
    pub fr_var: f64,
    pub fr_div: f64,
    pub fr_dvs: f64,
    pub fr_rea: f64,
    pub fr_syn: f64,
    pub per_clip: Vec<ClipBreakdown>,
    pub threshold: f64,
    pub max_dtw: f64,
    pub alpha: usize,
    pub max_lag: usize,
    pub config: MetricConfig,
    pub warnings: Vec<String>,
}

impl MetricReport {
    pub fn values(&self) -> [(&'static str, f64); 8] {
        [
            ("FRDist", self.fr_dist),
            ("FRCorr", self.fr_corr),
            ("ACC", self.acc),
            ("FRVar", self.fr_var),
            ("FRDiv", self.fr_div),
            ("FRDvs", self.fr_dvs),
            ("FRRea", self.fr_rea),
            ("FRSyn", self.fr_syn),
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v)
    }

    /// `metric.<name>=<value>` lines followed by `config.<key>=<value>`.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (name, v) in self.values() {
            let _ = writeln!(out, "metric.{name}={v}");
        }
        let _ = writeln!(out, "config.threshold={}", self.threshold);
        let _ = writeln!(out, "config.max_dtw={}", self.max_dtw);
        let _ = writeln!(out, "config.alpha={}", self.alpha);
        let _ = writeln!(out, "config.max_lag={}", self.max_lag);
        let _ = writeln!(out, "config.ridge={}", self.config.ridge);
        let _ = writeln!(out, "config.pooled_realism={}", self.config.pooled_realism);
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8}  {:>14}", "metric", "value");
        let _ = writeln!(out, "{:-<8}  {:->14}", "", "");
        for (name, v) in self.values() {
            let _ = writeln!(out, "{name:<8}  {v:>14.6}");
        }
        let _ = writeln!(
            out,
            "\nthreshold={} max_dtw={} alpha={} max_lag={}",
            self.threshold, self.max_dtw, self.alpha, self.max_lag
        );
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }

    pub fn per_clip_csv(&self) -> String {
        let mut out = String::from(
            "clip_id,appropriate,dist,corr,accepted,variance,smse,realism,synchrony\n",
        );
        for c in &self.per_clip {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.clip_id,
                c.appropriate,
                c.dist,
                c.corr,
                c.accepted,
                c.variance,
                c.smse,
                c.realism,
                c.synchrony
            );
        }
        out
    }
}

/// Computes all eight metrics. Distance-based metrics run in the matrix's
/// pooled space, frame-level metrics on normalized full-rate frames.
pub fn evaluate_all(
    gen: &GeneratedSet,
    index: &AppropriatenessIndex,
    matrix: &SimilarityMatrix,
    corpus: &EvalCorpus,
    config: &MetricConfig,
) -> Result<MetricReport> {
    let m = corpus.listeners.len();
    if m == 0 {
        return Err(Error::InvalidArgument("empty corpus".into()));
    }
    if corpus.speakers.len() != m || corpus.clip_ids.len() != m {
        return Err(Error::Length(
            "corpus speaker/listener counts differ".into(),
        ));
    }
    index.check_provenance(matrix)?;
    if matrix.clip_ids() != corpus.clip_ids.as_slice() {
        return Err(Error::Stale(
            "matrix clip order differs from the corpus".into(),
        ));
    }
    check_coverage(gen, index, m)?;
    for (mi, gens) in gen.iter().enumerate() {
        for p in gens {
            p.require_same_shape(&corpus.listeners[mi]).map_err(|e| {
                Error::Validation(format!(
                    "generation for clip '{}': {e}",
                    corpus.clip_ids[mi]
                ))
            })?;
        }
    }

    let pre = &corpus.preprocess;
    let map = |v: &[ClipSeries], f: &(dyn Fn(&ClipSeries) -> Result<ClipSeries> + Sync)| {
        v.par_iter().map(f).collect::<Result<Vec<_>>>()
    };
    let listeners_frame = map(&corpus.listeners, &|s| pre.frame_view(s))?;
    let listeners_dist = map(&corpus.listeners, &|s| pre.distance_view(s))?;
    let gen_schema = gen.generations(0)[0].schema().clone();
    let speakers_frame = map(&corpus.speakers, &|s| {
        pre.frame_view(&s.select_channels(&gen_schema)?)
    })?;
    let gen_frame = gen.try_map(|s| pre.frame_view(s))?;
    let gen_dist = gen.try_map(|s| pre.distance_view(s))?;

    let dtw = matrix.settings().dtw();
    let per_clip = (0..m)
        .into_par_iter()
        .map(|mi| -> Result<ClipBreakdown> {
            let set = appropriate_set(index, mi)?;
            let frames = gen_frame.generations(mi);
            let dists = gen_dist.generations(mi);
            let mut variance = 0.0;
            for p in frames {
                variance += series_variance(p)?;
            }
            Ok(ClipBreakdown {
                clip_id: corpus.clip_ids[mi].clone(),
                appropriate: set.len(),
                dist: dist_term(dists, set, &listeners_dist, &dtw)?,
                corr: corr_term(frames, set, &listeners_frame)?,
                accepted: acc_term(
                    dists,
                    set,
                    &listeners_dist,
                    &dtw,
                    matrix.max_dtw(),
                    index.threshold,
                )?,
                variance,
                smse: smse_term(frames)?,
                realism: if config.pooled_realism {
                    f64::NAN
                } else {
                    rea_term(frames, set, &listeners_frame, config.ridge)?
                },
                synchrony: syn_term(frames, &speakers_frame[mi], config.max_lag)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let alpha = gen.alpha();
    let mf = m as f64;
    let sum = |f: fn(&ClipBreakdown) -> f64| per_clip.iter().map(f).sum::<f64>();
    let fr_rea = if config.pooled_realism {
        fr_rea_pooled(&gen_frame, &listeners_frame, config.ridge)?
    } else {
        sum(|c| c.realism) / mf
    };
    let fr_dvs = if m >= 2 { fr_dvs(&gen_frame)? } else { 0.0 };
    let mut warnings = Vec::new();
    if alpha == 1 {
        warnings.push("alpha = 1: FRDiv is 0 by definition".to_string());
    }
    if m < 2 {
        warnings.push("single clip: FRDvs is 0 by definition".to_string());
    }
    let accepted: usize = per_clip.iter().map(|c| c.accepted).sum();

    Ok(MetricReport {
        fr_dist: sum(|c| c.dist) / mf,
        fr_corr: sum(|c| c.corr) / mf,
        acc: accepted as f64 / (m * alpha) as f64,
        fr_var: sum(|c| c.variance) / (mf * alpha as f64),
        fr_div: sum(|c| c.smse) / mf,
        fr_dvs,
        fr_rea,
        fr_syn: sum(|c| c.synchrony) / mf,
        per_clip,
        threshold: index.threshold,
        max_dtw: matrix.max_dtw(),
        alpha,
        max_lag: config.max_lag,
        config: *config,
        warnings,
    })
}
