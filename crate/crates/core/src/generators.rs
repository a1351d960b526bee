//! Synthetic corpora with planted cluster structure, and simple reference
//! reaction generators used to exercise the evaluation path.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::corpus::{
    write_clip_series, write_manifest, ChannelKind, ChannelSchema, ClipSeries, CorpusManifest,
    ManifestEntry, Role, Split, FACIAL_CHANNELS,
};
use crate::error::{Error, Result};
use crate::labelling::SimilarityMatrix;

/// Low-pass coefficient of the prototype walks.
const SMOOTHING: f64 = 0.8;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub clips: usize,
    pub frames: usize,
    /// Speaker channels: the 25 facial channels plus `channels - 25`
    /// clip-level audio descriptors.
    pub channels: usize,
    pub clusters: usize,
    pub noise: f64,
    pub separation: f64,
    /// Listener delay in frames relative to the cluster template.
    pub lag: i64,
    pub seed: u64,
    pub fps: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            clips: 20,
            frames: 120,
            channels: FACIAL_CHANNELS,
            clusters: 4,
            noise: 0.0,
            separation: 3.0,
            lag: 2,
            seed: 0,
            fps: 25.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.clips < 2 {
            return bad(format!("need at least 2 clips, got {}", self.clips));
        }
        if self.frames < 2 {
            return bad(format!("need at least 2 frames, got {}", self.frames));
        }
        if self.channels < FACIAL_CHANNELS {
            return bad(format!(
                "need at least {FACIAL_CHANNELS} channels, got {}",
                self.channels
            ));
        }
        if self.clusters == 0 || self.clusters > self.clips {
            return bad(format!(
                "clusters must be in 1..={}, got {}",
                self.clips, self.clusters
            ));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad(format!("noise must be >= 0, got {}", self.noise));
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return bad(format!("separation must be > 0, got {}", self.separation));
        }
        if self.lag.unsigned_abs() as usize >= self.frames {
            return bad(format!(
                "|lag| must be < {} frames, got {}",
                self.frames, self.lag
            ));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        Ok(())
    }

    pub fn clip_id(m: usize) -> String {
        format!("clip{m:04}")
    }
}

/// An in-memory synthetic corpus.
#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub clip_ids: Vec<String>,
    pub speakers: Vec<ClipSeries>,
    pub listeners: Vec<ClipSeries>,
    /// Planted cluster of each clip.
    pub clusters: Vec<usize>,
}

impl SynthCorpus {
    pub fn same_cluster(&self, a: usize, b: usize) -> bool {
        self.clusters[a] == self.clusters[b]
    }
}

/// Latent trajectory of `channels` smoothed random walks, row-major.
fn smooth_walk(rng: &mut ChaCha8Rng, frames: usize, channels: usize) -> Vec<f64> {
    let step = 1.5 / (frames as f64).sqrt();
    let mut walk = vec![0.0; channels];
    let mut smooth = vec![0.0; channels];
    let mut out = Vec::with_capacity(frames * channels);
    for _ in 0..frames {
        for c in 0..channels {
            let e: f64 = StandardNormal.sample(rng);
            walk[c] += step * e;
            smooth[c] = SMOOTHING * smooth[c] + (1.0 - SMOOTHING) * walk[c];
            out.push(smooth[c]);
        }
    }
    out
}

fn signs(rng: &mut ChaCha8Rng, channels: usize) -> Vec<f64> {
    (0..channels)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Maps latent values onto the raw facial ranges in place.
fn squash(frame: &mut [f64], schema: &ChannelSchema) {
    let mut expr = Vec::new();
    for (c, v) in frame.iter_mut().enumerate() {
        match schema.kind(c) {
            ChannelKind::ActionUnit => *v = sigmoid(*v),
            ChannelKind::Affect => *v = v.tanh(),
            ChannelKind::Expression => expr.push(c),
            ChannelKind::Audio | ChannelKind::Generic => {}
        }
    }
    if !expr.is_empty() {
        let max = expr
            .iter()
            .map(|&c| frame[c])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &c in &expr {
            frame[c] = (frame[c] - max).exp();
            sum += frame[c];
        }
        for &c in &expr {
            frame[c] /= sum;
        }
    }
}

struct ClusterTemplate {
    speaker: Vec<f64>,
    listener: Vec<f64>,
    audio: Vec<f64>,
}

fn cluster_templates(config: &SynthConfig) -> Vec<ClusterTemplate> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let t = config.frames;
    let audio = config.channels - FACIAL_CHANNELS;
    (0..config.clusters)
        .map(|_| {
            let mut speaker = smooth_walk(&mut rng, t, FACIAL_CHANNELS);
            let offset = signs(&mut rng, FACIAL_CHANNELS);
            for frame in speaker.chunks_exact_mut(FACIAL_CHANNELS) {
                for (v, o) in frame.iter_mut().zip(&offset) {
                    *v += config.separation * o;
                }
            }
            let own = smooth_walk(&mut rng, t, FACIAL_CHANNELS);
            let listener = speaker.iter().zip(&own).map(|(s, o)| 0.5 * s + o).collect();
            let audio = signs(&mut rng, audio)
                .into_iter()
                .map(|s| config.separation * s)
                .collect();
            ClusterTemplate {
                speaker,
                listener,
                audio,
            }
        })
        .collect()
}

fn clip_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
    rng.set_stream(1);
    rng
}

fn noisy(rng: &mut ChaCha8Rng, base: &[f64], sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return base.to_vec();
    }
    base.iter()
        .map(|v| {
            let e: f64 = StandardNormal.sample(rng);
            v + sigma * e
        })
        .collect()
}

/// Builds the corpus in memory. Clip `m` belongs to cluster `m % K` and
/// draws its noise from its own stream keyed by `seed + m`.
pub fn synth_series(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let templates = cluster_templates(config);
    let audio_names: Vec<String> = (0..config.channels - FACIAL_CHANNELS)
        .map(|i| format!("audio{i}"))
        .collect();
    let speaker_schema = ChannelSchema::facial_with_audio(audio_names)?.into_arc();
    let listener_schema = ChannelSchema::facial().into_arc();
    let t = config.frames;

    let clips = (0..config.clips)
        .into_par_iter()
        .map(|m| -> Result<(ClipSeries, ClipSeries)> {
            let cluster = m % config.clusters;
            let tpl = &templates[cluster];
            let mut rng = clip_rng(config.seed, m);
            let id = SynthConfig::clip_id(m);
            let dyad = format!("dyad{m:04}");

            let latent = noisy(&mut rng, &tpl.speaker, config.noise);
            let audio = noisy(&mut rng, &tpl.audio, config.noise);
            let mut speaker = Vec::with_capacity(t * config.channels);
            for frame in latent.chunks_exact(FACIAL_CHANNELS) {
                let start = speaker.len();
                speaker.extend_from_slice(frame);
                squash(&mut speaker[start..], &speaker_schema);
                speaker.extend_from_slice(&audio);
            }

            let mut delayed = Vec::with_capacity(t * FACIAL_CHANNELS);
            for i in 0..t {
                let src = (i as i64 - config.lag).clamp(0, t as i64 - 1) as usize;
                delayed.extend_from_slice(
                    &tpl.listener[src * FACIAL_CHANNELS..(src + 1) * FACIAL_CHANNELS],
                );
            }
            let mut listener = noisy(&mut rng, &delayed, config.noise);
            for frame in listener.chunks_exact_mut(FACIAL_CHANNELS) {
                squash(frame, &listener_schema);
            }

            let s = ClipSeries::new(
                id.clone(),
                dyad.clone(),
                Role::Speaker,
                config.fps,
                Arc::clone(&speaker_schema),
                speaker,
            )?;
            let l = ClipSeries::new(
                id,
                dyad,
                Role::Listener,
                config.fps,
                Arc::clone(&listener_schema),
                listener,
            )?;
            Ok((s, l))
        })
        .collect::<Result<Vec<_>>>()?;

    let (speakers, listeners): (Vec<_>, Vec<_>) = clips.into_iter().unzip();
    Ok(SynthCorpus {
        clip_ids: (0..config.clips).map(SynthConfig::clip_id).collect(),
        speakers,
        listeners,
        clusters: (0..config.clips).map(|m| m % config.clusters).collect(),
    })
}

/// Writes `manifest.csv`, `speaker/<id>.csv`, `listener/<id>.csv` and the
/// planted assignment `clusters.csv` under `dir`.
pub fn synth_corpus(config: &SynthConfig, dir: &Path) -> Result<(CorpusManifest, SynthCorpus)> {
    let corpus = synth_series(config)?;
    let speaker_dir = dir.join("speaker");
    let listener_dir = dir.join("listener");
    for d in [&speaker_dir, &listener_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let entries = corpus
        .speakers
        .par_iter()
        .zip(&corpus.listeners)
        .map(|(s, l)| -> Result<ManifestEntry> {
            let sp = speaker_dir.join(format!("{}.csv", s.clip_id));
            let lp = listener_dir.join(format!("{}.csv", l.clip_id));
            write_clip_series(&sp, s)?;
            write_clip_series(&lp, l)?;
            Ok(ManifestEntry {
                clip_id: s.clip_id.clone(),
                dyad_id: s.dyad_id.clone(),
                speaker_path: sp,
                listener_path: lp,
                fps: config.fps,
                split: Split::Train,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = CorpusManifest { entries };
    write_manifest(&dir.join("manifest.csv"), &manifest, dir)?;

    let mut clusters = String::from("clip_id,cluster\n");
    for (id, k) in corpus.clip_ids.iter().zip(&corpus.clusters) {
        clusters.push_str(&format!("{id},{k}\n"));
    }
    let path = dir.join("clusters.csv");
    fs::write(&path, clusters).map_err(|e| Error::io(&path, e))?;
    Ok((manifest, corpus))
}

/// Copies the speaker's channels named in `reaction_schema` as the reaction.
pub fn baseline_mirror(
    speaker: &ClipSeries,
    reaction_schema: &Arc<ChannelSchema>,
) -> Result<ClipSeries> {
    Ok(speaker
        .select_channels(reaction_schema)?
        .with_role(Role::Listener))
}

/// Clamps facial channels to their raw ranges and renormalizes the
/// expression probabilities.
fn clamp_raw(frame: &mut [f64], schema: &ChannelSchema) {
    let mut expr = Vec::new();
    for (c, v) in frame.iter_mut().enumerate() {
        match schema.kind(c) {
            ChannelKind::ActionUnit => *v = v.clamp(0.0, 1.0),
            ChannelKind::Affect => *v = v.clamp(-1.0, 1.0),
            ChannelKind::Expression => {
                *v = v.clamp(0.0, 1.0);
                expr.push(c);
            }
            ChannelKind::Audio | ChannelKind::Generic => {}
        }
    }
    if !expr.is_empty() {
        let sum: f64 = expr.iter().map(|&c| frame[c]).sum();
        for &c in &expr {
            frame[c] = if sum > 0.0 {
                frame[c] / sum
            } else {
                1.0 / expr.len() as f64
            };
        }
    }
}

/// `alpha` copies of the ground-truth reaction with i.i.d. Gaussian noise of
/// standard deviation `sigma`. With `clamp`, facial channels are mapped
/// back into their raw ranges.
pub fn baseline_gt_jitter(
    gt: &ClipSeries,
    alpha: usize,
    sigma: f64,
    seed: u64,
    clamp: bool,
) -> Result<Vec<ClipSeries>> {
    if alpha == 0 {
        return Err(Error::InvalidArgument("alpha must be >= 1".into()));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(vec![gt.clone(); alpha]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..alpha)
        .map(|_| {
            let mut v = noisy(&mut rng, gt.values(), sigma);
            if clamp {
                for frame in v.chunks_exact_mut(gt.n_channels()) {
                    clamp_raw(frame, gt.schema());
                }
            }
            gt.with_values(v)
        })
        .collect()
}

/// Ground-truth reactions of the `alpha` speaker behaviours nearest to `m`
/// by matrix distance, excluding `m`; ties go to the earlier clip.
pub fn baseline_retrieval(
    m: usize,
    matrix: &SimilarityMatrix,
    reactions: &[ClipSeries],
    alpha: usize,
) -> Result<Vec<ClipSeries>> {
    let n = matrix.len();
    if reactions.len() != n {
        return Err(Error::Length(format!(
            "{} reactions for a {n}-clip matrix",
            reactions.len()
        )));
    }
    if m >= n {
        return Err(Error::InvalidArgument(format!(
            "clip index {m} out of range"
        )));
    }
    if alpha == 0 || alpha > n - 1 {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in 1..={}, got {alpha}",
            n - 1
        )));
    }
    let mut others: Vec<usize> = (0..n).filter(|&j| j != m).collect();
    others.sort_by(|&a, &b| {
        matrix
            .distance(m, a)
            .total_cmp(&matrix.distance(m, b))
            .then(a.cmp(&b))
    });
    Ok(others[..alpha]
        .iter()
        .map(|&j| {
            reactions[j]
                .clone()
                .with_ids(reactions[m].clip_id.clone(), reactions[m].dyad_id.clone())
        })
        .collect())
}

/// Uniform noise reactions shaped like `template`, within raw ranges for
/// facial channels and in `[0, 1]` otherwise.
pub fn baseline_random(template: &ClipSeries, alpha: usize, seed: u64) -> Result<Vec<ClipSeries>> {
    if alpha == 0 {
        return Err(Error::InvalidArgument("alpha must be >= 1".into()));
    }
    let schema = template.schema();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..alpha)
        .map(|_| {
            let mut v = Vec::with_capacity(template.values().len());
            for _ in 0..template.n_frames() {
                let start = v.len();
                for c in 0..schema.len() {
                    v.push(match schema.kind(c) {
                        ChannelKind::Affect => rng.random_range(-1.0..=1.0),
                        _ => rng.random_range(0.0..=1.0),
                    });
                }
                clamp_raw(&mut v[start..], schema);
            }
            template.with_values(v)
        })
        .collect()
}
