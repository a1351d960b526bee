//! Automatic appropriateness labelling.
//!
//! Every pair of speaker behaviours is compared with DTW. Distances are
//! rescaled against the corpus maximum into similarities, and a behaviour
//! `η` joins the similar-behaviour set of `m` when `sim(m, η) > threshold`.
//! The listener reactions of that set are the appropriate reactions for `m`,
//! so one index serves both roles.
//!
//! The matrix pass is always exact because the corpus maximum needs every
//! distance. [`rethreshold`] covers the case where the maximum is already
//! known and a fixed distance cutoff allows LB_Keogh pruning and early
//! abandoning.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::corpus::ClipSeries;
use crate::elastic::{dtw_banded, lb_keogh, Band, DtwConfig};
use crate::error::{Error, Result};

const MATRIX_MAGIC: &[u8; 8] = b"FMARGSIM";
const MATRIX_VERSION: u32 = 1;
/// magic, version, M, max_dtw, band, downsample, include_audio + pad,
/// config hash, content hash.
const MATRIX_HEADER_LEN: usize = 8 + 4 + 8 + 8 + 8 + 4 + 4 + 32 + 32;
const INDEX_HEADER: &str = "# fmarg appropriateness index v1";

/// How the similarity threshold is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdRule {
    /// Fixed threshold in `(0, 1)`.
    Fixed(f64),
    /// Keep pairs whose similarity is at or above this percentile (in
    /// `(0, 100)`) of all off-diagonal similarities.
    Percentile(f64),
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::Percentile(90.0)
    }
}

impl ThresholdRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdRule::Fixed(t) if t > 0.0 && t < 1.0 => Ok(()),
            ThresholdRule::Fixed(t) => Err(Error::InvalidArgument(format!(
                "threshold {t} outside (0, 1)"
            ))),
            ThresholdRule::Percentile(p) if p > 0.0 && p < 100.0 => Ok(()),
            ThresholdRule::Percentile(p) => Err(Error::InvalidArgument(format!(
                "percentile {p} outside (0, 100)"
            ))),
        }
    }

    fn encode(&self) -> String {
        match self {
            ThresholdRule::Fixed(t) => format!("fixed:{t}"),
            ThresholdRule::Percentile(p) => format!("percentile:{p}"),
        }
    }

    fn decode(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad threshold rule '{s}'")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| Error::Parse(format!("bad threshold rule '{s}'")))?;
        match kind {
            "fixed" => Ok(ThresholdRule::Fixed(value)),
            "percentile" => Ok(ThresholdRule::Percentile(value)),
            _ => Err(Error::Parse(format!("bad threshold rule '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LabelConfig {
    pub threshold: ThresholdRule,
    pub dtw: DtwConfig,
    /// Temporal pooling factor; `None` picks the smallest factor that keeps
    /// clips at or below 128 frames.
    pub downsample: Option<usize>,
    /// Append audio descriptor channels to the speaker signal.
    pub include_audio: bool,
}

/// Preprocessing recorded alongside a matrix so that later stages can
/// reproduce the distance space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatrixSettings {
    pub band: Band,
    pub downsample: usize,
    pub include_audio: bool,
}

impl MatrixSettings {
    pub fn from_config(config: &LabelConfig) -> Self {
        MatrixSettings {
            band: config.dtw.band,
            downsample: config.downsample.unwrap_or(1),
            include_audio: config.include_audio,
        }
    }

    pub fn dtw(&self) -> DtwConfig {
        DtwConfig {
            band: self.band,
            early_abandon: None,
        }
    }

    fn config_hash(&self, clip_ids: &[String]) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"fmarg-matrix-config\n");
        h.update(self.echo().as_bytes());
        for id in clip_ids {
            h.update(b"\n");
            h.update(id.as_bytes());
        }
        h.finalize().into()
    }

    /// Human-readable summary, also the hashed form.
    pub fn echo(&self) -> String {
        let band = match self.band {
            Band::Unbounded => "unbounded".to_string(),
            Band::Radius(r) => r.to_string(),
        };
        format!(
            "band={band};downsample={};include_audio={}",
            self.downsample, self.include_audio
        )
    }
}

/// Dense pairwise DTW distances between speaker behaviours.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    clip_ids: Vec<String>,
    distances: Vec<f64>,
    max_dtw: f64,
    settings: MatrixSettings,
    config_hash: [u8; 32],
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major distances, checking its invariants.
    pub fn from_distances(
        clip_ids: Vec<String>,
        distances: Vec<f64>,
        settings: MatrixSettings,
    ) -> Result<Self> {
        let m = clip_ids.len();
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 clips, got {m}"
            )));
        }
        if distances.len() != m * m {
            return Err(Error::Length(format!(
                "{} distances for M = {m}",
                distances.len()
            )));
        }
        let mut max_dtw = 0.0f64;
        for i in 0..m {
            if distances[i * m + i] != 0.0 {
                return Err(Error::Validation(format!("non-zero diagonal at {i}")));
            }
            for j in 0..m {
                let d = distances[i * m + j];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::Validation(format!(
                        "invalid distance {d} at ({i}, {j})"
                    )));
                }
                if (d - distances[j * m + i]).abs() > 1e-9 * (1.0 + d) {
                    return Err(Error::Validation(format!("asymmetric entry at ({i}, {j})")));
                }
                max_dtw = max_dtw.max(d);
            }
        }
        if max_dtw == 0.0 {
            return Err(Error::Degenerate("all behaviours identical".into()));
        }
        let config_hash = settings.config_hash(&clip_ids);
        Ok(SimilarityMatrix {
            clip_ids,
            distances,
            max_dtw,
            settings,
            config_hash,
        })
    }

    pub fn len(&self) -> usize {
        self.clip_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clip_ids.is_empty()
    }

    pub fn clip_ids(&self) -> &[String] {
        &self.clip_ids
    }

    pub fn max_dtw(&self) -> f64 {
        self.max_dtw
    }

    pub fn settings(&self) -> &MatrixSettings {
        &self.settings
    }

    pub fn config_hash(&self) -> [u8; 32] {
        self.config_hash
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.len() + j]
    }

    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        1.0 - self.distance(i, j) / self.max_dtw
    }

    /// Similarities of the unordered pairs `i < j`, row by row.
    pub fn off_diagonal_similarities(&self) -> Vec<f64> {
        let m = self.len();
        let mut out = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in i + 1..m {
                out.push(self.similarity(i, j));
            }
        }
        out
    }

    fn header_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(MATRIX_HEADER_LEN);
        b.extend_from_slice(MATRIX_MAGIC);
        b.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
        b.extend_from_slice(&(self.len() as u64).to_le_bytes());
        b.extend_from_slice(&self.max_dtw.to_le_bytes());
        let band: i64 = match self.settings.band {
            Band::Unbounded => -1,
            Band::Radius(r) => r as i64,
        };
        b.extend_from_slice(&band.to_le_bytes());
        b.extend_from_slice(&(self.settings.downsample as u32).to_le_bytes());
        b.extend_from_slice(&[self.settings.include_audio as u8, 0, 0, 0]);
        b.extend_from_slice(&self.config_hash);
        b
    }

    fn distance_bytes(&self) -> Vec<u8> {
        self.distances
            .iter()
            .flat_map(|d| d.to_le_bytes())
            .collect()
    }

    /// SHA-256 over the header fields and the distance payload.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.header_bytes());
        h.update(self.distance_bytes());
        h.finalize().into()
    }
}

/// Exact DTW distances for all unordered pairs, computed in parallel and
/// mirrored. The result does not depend on scheduling.
pub fn pairwise_matrix(series: &[ClipSeries], config: &LabelConfig) -> Result<SimilarityMatrix> {
    let m = series.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 clips, got {m}"
        )));
    }
    for s in &series[1..] {
        series[0].require_same_schema(s)?;
    }
    let settings = MatrixSettings::from_config(config);
    let dtw = settings.dtw();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| dtw_banded(&series[i], &series[j], &dtw).map(|r| r.distance))
        .collect::<Result<Vec<f64>>>()?;
    let mut distances = vec![0.0; m * m];
    for (&(i, j), &d) in pairs.iter().zip(&values) {
        distances[i * m + j] = d;
        distances[j * m + i] = d;
    }
    let clip_ids = series.iter().map(|s| s.clip_id.clone()).collect();
    SimilarityMatrix::from_distances(clip_ids, distances, settings)
}

/// For each clip, the sorted indices of clips whose speaker behaviour is
/// similar to it; equivalently, whose listener reactions are appropriate.
#[derive(Clone, Debug, PartialEq)]
pub struct AppropriatenessIndex {
    pub clip_ids: Vec<String>,
    pub members: Vec<Vec<usize>>,
    pub threshold: f64,
    pub rule: ThresholdRule,
    /// Content hash of the matrix the index was built from.
    pub matrix_hash: [u8; 32],
    pub provenance: [u8; 32],
}

impl AppropriatenessIndex {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn appropriate(&self, m: usize) -> &[usize] {
        &self.members[m]
    }

    pub fn contains(&self, m: usize, eta: usize) -> bool {
        self.members[m].binary_search(&eta).is_ok()
    }

    pub fn mean_set_size(&self) -> f64 {
        let total: usize = self.members.iter().map(Vec::len).sum();
        total as f64 / self.len() as f64
    }

    /// Fails with [`Error::Stale`] unless the index was built from `matrix`.
    pub fn check_provenance(&self, matrix: &SimilarityMatrix) -> Result<()> {
        if self.matrix_hash != matrix.content_hash() || self.clip_ids != matrix.clip_ids() {
            return Err(Error::Stale(
                "index was built from a different similarity matrix".into(),
            ));
        }
        Ok(())
    }
}

fn provenance(matrix_hash: &[u8; 32], threshold: f64, rule: &ThresholdRule) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"fmarg-index\n");
    h.update(matrix_hash);
    h.update(threshold.to_le_bytes());
    h.update(rule.encode().as_bytes());
    h.finalize().into()
}

/// Percentile with linear interpolation between order statistics.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Numeric threshold for `rule` on `matrix`.
///
/// A percentile `q` becomes the midpoint between the largest observed
/// off-diagonal similarity below `q` and the smallest at or above it, so the
/// strict `sim > threshold` test keeps exactly the pairs with `sim >= q`.
pub fn resolve_threshold(matrix: &SimilarityMatrix, rule: &ThresholdRule) -> Result<f64> {
    rule.validate()?;
    match *rule {
        ThresholdRule::Fixed(t) => Ok(t),
        ThresholdRule::Percentile(p) => {
            let mut sims = matrix.off_diagonal_similarities();
            sims.sort_by(f64::total_cmp);
            let q = percentile(&sims, p);
            let at_or_above = sims.partition_point(|&s| s < q);
            Ok(match at_or_above {
                0 => 0.0,
                k => 0.5 * (sims[k - 1] + sims[k.min(sims.len() - 1)]),
            })
        }
    }
}

/// Thresholds the matrix into appropriateness sets.
pub fn build_index(
    matrix: &SimilarityMatrix,
    config: &LabelConfig,
) -> Result<AppropriatenessIndex> {
    let threshold = resolve_threshold(matrix, &config.threshold)?;
    Ok(index_with_threshold(matrix, threshold, config.threshold))
}

pub(crate) fn index_with_threshold(
    matrix: &SimilarityMatrix,
    threshold: f64,
    rule: ThresholdRule,
) -> AppropriatenessIndex {
    let m = matrix.len();
    let members = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| matrix.similarity(i, j) > threshold)
                .collect()
        })
        .collect();
    let matrix_hash = matrix.content_hash();
    AppropriatenessIndex {
        clip_ids: matrix.clip_ids().to_vec(),
        members,
        threshold,
        rule,
        matrix_hash,
        provenance: provenance(&matrix_hash, threshold, &rule),
    }
}

/// Counters from a pruned re-thresholding pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PruneStats {
    pub pairs: usize,
    pub pruned_by_bound: usize,
    pub abandoned: usize,
}

/// Recomputes appropriateness sets for a known corpus maximum without
/// building the full matrix: pairs whose LB_Keogh bound already exceeds
/// `(1 - threshold) * max_dtw` are skipped and the remaining DTW runs
/// abandon early at that cutoff. Membership matches [`build_index`] on the
/// same distances.
pub fn rethreshold(
    series: &[ClipSeries],
    max_dtw: f64,
    threshold: f64,
    band: Band,
) -> Result<(Vec<Vec<usize>>, PruneStats)> {
    if max_dtw.is_nan() || max_dtw <= 0.0 {
        return Err(Error::InvalidArgument("max_dtw must be positive".into()));
    }
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside [0, 1)"
        )));
    }
    let m = series.len();
    // Slack keeps rounding in the cutoff from pruning a true member.
    let cutoff = (1.0 - threshold) * max_dtw * (1.0 + 1e-9) + 1e-12;
    let dtw = DtwConfig {
        band,
        early_abandon: Some(cutoff),
    };
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    #[derive(Clone, Copy)]
    enum Outcome {
        Bound,
        Abandoned,
        Distance(f64),
    }
    let outcomes = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<Outcome> {
            if lb_keogh(&series[i], &series[j], band)? > cutoff
                || lb_keogh(&series[j], &series[i], band)? > cutoff
            {
                return Ok(Outcome::Bound);
            }
            let r = dtw_banded(&series[i], &series[j], &dtw)?;
            Ok(if r.exact {
                Outcome::Distance(r.distance)
            } else {
                Outcome::Abandoned
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut members: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
    let mut stats = PruneStats {
        pairs: pairs.len(),
        ..Default::default()
    };
    for (&(i, j), outcome) in pairs.iter().zip(outcomes) {
        match outcome {
            Outcome::Bound => stats.pruned_by_bound += 1,
            Outcome::Abandoned => stats.abandoned += 1,
            Outcome::Distance(d) => {
                if 1.0 - d / max_dtw > threshold {
                    members[i].push(j);
                    members[j].push(i);
                }
            }
        }
    }
    for set in &mut members {
        set.sort_unstable();
    }
    Ok((members, stats))
}

fn ids_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".ids");
    PathBuf::from(p)
}

/// Writes the binary matrix and a `<path>.ids` sidecar of clip ids.
pub fn save_matrix(path: &Path, matrix: &SimilarityMatrix) -> Result<()> {
    let mut bytes = matrix.header_bytes();
    bytes.extend_from_slice(&matrix.content_hash());
    bytes.extend_from_slice(&matrix.distance_bytes());
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let mut ids = matrix.clip_ids.join("\n");
    ids.push('\n');
    let sidecar = ids_path(path);
    fs::write(&sidecar, ids).map_err(|e| Error::io(sidecar, e))
}

pub fn load_matrix(path: &Path) -> Result<SimilarityMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let where_ = path.display();
    if bytes.len() < MATRIX_HEADER_LEN {
        return Err(Error::Parse(format!("{where_}: truncated matrix header")));
    }
    if &bytes[..8] != MATRIX_MAGIC {
        return Err(Error::Parse(format!(
            "{where_}: not a similarity matrix file"
        )));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != MATRIX_VERSION {
        return Err(Error::Parse(format!(
            "{where_}: unsupported matrix version {version}"
        )));
    }
    let m = u64_at(12) as usize;
    let max_dtw = f64::from_bits(u64_at(20));
    let band = match u64_at(28) as i64 {
        -1 => Band::Unbounded,
        r if r >= 0 => Band::Radius(r as usize),
        r => return Err(Error::Parse(format!("{where_}: bad band radius {r}"))),
    };
    let downsample = u32_at(36) as usize;
    let include_audio = match bytes[40] {
        0 => false,
        1 => true,
        b => return Err(Error::Parse(format!("{where_}: bad audio flag {b}"))),
    };
    let config_hash: [u8; 32] = bytes[44..76].try_into().unwrap();
    let stored_content: [u8; 32] = bytes[76..108].try_into().unwrap();
    let expected_len = m
        .checked_mul(m)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(MATRIX_HEADER_LEN));
    if expected_len != Some(bytes.len()) {
        return Err(Error::Parse(format!(
            "{where_}: header says M = {m} but payload has {} bytes",
            bytes.len() - MATRIX_HEADER_LEN
        )));
    }
    let distances: Vec<f64> = bytes[MATRIX_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let sidecar = ids_path(path);
    let ids_text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let clip_ids: Vec<String> = ids_text.lines().map(str::to_string).collect();
    if clip_ids.len() != m {
        return Err(Error::Parse(format!(
            "{}: {} clip ids for M = {m}",
            sidecar.display(),
            clip_ids.len()
        )));
    }
    let settings = MatrixSettings {
        band,
        downsample,
        include_audio,
    };
    let matrix = SimilarityMatrix::from_distances(clip_ids, distances, settings)
        .map_err(|e| Error::Stale(format!("{where_}: {e}")))?;
    if matrix.config_hash != config_hash {
        return Err(Error::Stale(format!(
            "{where_}: config hash does not match clip ids or settings"
        )));
    }
    if matrix.max_dtw.to_bits() != max_dtw.to_bits() {
        return Err(Error::Stale(format!(
            "{where_}: recorded max_dtw differs from payload maximum"
        )));
    }
    if matrix.content_hash() != stored_content {
        return Err(Error::Stale(format!("{where_}: content hash mismatch")));
    }
    Ok(matrix)
}

fn index_body(index: &AppropriatenessIndex) -> String {
    let mut body = String::new();
    for (id, set) in index.clip_ids.iter().zip(&index.members) {
        let ids: Vec<&str> = set.iter().map(|&j| index.clip_ids[j].as_str()).collect();
        let _ = writeln!(body, "{id}: {}", ids.join(","));
    }
    body
}

fn body_digest(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

/// Line-oriented text: a `#` header with the resolved threshold and hashes,
/// then `clip_id: id1,id2,...` per clip in corpus order.
pub fn save_index(path: &Path, index: &AppropriatenessIndex) -> Result<()> {
    let body = index_body(index);
    let mut out = String::new();
    let _ = writeln!(out, "{INDEX_HEADER}");
    let _ = writeln!(out, "# threshold={}", index.threshold);
    let _ = writeln!(out, "# rule={}", index.rule.encode());
    let _ = writeln!(out, "# matrix={}", hex::encode(index.matrix_hash));
    let _ = writeln!(out, "# provenance={}", hex::encode(index.provenance));
    let _ = writeln!(out, "# digest={}", body_digest(&body));
    out.push_str(&body);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn parse_hash(s: &str, what: &str) -> Result<[u8; 32]> {
    hex::decode(s)
        .ok()
        .and_then(|v| v.try_into().ok())
        .ok_or_else(|| Error::Parse(format!("bad {what} hash")))
}

pub fn load_index(path: &Path) -> Result<AppropriatenessIndex> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let where_ = path.display();
    let mut lines = text.lines();
    if lines.next() != Some(INDEX_HEADER) {
        return Err(Error::Parse(format!(
            "{where_}: not an appropriateness index"
        )));
    }
    let mut field = |key: &str| -> Result<String> {
        let line = lines.next().unwrap_or_default();
        line.strip_prefix("# ")
            .and_then(|l| l.strip_prefix(key))
            .and_then(|l| l.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| Error::Parse(format!("{where_}: missing '{key}' header")))
    };
    let threshold: f64 = field("threshold")?
        .parse()
        .map_err(|_| Error::Parse(format!("{where_}: bad threshold")))?;
    let rule = ThresholdRule::decode(&field("rule")?)?;
    let matrix_hash = parse_hash(&field("matrix")?, "matrix")?;
    let stored_provenance = parse_hash(&field("provenance")?, "provenance")?;
    let digest = field("digest")?;

    let body: String = lines.map(|l| format!("{l}\n")).collect();
    if body_digest(&body) != digest {
        return Err(Error::Stale(format!("{where_}: index body hash mismatch")));
    }
    if provenance(&matrix_hash, threshold, &rule) != stored_provenance {
        return Err(Error::Stale(format!("{where_}: provenance hash mismatch")));
    }

    let mut clip_ids = Vec::new();
    let mut raw_sets = Vec::new();
    for (n, line) in body.lines().enumerate() {
        let (id, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("{where_}: body line {} lacks ':'", n + 1)))?;
        clip_ids.push(id.to_string());
        raw_sets.push(
            rest.trim()
                .split(',')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect::<Vec<_>>(),
        );
    }
    let members = raw_sets
        .iter()
        .map(|set| {
            let mut idx = set
                .iter()
                .map(|id| {
                    clip_ids.iter().position(|c| c == id).ok_or_else(|| {
                        Error::Parse(format!("{where_}: unknown clip id '{id}' in a set"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            idx.sort_unstable();
            Ok(idx)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AppropriatenessIndex {
        clip_ids,
        members,
        threshold,
        rule,
        matrix_hash,
        provenance: stored_provenance,
    })
}
