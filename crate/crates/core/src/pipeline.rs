//! File-level commands: corpus loading, similarity, labelling, evaluation,
//! baselines and synthesis. Each command returns a short summary for the
//! console.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::corpus::{
    default_downsample_factor, fit_normalization, load_manifest, read_clip_csv, write_clip_series,
    ChannelSchema, ClipSeries, CorpusManifest, NormalizationParams, Preprocessor, RangeCheck, Role,
};
use crate::elastic::{Band, DtwConfig};
use crate::error::{Error, Result};
use crate::generators::{
    baseline_gt_jitter, baseline_mirror, baseline_random, baseline_retrieval, synth_corpus,
    SynthConfig,
};
use crate::labelling::{
    build_index, load_index, load_matrix, pairwise_matrix, save_index, save_matrix, LabelConfig,
    MatrixSettings, SimilarityMatrix, ThresholdRule,
};
use crate::metrics::{evaluate_all, EvalCorpus, GeneratedSet, MetricConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    Mirror,
    GtJitter,
    Retrieval,
    Random,
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mirror" => Ok(BaselineKind::Mirror),
            "gt_jitter" | "gt-jitter" => Ok(BaselineKind::GtJitter),
            "retrieval" => Ok(BaselineKind::Retrieval),
            "random" => Ok(BaselineKind::Random),
            other => Err(Error::InvalidArgument(format!(
                "unknown baseline kind '{other}' (expected mirror, gt_jitter, retrieval or random)"
            ))),
        }
    }
}

/// Resolved settings for one run. Populated from defaults, then a config
/// file, then command-line flags, all through [`RunConfig::set`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub gen_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threshold: ThresholdRule,
    pub band: Band,
    pub downsample: Option<usize>,
    pub include_audio: bool,
    pub max_lag: usize,
    pub ridge: f64,
    pub pooled_realism: bool,
    pub alpha: Option<usize>,
    pub noise: f64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let metric = MetricConfig::default();
        RunConfig {
            manifest: None,
            matrix: None,
            index: None,
            gen_dir: None,
            out: None,
            threshold: ThresholdRule::default(),
            band: Band::Unbounded,
            downsample: None,
            include_audio: false,
            max_lag: metric.max_lag,
            ridge: metric.ridge,
            pooled_realism: metric.pooled_realism,
            alpha: None,
            noise: 0.1,
            seed: 0,
            threads: None,
            synth: SynthConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::InvalidArgument(format!(
            "bad value '{value}' for '{key}'"
        ))),
    }
}

fn positive(key: &str, value: &str) -> Result<usize> {
    let v: usize = parse(key, value)?;
    if v == 0 {
        return Err(Error::InvalidArgument(format!("'{key}' must be >= 1")));
    }
    Ok(v)
}

impl RunConfig {
    /// Sets one key. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "manifest" => self.manifest = Some(value.into()),
            "matrix" => self.matrix = Some(value.into()),
            "index" => self.index = Some(value.into()),
            "gen_dir" => self.gen_dir = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "threshold" => {
                let rule = ThresholdRule::Fixed(parse(k, value)?);
                rule.validate()?;
                self.threshold = rule;
            }
            "percentile" => {
                let rule = ThresholdRule::Percentile(parse(k, value)?);
                rule.validate()?;
                self.threshold = rule;
            }
            "band" => {
                self.band = match value {
                    "unbounded" | "none" => Band::Unbounded,
                    v => Band::Radius(parse(k, v)?),
                }
            }
            "downsample" => {
                self.downsample = match value {
                    "auto" => None,
                    v => Some(positive(k, v)?),
                }
            }
            "include_audio" => self.include_audio = parse_bool(k, value)?,
            "max_lag" => self.max_lag = parse(k, value)?,
            "ridge" => {
                let r: f64 = parse(k, value)?;
                if !(r.is_finite() && r >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "'ridge' must be >= 0, got {r}"
                    )));
                }
                self.ridge = r;
            }
            "pooled_realism" => self.pooled_realism = parse_bool(k, value)?,
            "alpha" => self.alpha = Some(positive(k, value)?),
            "noise" => {
                let s: f64 = parse(k, value)?;
                if !(s.is_finite() && s >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "'noise' must be >= 0, got {s}"
                    )));
                }
                self.noise = s;
            }
            "seed" => {
                self.seed = parse(k, value)?;
                self.synth.seed = self.seed;
            }
            "threads" => self.threads = Some(positive(k, value)?),
            "clips" => self.synth.clips = parse(k, value)?,
            "frames" => self.synth.frames = parse(k, value)?,
            "channels" => self.synth.channels = parse(k, value)?,
            "clusters" => self.synth.clusters = parse(k, value)?,
            "within_noise" => self.synth.noise = parse(k, value)?,
            "separation" => self.synth.separation = parse(k, value)?,
            "lag" => self.synth.lag = parse(k, value)?,
            "fps" => self.synth.fps = parse(k, value)?,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key '{key}'"
                )))
            }
        }
        Ok(())
    }

    /// Applies a flat `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!(
                    "{}: line {}: expected key=value",
                    path.display(),
                    n + 1
                ))
            })?;
            self.set(key, value)
                .map_err(|e| Error::Parse(format!("{}: line {}: {e}", path.display(), n + 1)))?;
        }
        Ok(())
    }

    fn label_config(&self) -> LabelConfig {
        LabelConfig {
            threshold: self.threshold,
            dtw: DtwConfig {
                band: self.band,
                early_abandon: None,
            },
            downsample: self.downsample,
            include_audio: self.include_audio,
        }
    }

    fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            max_lag: self.max_lag,
            ridge: self.ridge,
            pooled_realism: self.pooled_realism,
        }
    }

    /// Parameters that determine outputs, one `key=value` per line. Paths
    /// and the thread count are left out so that artifacts do not depend on
    /// where or how widely a run executes.
    pub fn echo(&self) -> String {
        let band = match self.band {
            Band::Unbounded => "unbounded".to_string(),
            Band::Radius(r) => r.to_string(),
        };
        let threshold = match self.threshold {
            ThresholdRule::Fixed(t) => format!("threshold={t}"),
            ThresholdRule::Percentile(p) => format!("percentile={p}"),
        };
        let downsample = self
            .downsample
            .map_or("auto".to_string(), |d| d.to_string());
        let alpha = self.alpha.map_or("auto".to_string(), |a| a.to_string());
        format!(
            "{threshold}\nband={band}\ndownsample={downsample}\ninclude_audio={}\nmax_lag={}\n\
             ridge={}\npooled_realism={}\nalpha={alpha}\nnoise={}\nseed={}\n",
            self.include_audio,
            self.max_lag,
            self.ridge,
            self.pooled_realism,
            self.noise,
            self.seed
        )
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).map_err(|e| Error::io(p, e)),
        _ => Ok(()),
    }
}

/// Raw clips of a manifest, in manifest order.
#[derive(Clone, Debug)]
pub struct LoadedCorpus {
    pub manifest: CorpusManifest,
    /// Facial channels, plus audio descriptors when requested.
    pub speakers: Vec<ClipSeries>,
    pub listeners: Vec<ClipSeries>,
}

impl LoadedCorpus {
    pub fn clip_ids(&self) -> Vec<String> {
        self.manifest.clip_ids()
    }

    /// Speaker signals restricted to facial channels.
    pub fn facial_speakers(&self) -> Result<Vec<ClipSeries>> {
        let facial = ChannelSchema::facial().into_arc();
        self.speakers
            .iter()
            .map(|s| s.select_channels(&facial))
            .collect()
    }
}

fn audio_columns(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = text.lines().next().unwrap_or_default();
    let facial = ChannelSchema::facial();
    Ok(header
        .split(',')
        .map(str::trim)
        .skip(1)
        .filter(|name| facial.index_of(name).is_none())
        .map(str::to_string)
        .collect())
}

/// Loads every clip of the manifest with raw range checks. With
/// `include_audio`, extra speaker columns (named in the first speaker file)
/// are read as audio descriptors.
pub fn load_corpus(manifest_path: &Path, include_audio: bool) -> Result<LoadedCorpus> {
    let manifest = load_manifest(manifest_path)?;
    let listener_schema = ChannelSchema::facial().into_arc();
    let speaker_schema = if include_audio {
        let audio = audio_columns(&manifest.entries[0].speaker_path)?;
        if audio.is_empty() {
            return Err(Error::Schema(format!(
                "{}: no audio descriptor columns to include",
                manifest.entries[0].speaker_path.display()
            )));
        }
        ChannelSchema::facial_with_audio(audio)?.into_arc()
    } else {
        Arc::clone(&listener_schema)
    };
    let pairs = manifest
        .entries
        .par_iter()
        .map(|e| -> Result<(ClipSeries, ClipSeries)> {
            let s = read_clip_csv(
                &e.speaker_path,
                &speaker_schema,
                Role::Speaker,
                e.fps,
                RangeCheck::Raw,
            )?
            .with_ids(e.clip_id.clone(), e.dyad_id.clone());
            let l = read_clip_csv(
                &e.listener_path,
                &listener_schema,
                Role::Listener,
                e.fps,
                RangeCheck::Raw,
            )?
            .with_ids(e.clip_id.clone(), e.dyad_id.clone());
            Ok((s, l))
        })
        .collect::<Result<Vec<_>>>()?;
    let (speakers, listeners) = pairs.into_iter().unzip();
    Ok(LoadedCorpus {
        manifest,
        speakers,
        listeners,
    })
}

/// Fits normalization on the reference split: facial channels over speaker
/// and listener frames jointly, audio channels over speaker frames.
pub fn fit_reference_normalization(corpus: &LoadedCorpus) -> Result<NormalizationParams> {
    let reference = corpus.manifest.reference_indices();
    let facial = ChannelSchema::facial().into_arc();
    let mut pool = Vec::with_capacity(2 * reference.len());
    for &i in &reference {
        pool.push(corpus.speakers[i].select_channels(&facial)?);
    }
    for &i in &reference {
        pool.push(corpus.listeners[i].clone());
    }
    let mut params = fit_normalization(&pool)?;
    let audio: Vec<String> = corpus.speakers[0]
        .schema()
        .audio_channels()
        .map(str::to_string)
        .collect();
    if !audio.is_empty() {
        let audio_schema = ChannelSchema::generic(audio)?.into_arc();
        let audio_pool = reference
            .iter()
            .map(|&i| corpus.speakers[i].select_channels(&audio_schema))
            .collect::<Result<Vec<_>>>()?;
        params = params.merge(&fit_normalization(&audio_pool)?);
    }
    Ok(params)
}

fn max_frames(corpus: &LoadedCorpus) -> usize {
    corpus
        .speakers
        .iter()
        .chain(&corpus.listeners)
        .map(ClipSeries::n_frames)
        .max()
        .unwrap_or(1)
}

/// Loads the corpus and builds the preprocessing that a matrix with
/// `settings` was computed under.
fn prepared(
    manifest: &Path,
    include_audio: bool,
    downsample: usize,
) -> Result<(LoadedCorpus, Preprocessor)> {
    let corpus = load_corpus(manifest, include_audio)?;
    let pre = Preprocessor {
        normalization: Some(fit_reference_normalization(&corpus)?),
        downsample,
    };
    Ok((corpus, pre))
}

/// Similarity matrix over the manifest's speaker behaviours.
pub fn compute_matrix(config: &RunConfig) -> Result<SimilarityMatrix> {
    let manifest = required(&config.manifest, "manifest")?;
    let corpus = load_corpus(manifest, config.include_audio)?;
    let downsample = config
        .downsample
        .unwrap_or_else(|| default_downsample_factor(max_frames(&corpus)));
    let pre = Preprocessor {
        normalization: Some(fit_reference_normalization(&corpus)?),
        downsample,
    };
    let speakers = corpus
        .speakers
        .par_iter()
        .map(|s| pre.distance_view(s))
        .collect::<Result<Vec<_>>>()?;
    let label = LabelConfig {
        downsample: Some(downsample),
        ..config.label_config()
    };
    pairwise_matrix(&speakers, &label)
}

pub fn run_similarity(config: &RunConfig) -> Result<String> {
    let start = Instant::now();
    let out = required(&config.matrix, "matrix")?;
    let matrix = compute_matrix(config)?;
    ensure_parent(out)?;
    save_matrix(out, &matrix)?;
    Ok(format!(
        "M={}\nmax_dtw={}\nsettings={}\nwall_time_s={:.3}\n",
        matrix.len(),
        matrix.max_dtw(),
        matrix.settings().echo(),
        start.elapsed().as_secs_f64()
    ))
}

pub fn run_label(config: &RunConfig) -> Result<String> {
    let matrix = load_matrix(required(&config.matrix, "matrix")?)?;
    let out = required(&config.index, "index")?;
    let index = build_index(&matrix, &config.label_config())?;
    ensure_parent(out)?;
    save_index(out, &index)?;
    Ok(format!(
        "threshold={}\nmean_set_size={}\n",
        index.threshold,
        index.mean_set_size()
    ))
}

/// Reads `<clip_id>.gen<i>.csv` for every clip, `i = 1..=alpha`. Without an
/// explicit `alpha`, the count found for the first clip is used.
pub fn load_generated_set(
    dir: &Path,
    clip_ids: &[String],
    fps: &[f64],
    alpha: Option<usize>,
) -> Result<GeneratedSet> {
    let gen_path = |id: &str, i: usize| dir.join(format!("{id}.gen{i}.csv"));
    let first = clip_ids
        .first()
        .ok_or_else(|| Error::InvalidArgument("no clips to load generations for".into()))?;
    let alpha = match alpha {
        Some(a) => a,
        None => {
            let n = (1..).take_while(|&i| gen_path(first, i).is_file()).count();
            if n == 0 {
                return Err(Error::Validation(format!(
                    "missing generated file {}",
                    gen_path(first, 1).display()
                )));
            }
            n
        }
    };
    let schema = ChannelSchema::facial().into_arc();
    let items = clip_ids
        .par_iter()
        .zip(fps)
        .map(|(id, &fps)| -> Result<Vec<ClipSeries>> {
            if gen_path(id, alpha + 1).is_file() {
                return Err(Error::Validation(format!(
                    "clip '{id}' has more than {alpha} generations ({} exists)",
                    gen_path(id, alpha + 1).display()
                )));
            }
            (1..=alpha)
                .map(|i| {
                    let p = gen_path(id, i);
                    if !p.is_file() {
                        return Err(Error::Validation(format!(
                            "missing generated file {}",
                            p.display()
                        )));
                    }
                    Ok(
                        read_clip_csv(&p, &schema, Role::Listener, fps, RangeCheck::FiniteOnly)?
                            .with_ids(id.clone(), ""),
                    )
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    GeneratedSet::new(items)
}

fn clip_fps(corpus: &LoadedCorpus) -> Vec<f64> {
    corpus.manifest.entries.iter().map(|e| e.fps).collect()
}

pub fn run_evaluate(config: &RunConfig) -> Result<String> {
    let matrix = load_matrix(required(&config.matrix, "matrix")?)?;
    let index = load_index(required(&config.index, "index")?)?;
    index.check_provenance(&matrix)?;
    let gen_dir = required(&config.gen_dir, "gen-dir")?;
    let out = required(&config.out, "out")?;
    let settings: MatrixSettings = *matrix.settings();
    let (corpus, pre) = prepared(
        required(&config.manifest, "manifest")?,
        settings.include_audio,
        settings.downsample,
    )?;
    let clip_ids = corpus.clip_ids();
    if matrix.clip_ids() != clip_ids.as_slice() {
        return Err(Error::Stale("matrix clips differ from the manifest".into()));
    }
    let gen = load_generated_set(gen_dir, &clip_ids, &clip_fps(&corpus), config.alpha)?;
    let eval = EvalCorpus {
        clip_ids,
        speakers: corpus.facial_speakers()?,
        listeners: corpus.listeners,
        preprocess: pre,
    };
    let report = evaluate_all(&gen, &index, &matrix, &eval, &config.metric_config())?;

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut kv = report.to_key_values();
    let _ = writeln!(kv, "config.matrix_settings={}", settings.echo());
    let _ = writeln!(
        kv,
        "config.matrix_hash={}",
        hex::encode(matrix.content_hash())
    );
    let _ = writeln!(kv, "config.threshold_rule={:?}", index.rule);
    let write = |name: &str, body: &str| {
        let p = out.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };
    write("report.txt", &report.to_table())?;
    write("report.kv", &kv)?;
    write("per_clip.csv", &report.per_clip_csv())?;
    Ok(report.to_table())
}

fn write_generations(dir: &Path, clip_id: &str, gens: &[ClipSeries]) -> Result<()> {
    for (i, g) in gens.iter().enumerate() {
        write_clip_series(&dir.join(format!("{clip_id}.gen{}.csv", i + 1)), g)?;
    }
    Ok(())
}

pub fn run_baseline(config: &RunConfig, kind: BaselineKind) -> Result<String> {
    let out = config
        .gen_dir
        .as_deref()
        .or(config.out.as_deref())
        .ok_or_else(|| Error::InvalidArgument("--gen-dir or --out is required".into()))?;
    let manifest = required(&config.manifest, "manifest")?;
    let corpus = load_corpus(manifest, false)?;
    let clip_ids = corpus.clip_ids();
    let alpha = config.alpha.unwrap_or(1);
    if kind == BaselineKind::Mirror && alpha != 1 {
        return Err(Error::InvalidArgument(
            "the mirror baseline has alpha = 1".into(),
        ));
    }
    let matrix = match kind {
        BaselineKind::Retrieval => {
            let m = load_matrix(required(&config.matrix, "matrix")?)?;
            if m.clip_ids() != clip_ids.as_slice() {
                return Err(Error::Stale("matrix clips differ from the manifest".into()));
            }
            Some(m)
        }
        _ => None,
    };
    let schema = ChannelSchema::facial().into_arc();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    (0..clip_ids.len())
        .into_par_iter()
        .map(|m| -> Result<()> {
            let seed = config.seed.wrapping_add(m as u64);
            let gens = match kind {
                BaselineKind::Mirror => vec![baseline_mirror(&corpus.speakers[m], &schema)?],
                BaselineKind::GtJitter => {
                    baseline_gt_jitter(&corpus.listeners[m], alpha, config.noise, seed, true)?
                }
                BaselineKind::Retrieval => baseline_retrieval(
                    m,
                    matrix.as_ref().expect("matrix loaded for retrieval"),
                    &corpus.listeners,
                    alpha,
                )?,
                BaselineKind::Random => baseline_random(&corpus.listeners[m], alpha, seed)?,
            };
            write_generations(out, &clip_ids[m], &gens)
        })
        .collect::<Result<()>>()?;
    Ok(format!(
        "clips={}\nalpha={alpha}\ndir={}\n",
        clip_ids.len(),
        out.display()
    ))
}

pub fn run_synth(config: &RunConfig) -> Result<String> {
    let out = required(&config.out, "out")?;
    let synth = SynthConfig {
        seed: config.seed,
        ..config.synth.clone()
    };
    let (manifest, _) = synth_corpus(&synth, out)?;
    Ok(format!(
        "clips={}\nclusters={}\nmanifest={}\n",
        manifest.len(),
        synth.clusters,
        out.join("manifest.csv").display()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth_run(dir: &Path, clips: usize) -> RunConfig {
        let mut c = RunConfig::default();
        c.set("out", dir.to_str().unwrap()).unwrap();
        for (k, v) in [
            ("clips", clips.to_string()),
            ("frames", "30".into()),
            ("clusters", "2".into()),
        ] {
            c.set(k, &v).unwrap();
        }
        c
    }

    #[test]
    fn set_parses_keys() {
        let mut c = RunConfig::default();
        c.set("band", "5").unwrap();
        assert_eq!(c.band, Band::Radius(5));
        c.set("band", "unbounded").unwrap();
        assert_eq!(c.band, Band::Unbounded);
        c.set("max-lag", "7").unwrap();
        assert_eq!(c.max_lag, 7);
        c.set("threshold", "0.4").unwrap();
        assert_eq!(c.threshold, ThresholdRule::Fixed(0.4));
        c.set("percentile", "80").unwrap();
        assert_eq!(c.threshold, ThresholdRule::Percentile(80.0));
        c.set("include_audio", "true").unwrap();
        assert!(c.include_audio);
        assert!(c.set("threshold", "1.5").is_err());
        assert!(c.set("downsample", "0").is_err());
        assert!(c.set("colour", "blue").is_err());
        assert!(c.set("alpha", "x").is_err());
    }

    #[test]
    fn config_file_then_override() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        fs::write(
            &p,
            "# comment\nmax_lag = 4  # trailing\n\nseed=9\npercentile=75\n",
        )
        .unwrap();
        let mut c = RunConfig::default();
        c.apply_file(&p).unwrap();
        assert_eq!((c.max_lag, c.seed), (4, 9));
        c.set("max_lag", "6").unwrap();
        assert_eq!(c.max_lag, 6);
        assert_eq!(c.threshold, ThresholdRule::Percentile(75.0));
        fs::write(&p, "max_lag\n").unwrap();
        assert!(matches!(
            RunConfig::default().apply_file(&p),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn echo_leaves_out_threads_and_paths() {
        let mut a = RunConfig::default();
        let mut b = RunConfig::default();
        a.set("threads", "1").unwrap();
        b.set("threads", "4").unwrap();
        b.set("out", "/elsewhere").unwrap();
        assert_eq!(a.echo(), b.echo());
    }

    #[test]
    fn baseline_kind_parsing() {
        assert_eq!(
            "mirror".parse::<BaselineKind>().unwrap(),
            BaselineKind::Mirror
        );
        assert_eq!(
            "gt_jitter".parse::<BaselineKind>().unwrap(),
            BaselineKind::GtJitter
        );
        assert!("copycat".parse::<BaselineKind>().is_err());
    }

    #[test]
    fn end_to_end_ground_truth() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        let mut c = synth_run(&root.join("corpus"), 6);
        c.set("within_noise", "0.2").unwrap();
        run_synth(&c).unwrap();
        c.set(
            "manifest",
            root.join("corpus/manifest.csv").to_str().unwrap(),
        )
        .unwrap();
        c.set("matrix", root.join("sim.bin").to_str().unwrap())
            .unwrap();
        c.set("index", root.join("index.txt").to_str().unwrap())
            .unwrap();
        c.set("percentile", "50").unwrap();
        run_similarity(&c).unwrap();
        run_label(&c).unwrap();

        // Ground-truth reactions as generations.
        let gen = root.join("gt");
        fs::create_dir_all(&gen).unwrap();
        let corpus = load_corpus(&root.join("corpus/manifest.csv"), false).unwrap();
        for l in &corpus.listeners {
            write_generations(&gen, &l.clip_id, std::slice::from_ref(l)).unwrap();
        }
        c.set("gen_dir", gen.to_str().unwrap()).unwrap();
        c.set("out", root.join("report").to_str().unwrap()).unwrap();
        c.set("max_lag", "3").unwrap();
        run_evaluate(&c).unwrap();
        let kv = fs::read_to_string(root.join("report/report.kv")).unwrap();
        let get = |k: &str| -> f64 {
            kv.lines()
                .find_map(|l| l.strip_prefix(&format!("metric.{k}=")))
                .unwrap()
                .parse()
                .unwrap()
        };
        assert!(get("FRDist").abs() <= 1e-9);
        assert!((get("FRCorr") - 1.0).abs() <= 1e-9);
        assert_eq!(get("ACC"), 1.0);
        assert_eq!(get("FRDiv"), 0.0);
    }

    #[test]
    fn missing_generation_names_file() {
        let dir = tempfile::tempdir().unwrap();
        let ids = vec!["a".to_string(), "b".to_string()];
        let err = load_generated_set(dir.path(), &ids, &[25.0, 25.0], Some(1)).unwrap_err();
        assert!(err.to_string().contains("a.gen1.csv"), "{err}");
    }

    #[test]
    fn uneven_generation_counts_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let corpus_dir = dir.path().join("c");
        let c = synth_run(&corpus_dir, 2);
        run_synth(&c).unwrap();
        let corpus = load_corpus(&corpus_dir.join("manifest.csv"), false).unwrap();
        let g = dir.path().join("g");
        fs::create_dir_all(&g).unwrap();
        let l0 = &corpus.listeners[0];
        let l1 = &corpus.listeners[1];
        write_generations(&g, &l0.clip_id, &[l0.clone(), l0.clone()]).unwrap();
        write_generations(&g, &l1.clip_id, std::slice::from_ref(l1)).unwrap();
        let ids = corpus.clip_ids();
        assert!(load_generated_set(&g, &ids, &[25.0, 25.0], None).is_err());
        write_generations(&g, &l1.clip_id, &[l1.clone(), l1.clone(), l1.clone()]).unwrap();
        assert!(load_generated_set(&g, &ids, &[25.0, 25.0], None).is_err());
    }

    #[test]
    fn audio_channels_join_the_speaker_signal() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = synth_run(dir.path(), 4);
        c.synth.channels = 27;
        run_synth(&c).unwrap();
        let manifest = dir.path().join("manifest.csv");
        let with = load_corpus(&manifest, true).unwrap();
        assert_eq!(with.speakers[0].n_channels(), 27);
        let params = fit_reference_normalization(&with).unwrap();
        assert_eq!(params.names.len(), 27);
        let without = load_corpus(&manifest, false).unwrap();
        assert_eq!(without.speakers[0].n_channels(), 25);
        assert_eq!(with.facial_speakers().unwrap(), without.speakers);
    }
}
