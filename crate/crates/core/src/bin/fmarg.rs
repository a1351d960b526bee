use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fmarg::pipeline::{
    run_baseline, run_evaluate, run_label, run_similarity, run_synth, BaselineKind, RunConfig,
};
use fmarg::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fmarg",
    version,
    about = "Appropriate facial reaction labelling and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and save the pairwise speaker similarity matrix.
    Similarity,
    /// Threshold a saved matrix into an appropriateness index.
    Label,
    /// Score a generated reaction set.
    Evaluate,
    /// Write a baseline generated set (mirror, gt_jitter, retrieval, random).
    Baseline { kind: String },
    /// Write a synthetic corpus with planted clusters.
    Synth,
}

#[derive(Args)]
struct Opts {
    /// Flat key=value file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    manifest: Option<String>,
    #[arg(long, global = true)]
    matrix: Option<String>,
    #[arg(long, global = true)]
    index: Option<String>,
    #[arg(long, global = true)]
    gen_dir: Option<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    /// Fixed similarity threshold in (0, 1).
    #[arg(long, global = true, conflicts_with = "percentile")]
    threshold: Option<String>,
    /// Percentile of off-diagonal similarities used as threshold.
    #[arg(long, global = true)]
    percentile: Option<String>,
    /// Sakoe-Chiba radius in frames, or `unbounded`.
    #[arg(long, global = true)]
    band: Option<String>,
    /// Temporal pooling factor, or `auto`.
    #[arg(long, global = true)]
    downsample: Option<String>,
    #[arg(long, global = true)]
    max_lag: Option<String>,
    #[arg(long, global = true)]
    ridge: Option<String>,
    #[arg(long, global = true)]
    pooled_realism: bool,
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// Noise level of the gt_jitter baseline.
    #[arg(long, global = true)]
    noise: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    threads: Option<String>,
    #[arg(long, global = true)]
    include_audio: bool,
    #[arg(long, global = true)]
    clips: Option<String>,
    #[arg(long, global = true)]
    frames: Option<String>,
    #[arg(long, global = true)]
    channels: Option<String>,
    #[arg(long, global = true)]
    clusters: Option<String>,
    /// Within-cluster noise of the synthetic corpus.
    #[arg(long, global = true)]
    within_noise: Option<String>,
    #[arg(long, global = true)]
    separation: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lag: Option<String>,
    #[arg(long, global = true)]
    fps: Option<String>,
}

impl Opts {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        let flags = [
            ("manifest", &self.manifest),
            ("matrix", &self.matrix),
            ("index", &self.index),
            ("gen_dir", &self.gen_dir),
            ("out", &self.out),
            ("threshold", &self.threshold),
            ("percentile", &self.percentile),
            ("band", &self.band),
            ("downsample", &self.downsample),
            ("max_lag", &self.max_lag),
            ("ridge", &self.ridge),
            ("alpha", &self.alpha),
            ("noise", &self.noise),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("clips", &self.clips),
            ("frames", &self.frames),
            ("channels", &self.channels),
            ("clusters", &self.clusters),
            ("within_noise", &self.within_noise),
            ("separation", &self.separation),
            ("lag", &self.lag),
            ("fps", &self.fps),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        if self.include_audio {
            config.include_audio = true;
        }
        if self.pooled_realism {
            config.pooled_realism = true;
        }
        Ok(config)
    }
}

fn dispatch(command: &Command, config: &RunConfig) -> Result<String> {
    match command {
        Command::Similarity => run_similarity(config),
        Command::Label => run_label(config),
        Command::Evaluate => run_evaluate(config),
        Command::Baseline { kind } => run_baseline(config, kind.parse::<BaselineKind>()?),
        Command::Synth => run_synth(config),
    }
}

fn run(cli: &Cli) -> Result<String> {
    let config = cli.opts.resolve()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, &config))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(summary)) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 2 } else { 1 })
        }
        Err(_) => ExitCode::from(1),
    }
}
