//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use fmarg::corpus::{write_clip_series, ChannelSchema, ClipSeries, Role};
use fmarg::elastic::{dtw_banded, lb_keogh, Band, DtwConfig};
use fmarg::generators::{synth_corpus, synth_series, SynthConfig};
use fmarg::labelling::{build_index, pairwise_matrix, LabelConfig, ThresholdRule};
use fmarg::pipeline::{
    compute_matrix, load_corpus, run_baseline, run_evaluate, run_label, run_similarity,
    BaselineKind, RunConfig,
};
use fmarg::stats::{ccc, frechet_distance, sqrtm_psd, GaussianModel};

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_series(rng: &mut ChaCha8Rng, frames: usize, channels: usize) -> ClipSeries {
    let schema = ChannelSchema::anonymous(channels).unwrap().into_arc();
    let values = (0..frames * channels).map(|_| normal(rng)).collect();
    ClipSeries::new("x", "d", Role::Speaker, 25.0, schema, values).unwrap()
}

/// Textbook DTW over an (n+1) × (m+1) table with an infinite border.
fn naive_dtw(x: &ClipSeries, y: &ClipSeries) -> f64 {
    let (n, m) = (x.n_frames(), y.n_frames());
    let mut d = vec![vec![f64::INFINITY; m + 1]; n + 1];
    d[0][0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let mut sq = 0.0;
            for (a, b) in x.frame(i - 1).iter().zip(y.frame(j - 1)) {
                sq += (a - b) * (a - b);
            }
            let best = d[i - 1][j].min(d[i][j - 1]).min(d[i - 1][j - 1]);
            d[i][j] = sq.sqrt() + best;
        }
    }
    d[n][m]
}

fn criterion_dtw_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let radii = [
        Band::Radius(0),
        Band::Radius(1),
        Band::Radius(2),
        Band::Radius(4),
        Band::Radius(8),
        Band::Radius(16),
        Band::Unbounded,
    ];
    let mut worst = 0.0f64;
    let mut band_violations = 0;
    let mut lb_violations = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=40);
        let m = rng.random_range(1..=40);
        let c = rng.random_range(1..=5);
        let x = random_series(&mut rng, n, c);
        let y = random_series(&mut rng, m, c);
        let oracle = naive_dtw(&x, &y);
        let full = dtw_banded(&x, &y, &DtwConfig::default()).unwrap().distance;
        worst = worst.max((full - oracle).abs());
        let mut prev = f64::INFINITY;
        for band in radii {
            let d = dtw_banded(
                &x,
                &y,
                &DtwConfig {
                    band,
                    early_abandon: None,
                },
            )
            .unwrap()
            .distance;
            if d > prev {
                band_violations += 1;
            }
            prev = d;
            let lb = lb_keogh(&x, &y, band).unwrap();
            if lb > d + 1e-9 {
                lb_violations += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst <= 1e-9 && band_violations == 0 && lb_violations == 0 && secs < 30.0,
        format!(
            "500 pairs, max |banded - naive| = {worst:.2e}, band violations {band_violations}, \
             LB violations {lb_violations}, {secs:.2}s"
        ),
    )
}

/// Percentile with linear interpolation between order statistics.
fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

fn labelling_corpus(seed: u64, m: usize) -> Vec<ClipSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if seed.is_multiple_of(2) {
        let cfg = SynthConfig {
            clips: m,
            frames: 30,
            clusters: 3.min(m),
            noise: 0.4,
            seed,
            ..Default::default()
        };
        let facial = ChannelSchema::facial().into_arc();
        synth_series(&cfg)
            .unwrap()
            .speakers
            .iter()
            .map(|s| s.select_channels(&facial).unwrap())
            .collect()
    } else {
        (0..m)
            .map(|i| {
                let t = rng.random_range(8..=30);
                random_series(&mut rng, t, 3).with_ids(format!("r{i}"), "")
            })
            .collect()
    }
}

fn criterion_labelling_oracle() -> Check {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut invariant_failures = 0;
    let mut corpora = 0;
    for (seed, m) in [(0u64, 5usize), (1, 8), (2, 12), (3, 16), (4, 20), (5, 20)] {
        corpora += 1;
        let series = labelling_corpus(seed, m);
        let matrix = pairwise_matrix(&series, &LabelConfig::default()).unwrap();
        let mut naive = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    naive[i][j] = naive_dtw(&series[i], &series[j]);
                }
            }
        }
        let max = naive.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        for (i, row) in naive.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                if matrix.distance(i, j).to_bits() != d.to_bits() {
                    mismatches += 1;
                }
            }
        }
        if matrix.max_dtw().to_bits() != max.to_bits() {
            mismatches += 1;
        }
        let sim = |i: usize, j: usize| 1.0 - naive[i][j] / max;

        let mut previous: Option<Vec<Vec<usize>>> = None;
        for k in 1..=9 {
            let t = k as f64 / 10.0;
            let idx = build_index(
                &matrix,
                &LabelConfig {
                    threshold: ThresholdRule::Fixed(t),
                    ..Default::default()
                },
            )
            .unwrap();
            for i in 0..m {
                let expect: Vec<usize> = (0..m).filter(|&j| sim(i, j) > t).collect();
                if idx.appropriate(i) != expect.as_slice() {
                    mismatches += 1;
                }
                if !idx.contains(i, i) {
                    invariant_failures += 1;
                }
                for j in 0..m {
                    if idx.contains(i, j) != idx.contains(j, i) {
                        invariant_failures += 1;
                    }
                }
                if let Some(prev) = &previous {
                    if !idx.appropriate(i).iter().all(|j| prev[i].contains(j)) {
                        invariant_failures += 1;
                    }
                }
            }
            previous = Some(idx.members.clone());
        }

        let sims: Vec<f64> = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .map(|(i, j)| sim(i, j))
            .collect();
        let q = percentile(&sims, 90.0);
        let idx = build_index(&matrix, &LabelConfig::default()).unwrap();
        for i in 0..m {
            let expect: Vec<usize> = (0..m).filter(|&j| j == i || sim(i, j) >= q).collect();
            if idx.appropriate(i) != expect.as_slice() {
                mismatches += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        mismatches == 0 && invariant_failures == 0 && secs < 60.0,
        format!(
            "{corpora} corpora (M <= 20), {mismatches} mismatches vs naive recomputation, \
             {invariant_failures} invariant failures, {secs:.2}s"
        ),
    )
}

fn base_run(root: &Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.set(
        "manifest",
        root.join("corpus/manifest.csv").to_str().unwrap(),
    )
    .unwrap();
    c.set("matrix", root.join("similarity.bin").to_str().unwrap())
        .unwrap();
    c.set("index", root.join("index.txt").to_str().unwrap())
        .unwrap();
    c
}

fn criterion_planted_clusters() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        clips: 40,
        frames: 120,
        clusters: 4,
        noise: 0.0,
        separation: 4.0,
        seed: 7,
        ..Default::default()
    };
    let (_, corpus) = synth_corpus(&cfg, &dir.path().join("corpus")).unwrap();
    let run = base_run(dir.path());
    let matrix = compute_matrix(&run).unwrap();
    let idx = build_index(
        &matrix,
        &LabelConfig {
            threshold: ThresholdRule::Percentile(90.0),
            ..Default::default()
        },
    )
    .unwrap();
    let mut errors = 0;
    for a in 0..40 {
        for b in 0..40 {
            if idx.contains(a, b) != corpus.same_cluster(a, b) {
                errors += 1;
            }
        }
    }
    ensure(
        errors == 0,
        format!(
            "M=40 K=4 noise=0, 90th percentile threshold {:.6}, {errors} errors",
            idx.threshold
        ),
    )
}

fn criterion_closed_forms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut ccc_worst = 0.0f64;
    for _ in 0..100 {
        let t = rng.random_range(10..200);
        let scale = rng.random_range(0.1..5.0);
        let mu = rng.random_range(-3.0..3.0);
        let c = rng.random_range(-3.0..3.0);
        let x: Vec<f64> = (0..t).map(|_| mu + scale * normal(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + c).collect();
        let mean = x.iter().sum::<f64>() / t as f64;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t as f64;
        let expect = 2.0 * var / (2.0 * var + c * c);
        ccc_worst = ccc_worst.max((ccc(&x, &y).unwrap() - expect).abs());
    }

    let uni = |m: f64, v: f64| {
        GaussianModel::new(DVector::from_element(1, m), DMatrix::from_element(1, 1, v)).unwrap()
    };
    let fd_mean = frechet_distance(&uni(0.0, 1.0), &uni(1.0, 1.0)).unwrap();
    let fd_var = frechet_distance(&uni(0.0, 1.0), &uni(0.0, 4.0)).unwrap();
    let fd_err = (fd_mean - 1.0).abs().max((fd_var - 1.0).abs());

    let mut sqrt_worst = 0.0f64;
    for dim in [1usize, 2, 3, 5, 8, 13, 20, 25] {
        for rank_cut in [dim, dim.div_ceil(2)] {
            let b = DMatrix::from_fn(dim, rank_cut, |_, _| normal(&mut rng));
            let a = &b * b.transpose();
            let s = sqrtm_psd(&a).unwrap();
            let residual = (&s * &s - &a).norm() / a.norm();
            sqrt_worst = sqrt_worst.max(residual);
        }
    }
    ensure(
        ccc_worst <= 1e-8 && fd_err <= 1e-6 && sqrt_worst <= 1e-6,
        format!(
            "CCC shift identity max err {ccc_worst:.2e} (100 cases), Fréchet unit cases err {fd_err:.2e}, \
             sqrtm max relative residual {sqrt_worst:.2e} (C <= 25)"
        ),
    )
}

fn read_kv(path: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn metric(kv: &BTreeMap<String, String>, name: &str) -> f64 {
    kv[&format!("metric.{name}")].parse().unwrap()
}

fn write_gt_generations(root: &Path, gen: &Path) {
    let corpus = load_corpus(&root.join("corpus/manifest.csv"), false).unwrap();
    fs::create_dir_all(gen).unwrap();
    for l in &corpus.listeners {
        write_clip_series(&gen.join(format!("{}.gen1.csv", l.clip_id)), l).unwrap();
    }
}

/// Evaluates ground-truth reactions and returns the report values.
fn fixed_point(root: &Path, percentile: &str) -> BTreeMap<String, String> {
    let mut run = base_run(root);
    run.set("percentile", percentile).unwrap();
    run_similarity(&run).unwrap();
    run_label(&run).unwrap();
    let gen = root.join("gt");
    write_gt_generations(root, &gen);
    run.set("gen_dir", gen.to_str().unwrap()).unwrap();
    run.set("out", root.join("report").to_str().unwrap())
        .unwrap();
    run.set("max_lag", "5").unwrap();
    run_evaluate(&run).unwrap();
    read_kv(&root.join("report/report.kv"))
}

/// A small corpus in the ingestion format with hand-shaped signals, fixed
/// 12 s segments, mixed splits and an extra ignored column.
fn write_real_format_corpus(root: &Path) {
    let dir = root.join("corpus");
    fs::create_dir_all(dir.join("features")).unwrap();
    let facial = ChannelSchema::facial();
    let mut manifest = String::from("clip_id,dyad_id,speaker_path,listener_path,fps,split\n");
    let splits = ["train", "train", "train", "val", "test", "train", "val"];
    for (k, split) in splits.iter().enumerate() {
        let id = format!("session{:02}_seg{}", k / 2, k % 2);
        let frames = 300;
        for role in ["speaker", "listener"] {
            let phase = k as f64 * 0.7 + if role == "listener" { 1.3 } else { 0.0 };
            let mut text = String::from("frame");
            for name in facial.names() {
                let _ = write!(text, ",{name}");
            }
            text.push_str(",face_confidence\n");
            for t in 0..frames {
                let s = t as f64 / 25.0;
                let _ = write!(text, "{t}");
                for au in 0..15 {
                    let v = 0.5 + 0.45 * (s * (0.3 + 0.11 * au as f64) + phase + au as f64).sin();
                    let _ = write!(text, ",{v:.4}");
                }
                let _ = write!(
                    text,
                    ",{:.4},{:.4}",
                    0.8 * (s * 0.4 + phase).sin(),
                    0.6 * (s * 0.9 - phase).cos()
                );
                let logits: Vec<f64> = (0..8)
                    .map(|e| (s * 0.2 * (e + 1) as f64 + phase * e as f64).sin() * 2.0)
                    .collect();
                let z: f64 = logits.iter().map(|l| l.exp()).sum();
                for l in &logits {
                    let _ = write!(text, ",{:.6}", l.exp() / z);
                }
                let _ = writeln!(text, ",0.97");
            }
            fs::write(dir.join(format!("features/{id}.{role}.csv")), text).unwrap();
        }
        let _ = writeln!(
            manifest,
            "{id},dyad{:02},features/{id}.speaker.csv,features/{id}.listener.csv,25,{split}",
            k / 2
        );
    }
    fs::write(dir.join("manifest.csv"), manifest).unwrap();
}

fn criterion_fixed_point() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in ["real-format", "synthetic"] {
        let dir = tempfile::tempdir().unwrap();
        if kind == "real-format" {
            write_real_format_corpus(dir.path());
        } else {
            let cfg = SynthConfig {
                clips: 12,
                frames: 90,
                clusters: 3,
                noise: 0.3,
                seed: 5,
                ..Default::default()
            };
            synth_corpus(&cfg, &dir.path().join("corpus")).unwrap();
        }
        let kv = fixed_point(dir.path(), "80");
        let (d, c, a, v) = (
            metric(&kv, "FRDist"),
            metric(&kv, "FRCorr"),
            metric(&kv, "ACC"),
            metric(&kv, "FRDiv"),
        );
        ok &= d.abs() <= 1e-9
            && (c - 1.0).abs() <= 1e-9
            && (a - 1.0).abs() <= 1e-9
            && v.abs() <= 1e-9;
        lines.push(format!(
            "{kind}: FRDist={d:e} FRCorr={c} ACC={a} FRDiv={v:e}"
        ));
    }
    ensure(ok, lines.join("; "))
}

fn delayed(series: &ClipSeries, k: usize) -> ClipSeries {
    let c = series.n_channels();
    let t = series.n_frames();
    let mut v = Vec::with_capacity(t * c);
    for i in 0..t {
        v.extend_from_slice(series.frame(i.saturating_sub(k)));
    }
    series.with_values(v).unwrap()
}

fn criterion_planted_lag() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let cfg = SynthConfig {
        clips: 8,
        frames: 120,
        clusters: 2,
        noise: 0.0,
        seed: 3,
        ..Default::default()
    };
    synth_corpus(&cfg, &root.join("corpus")).unwrap();
    let mut run = base_run(root);
    run_similarity(&run).unwrap();
    run_label(&run).unwrap();
    let corpus = load_corpus(&root.join("corpus/manifest.csv"), false).unwrap();
    let mut results = Vec::new();
    let mut ok = true;
    for k in [1usize, 2, 5] {
        for w in [5usize, 8] {
            let gen = root.join(format!("lag{k}"));
            fs::create_dir_all(&gen).unwrap();
            for s in &corpus.speakers {
                write_clip_series(&gen.join(format!("{}.gen1.csv", s.clip_id)), &delayed(s, k))
                    .unwrap();
            }
            let out = root.join(format!("report_lag{k}_w{w}"));
            run.set("gen_dir", gen.to_str().unwrap()).unwrap();
            run.set("out", out.to_str().unwrap()).unwrap();
            run.set("max_lag", &w.to_string()).unwrap();
            run_evaluate(&run).unwrap();
            let syn = metric(&read_kv(&out.join("report.kv")), "FRSyn");
            ok &= syn == k as f64;
            results.push(format!("k={k} W={w}: {syn}"));
        }
    }
    ensure(ok, format!("FRSyn {}", results.join(", ")))
}

fn criterion_diversity() -> Check {
    let sigmas = ["0", "0.1", "0.3"];
    let mut totals = [0.0f64; 3];
    let mut failures = 0;
    for seed in 0..30u64 {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        let cfg = SynthConfig {
            clips: 10,
            frames: 60,
            clusters: 2,
            noise: 0.2,
            seed,
            ..Default::default()
        };
        synth_corpus(&cfg, &root.join("corpus")).unwrap();
        let mut run = base_run(root);
        run.set("seed", &seed.to_string()).unwrap();
        run.set("alpha", "3").unwrap();
        run.set("max_lag", "5").unwrap();
        run_similarity(&run).unwrap();
        run_label(&run).unwrap();
        let mut div = [0.0f64; 3];
        for (s, sigma) in sigmas.iter().enumerate() {
            let gen = root.join(format!("jitter{s}"));
            run.set("noise", sigma).unwrap();
            run.set("gen_dir", gen.to_str().unwrap()).unwrap();
            run_baseline(&run, BaselineKind::GtJitter).unwrap();
            let out = root.join(format!("report{s}"));
            run.set("out", out.to_str().unwrap()).unwrap();
            run_evaluate(&run).unwrap();
            div[s] = metric(&read_kv(&out.join("report.kv")), "FRDiv");
            totals[s] += div[s] / 30.0;
        }
        if !(div[0] < div[1] && div[1] < div[2]) {
            failures += 1;
        }
    }
    ensure(
        failures == 0 && totals[0] < totals[1] && totals[1] < totals[2],
        format!(
            "30 seeds, mean FRDiv at noise 0/0.1/0.3 = {:.4}/{:.4}/{:.4}, {failures} seeds out of order",
            totals[0], totals[1], totals[2]
        ),
    )
}

fn fmarg(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_fmarg"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "fmarg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn pipeline_run(root: &Path, threads: usize) -> f64 {
    let start = Instant::now();
    let p = |rel: &str| root.join(rel).to_str().unwrap().to_string();
    let threads = threads.to_string();
    let (corpus, manifest, matrix, index, gen, report) = (
        p("corpus"),
        p("corpus/manifest.csv"),
        p("similarity.bin"),
        p("index.txt"),
        p("mirror"),
        p("report"),
    );
    let common = ["--threads", threads.as_str(), "--seed", "42"];
    let with = |args: &[&str]| -> Vec<String> {
        args.iter().chain(&common).map(|s| s.to_string()).collect()
    };
    for args in [
        with(&[
            "synth",
            "--out",
            &corpus,
            "--clips",
            "100",
            "--frames",
            "120",
            "--channels",
            "25",
            "--clusters",
            "5",
            "--within-noise",
            "0.2",
        ]),
        with(&["similarity", "--manifest", &manifest, "--matrix", &matrix]),
        with(&[
            "label",
            "--matrix",
            &matrix,
            "--index",
            &index,
            "--percentile",
            "90",
        ]),
        with(&[
            "baseline",
            "mirror",
            "--manifest",
            &manifest,
            "--gen-dir",
            &gen,
        ]),
        with(&[
            "evaluate",
            "--manifest",
            &manifest,
            "--matrix",
            &matrix,
            "--index",
            &index,
            "--gen-dir",
            &gen,
            "--out",
            &report,
        ]),
    ] {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        fmarg(&refs);
    }
    start.elapsed().as_secs_f64()
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn criterion_determinism() -> Check {
    let runs: Vec<(usize, tempfile::TempDir)> = [1usize, 4, 4]
        .into_iter()
        .map(|t| (t, tempfile::tempdir().unwrap()))
        .collect();
    let mut times = Vec::new();
    for (threads, dir) in &runs {
        times.push(pipeline_run(dir.path(), *threads));
    }
    let reference = tree(runs[0].1.path());
    let mut differing = Vec::new();
    for (threads, dir) in &runs[1..] {
        let other = tree(dir.path());
        if other.keys().ne(reference.keys()) {
            differing.push(format!("file set (threads={threads})"));
        }
        for (path, bytes) in &reference {
            if other.get(path) != Some(bytes) {
                differing.push(format!("{} (threads={threads})", path.display()));
            }
        }
    }
    let slowest = times.iter().cloned().fold(0.0, f64::max);
    ensure(
        differing.is_empty() && slowest < 120.0,
        format!(
            "M=100 T=120 C=25, {} artifacts, runs with threads 1/4/4 took {:.1}/{:.1}/{:.1}s, {} differing{}",
            reference.len(),
            times[0],
            times[1],
            times[2],
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(": {}", differing.join(", ")) }
        ),
    )
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 8] = [
        ("DTW oracle equivalence", criterion_dtw_oracle),
        ("labelling oracle", criterion_labelling_oracle),
        ("planted-cluster recovery", criterion_planted_clusters),
        ("closed-form kernel checks", criterion_closed_forms),
        ("metric fixed point", criterion_fixed_point),
        ("planted-lag synchrony", criterion_planted_lag),
        ("diversity monotonicity", criterion_diversity),
        ("determinism and performance", criterion_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  [{}] {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  [{}] {name}: {detail}", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
