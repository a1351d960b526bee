use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::schema::{ChannelKind, ChannelSchema};
use crate::error::{Error, Result};

/// Tolerance on the per-frame sum of expression probabilities.
const EXPRESSION_SUM_TOL: f64 = 0.02;

/// Pooled clips are kept at or below this many frames by the default
/// downsampling factor.
pub const MAX_POOLED_FRAMES: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Speaker,
    Listener,
}

/// Which value checks run when a clip file is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangeCheck {
    /// Finite values plus the raw range rules of each channel kind.
    Raw,
    /// Finite values only (generated or already transformed series).
    FiniteOnly,
}

/// One clip's multichannel behaviour: `n_frames` rows of `schema.len()`
/// values, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ClipSeries {
    pub clip_id: String,
    pub dyad_id: String,
    pub role: Role,
    pub fps: f64,
    schema: Arc<ChannelSchema>,
    frames: Vec<f64>,
    n_frames: usize,
}

impl ClipSeries {
    /// Builds a series from row-major values. Requires at least one frame and
    /// finite values.
    pub fn new(
        clip_id: impl Into<String>,
        dyad_id: impl Into<String>,
        role: Role,
        fps: f64,
        schema: Arc<ChannelSchema>,
        frames: Vec<f64>,
    ) -> Result<Self> {
        let channels = schema.len();
        if frames.is_empty() || !frames.len().is_multiple_of(channels) {
            return Err(Error::Length(format!(
                "{} values do not form whole frames of {channels} channels",
                frames.len()
            )));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "fps must be positive, got {fps}"
            )));
        }
        let n_frames = frames.len() / channels;
        let series = ClipSeries {
            clip_id: clip_id.into(),
            dyad_id: dyad_id.into(),
            role,
            fps,
            schema,
            frames,
            n_frames,
        };
        series.check_finite()?;
        Ok(series)
    }

    /// Single-use helper for ad-hoc series: `rows[t][c]`.
    pub fn from_rows(schema: Arc<ChannelSchema>, rows: &[Vec<f64>]) -> Result<Self> {
        let mut flat = Vec::with_capacity(rows.len() * schema.len());
        for (t, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Length(format!(
                    "frame {t} has {} values, schema has {}",
                    row.len(),
                    schema.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        ClipSeries::new("", "", Role::Listener, 1.0, schema, flat)
    }

    /// One-channel series over an anonymous schema.
    pub fn univariate(values: &[f64]) -> Result<Self> {
        let schema = ChannelSchema::anonymous(1)?.into_arc();
        ClipSeries::new("", "", Role::Listener, 1.0, schema, values.to_vec())
    }

    pub fn with_ids(mut self, clip_id: impl Into<String>, dyad_id: impl Into<String>) -> Self {
        self.clip_id = clip_id.into();
        self.dyad_id = dyad_id.into();
        self
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    /// Same metadata and schema, new values.
    pub fn with_values(&self, frames: Vec<f64>) -> Result<Self> {
        ClipSeries::new(
            self.clip_id.clone(),
            self.dyad_id.clone(),
            self.role,
            self.fps,
            Arc::clone(&self.schema),
            frames,
        )
    }

    pub fn schema(&self) -> &Arc<ChannelSchema> {
        &self.schema
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_channels(&self) -> usize {
        self.schema.len()
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let c = self.n_channels();
        &self.frames[t * c..(t + 1) * c]
    }

    pub fn frames(&self) -> std::slice::ChunksExact<'_, f64> {
        self.frames.chunks_exact(self.n_channels())
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.frames().map(|f| f[c]).collect()
    }

    pub fn same_schema(&self, other: &ClipSeries) -> bool {
        Arc::ptr_eq(&self.schema, &other.schema) || *self.schema == *other.schema
    }

    pub(crate) fn require_same_schema(&self, other: &ClipSeries) -> Result<()> {
        if self.same_schema(other) {
            Ok(())
        } else {
            Err(Error::Schema(format!(
                "clip '{}' ({} channels) vs clip '{}' ({} channels)",
                self.clip_id,
                self.n_channels(),
                other.clip_id,
                other.n_channels()
            )))
        }
    }

    pub(crate) fn require_same_shape(&self, other: &ClipSeries) -> Result<()> {
        self.require_same_schema(other)?;
        if self.n_frames != other.n_frames {
            return Err(Error::Length(format!(
                "clip '{}' has {} frames, clip '{}' has {}",
                self.clip_id, self.n_frames, other.clip_id, other.n_frames
            )));
        }
        Ok(())
    }

    /// Projects onto `target`, picking channels by name.
    pub fn select_channels(&self, target: &Arc<ChannelSchema>) -> Result<ClipSeries> {
        if *target == self.schema {
            return Ok(ClipSeries {
                schema: Arc::clone(target),
                ..self.clone()
            });
        }
        let idx = target
            .names()
            .iter()
            .map(|name| {
                self.schema.index_of(name).ok_or_else(|| {
                    Error::Schema(format!("clip '{}' lacks channel '{name}'", self.clip_id))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(self.n_frames * idx.len());
        for frame in self.frames() {
            out.extend(idx.iter().map(|&c| frame[c]));
        }
        Ok(ClipSeries {
            clip_id: self.clip_id.clone(),
            dyad_id: self.dyad_id.clone(),
            role: self.role,
            fps: self.fps,
            schema: Arc::clone(target),
            frames: out,
            n_frames: self.n_frames,
        })
    }

    fn check_finite(&self) -> Result<()> {
        for (t, frame) in self.frames().enumerate() {
            if let Some(c) = frame.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "clip '{}': non-finite value at frame {t}, channel '{}'",
                    self.clip_id,
                    self.schema.names()[c]
                )));
            }
        }
        Ok(())
    }

    /// Checks the raw-ingestion ranges: AUs and expression probabilities in
    /// `[0, 1]`, affect in `[-1, 1]`, expressions summing to 1 ± 0.02.
    pub fn validate_raw(&self) -> Result<()> {
        self.check_finite()?;
        let expr = self.schema.expression_indices();
        for (t, frame) in self.frames().enumerate() {
            for (c, &v) in frame.iter().enumerate() {
                let (lo, hi) = match self.schema.kind(c) {
                    ChannelKind::ActionUnit | ChannelKind::Expression => (0.0, 1.0),
                    ChannelKind::Affect => (-1.0, 1.0),
                    ChannelKind::Audio | ChannelKind::Generic => continue,
                };
                if v < lo || v > hi {
                    return Err(Error::Validation(format!(
                        "clip '{}': channel '{}' value {v} at frame {t} outside [{lo}, {hi}]",
                        self.clip_id,
                        self.schema.names()[c]
                    )));
                }
            }
            if !expr.is_empty() {
                let sum: f64 = expr.iter().map(|&c| frame[c]).sum();
                if (sum - 1.0).abs() > EXPRESSION_SUM_TOL {
                    return Err(Error::Validation(format!(
                        "clip '{}': expression probabilities at frame {t} sum to {sum}",
                        self.clip_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reads a clip feature CSV (`frame,<channel>,...`) and keeps the columns of
/// `schema` in schema order. Extra columns are ignored.
pub fn read_clip_csv(
    path: &Path,
    schema: &Arc<ChannelSchema>,
    role: Role,
    fps: f64,
    check: RangeCheck,
) -> Result<ClipSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let where_ = path.display();
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{where_}: empty clip file")))?;
    let header: Vec<&str> = header.split(',').map(str::trim).collect();
    if header.first() != Some(&"frame") {
        return Err(Error::Parse(format!(
            "{where_}: first column must be 'frame'"
        )));
    }
    let columns = schema
        .names()
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse(format!("{where_}: missing column '{name}'")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = Vec::new();
    let mut expected_frame = 0u64;
    let mut last_frame: Option<f64> = None;
    for (line_no, line) in lines {
        let row = line_no + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != header.len() {
            return Err(Error::Parse(format!(
                "{where_}: row {row} has {} cells, header has {}",
                cells.len(),
                header.len()
            )));
        }
        let frame: f64 = cells[0].parse().map_err(|_| {
            Error::Parse(format!(
                "{where_}: row {row}, column 'frame': bad value '{}'",
                cells[0]
            ))
        })?;
        let ok = match last_frame {
            None => frame == 0.0,
            Some(prev) => frame > prev,
        };
        if !ok {
            return Err(Error::Parse(format!(
                "{where_}: row {row}: frame column must start at 0 and increase strictly"
            )));
        }
        last_frame = Some(frame);
        for (&col, name) in columns.iter().zip(schema.names()) {
            let v: f64 = cells[col].parse().map_err(|_| {
                Error::Parse(format!(
                    "{where_}: row {row}, column '{name}': bad value '{}'",
                    cells[col]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "{where_}: non-finite value at frame {expected_frame}, channel '{name}'"
                )));
            }
            values.push(v);
        }
        expected_frame += 1;
    }
    if expected_frame < 2 {
        return Err(Error::Validation(format!(
            "{where_}: clip has {expected_frame} frames, need at least 2"
        )));
    }
    let clip_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let series = ClipSeries::new(clip_id, "", role, fps, Arc::clone(schema), values)?;
    if check == RangeCheck::Raw {
        series
            .validate_raw()
            .map_err(|e| Error::Validation(format!("{where_}: {e}")))?;
    }
    Ok(series)
}

/// Reads a raw corpus clip with full range validation.
pub fn load_clip_series(
    path: &Path,
    schema: &Arc<ChannelSchema>,
    role: Role,
    fps: f64,
) -> Result<ClipSeries> {
    read_clip_csv(path, schema, role, fps, RangeCheck::Raw)
}

/// Writes the clip CSV format. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_clip_series(path: &Path, series: &ClipSeries) -> Result<()> {
    let mut out = String::with_capacity(series.values().len() * 12);
    out.push_str("frame");
    for name in series.schema().names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (t, frame) in series.frames().enumerate() {
        let _ = write!(out, "{t}");
        for v in frame {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Non-overlapping mean pooling over windows of `factor` frames. The
/// trailing partial window is pooled on its own.
pub fn downsample(series: &ClipSeries, factor: usize) -> Result<ClipSeries> {
    if factor < 1 {
        return Err(Error::InvalidArgument(
            "downsample factor must be >= 1".into(),
        ));
    }
    if factor == 1 {
        return Ok(series.clone());
    }
    let c = series.n_channels();
    let t = series.n_frames();
    let pooled_len = t.div_ceil(factor);
    let mut out = Vec::with_capacity(pooled_len * c);
    for w in 0..pooled_len {
        let start = w * factor;
        let end = (start + factor).min(t);
        let n = (end - start) as f64;
        for ch in 0..c {
            let sum: f64 = (start..end).map(|i| series.frame(i)[ch]).sum();
            out.push(sum / n);
        }
    }
    let mut pooled = series.with_values(out)?;
    pooled.fps = series.fps / factor as f64;
    Ok(pooled)
}

/// Smallest factor that pools `max_frames` down to at most 128 frames.
pub fn default_downsample_factor(max_frames: usize) -> usize {
    max_frames.div_ceil(MAX_POOLED_FRAMES).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn facial_frame(au: f64, valence: f64) -> Vec<f64> {
        let mut f = vec![au; 15];
        f.extend([valence, 0.0]);
        f.extend([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        f
    }

    fn write_facial_csv(dir: &Path, name: &str, rows: &[Vec<f64>]) -> std::path::PathBuf {
        let schema = ChannelSchema::facial().into_arc();
        let s = ClipSeries::from_rows(schema, rows).unwrap();
        let p = dir.join(name);
        write_clip_series(&p, &s).unwrap();
        p
    }

    #[test]
    fn loads_750_frame_facial_clip() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<_> = (0..750)
            .map(|t| facial_frame((t % 10) as f64 / 10.0, 0.3))
            .collect();
        let p = write_facial_csv(dir.path(), "c.csv", &rows);
        let schema = ChannelSchema::facial().into_arc();
        let s = load_clip_series(&p, &schema, Role::Speaker, 25.0).unwrap();
        assert_eq!(s.n_frames(), 750);
        assert_eq!(s.n_channels(), 25);
        assert_eq!(s.frame(3)[0], 0.3);
    }

    #[test]
    fn nan_cell_names_frame_and_channel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nan.csv");
        let header = std::iter::once("frame".to_string())
            .chain(ChannelSchema::facial().names().iter().cloned())
            .collect::<Vec<_>>()
            .join(",");
        let good = facial_frame(0.5, 0.0)
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let mut bad = facial_frame(0.5, 0.0);
        bad[3] = f64::NAN;
        let bad = bad
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        fs::write(&p, format!("{header}\n0,{good}\n1,{bad}\n")).unwrap();
        let schema = ChannelSchema::facial().into_arc();
        let err = load_clip_series(&p, &schema, Role::Speaker, 25.0)
            .unwrap_err()
            .to_string();
        assert!(err.contains("frame 1"), "{err}");
        assert!(err.contains("AU6"), "{err}");
    }

    #[test]
    fn valence_out_of_range_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![facial_frame(0.1, 0.0), facial_frame(0.1, 1.5)];
        let p = write_facial_csv(dir.path(), "v.csv", &rows);
        let schema = ChannelSchema::facial().into_arc();
        let err = load_clip_series(&p, &schema, Role::Listener, 25.0).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        assert!(err.to_string().contains("valence"));
        // Generated sets skip range checks.
        assert!(read_clip_csv(&p, &schema, Role::Listener, 25.0, RangeCheck::FiniteOnly).is_ok());
    }

    #[test]
    fn single_frame_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_facial_csv(dir.path(), "one.csv", &[facial_frame(0.1, 0.0)]);
        let schema = ChannelSchema::facial().into_arc();
        assert!(load_clip_series(&p, &schema, Role::Listener, 25.0).is_err());
    }

    #[test]
    fn expression_sum_checked() {
        let schema = ChannelSchema::facial().into_arc();
        let mut f = facial_frame(0.1, 0.0);
        f[17] = 0.9;
        let s = ClipSeries::from_rows(schema, &[f.clone(), f]).unwrap();
        assert!(s.validate_raw().is_err());
    }

    #[test]
    fn frame_column_must_increase() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        fs::write(&p, "frame,c0\n0,1\n0,2\n").unwrap();
        let schema = ChannelSchema::anonymous(1).unwrap().into_arc();
        assert!(read_clip_csv(&p, &schema, Role::Listener, 1.0, RangeCheck::Raw).is_err());
        fs::write(&p, "frame,c0\n1,1\n2,2\n").unwrap();
        assert!(read_clip_csv(&p, &schema, Role::Listener, 1.0, RangeCheck::Raw).is_err());
    }

    #[test]
    fn missing_column_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, "frame,c0\n0,1\n1,2\n").unwrap();
        let schema = ChannelSchema::anonymous(2).unwrap().into_arc();
        let err = read_clip_csv(&p, &schema, Role::Listener, 1.0, RangeCheck::Raw).unwrap_err();
        assert!(err.to_string().contains("'c1'"));
    }

    #[test]
    fn downsample_examples() {
        let s = ClipSeries::univariate(&[0.0, 2.0, 4.0, 6.0]).unwrap();
        assert_eq!(downsample(&s, 1).unwrap(), s);
        assert_eq!(downsample(&s, 2).unwrap().values(), &[1.0, 5.0]);
        let s = ClipSeries::univariate(&[0.0, 2.0, 4.0, 6.0, 8.0]).unwrap();
        let d = downsample(&s, 2).unwrap();
        assert_eq!(d.values(), &[1.0, 5.0, 8.0]);
        assert_eq!(d.fps, 0.5);
        assert!(downsample(&s, 0).is_err());
    }

    #[test]
    fn default_factor_caps_length() {
        assert_eq!(default_downsample_factor(100), 1);
        assert_eq!(default_downsample_factor(128), 1);
        assert_eq!(default_downsample_factor(129), 2);
        assert_eq!(default_downsample_factor(750), 6);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(
            rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 2..20)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let schema = ChannelSchema::anonymous(3).unwrap().into_arc();
            let s = ClipSeries::from_rows(schema.clone(), &rows).unwrap();
            let p = dir.path().join("r.csv");
            write_clip_series(&p, &s).unwrap();
            let back = read_clip_csv(&p, &schema, Role::Listener, 1.0, RangeCheck::Raw).unwrap();
            prop_assert_eq!(back.values(), s.values());
        }

        #[test]
        fn downsample_composes(
            a in 1usize..4, b in 1usize..4, windows in 1usize..6,
            seed in prop::collection::vec(-10f64..10.0, 72)
        ) {
            let t = a * b * windows;
            let s = ClipSeries::univariate(&seed[..t]).unwrap();
            let once = downsample(&s, a * b).unwrap();
            let twice = downsample(&downsample(&s, a).unwrap(), b).unwrap();
            for (x, y) in once.values().iter().zip(twice.values()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
            prop_assert_eq!(once.n_frames(), windows);
        }
    }
}
