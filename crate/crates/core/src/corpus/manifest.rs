use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

const COLUMNS: [&str; 6] = [
    "clip_id",
    "dyad_id",
    "speaker_path",
    "listener_path",
    "fps",
    "split",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Parse(format!("unknown split '{other}'"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub clip_id: String,
    pub dyad_id: String,
    pub speaker_path: PathBuf,
    pub listener_path: PathBuf,
    pub fps: f64,
    pub split: Split,
}

/// Ordered dyad entries; position in `entries` is the corpus index.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clip_ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.clip_id.clone()).collect()
    }

    /// Indices of the entries used to fit normalization: the train split, or
    /// every entry when the manifest has no train rows.
    pub fn reference_indices(&self) -> Vec<usize> {
        let train: Vec<usize> = (0..self.len())
            .filter(|&i| self.entries[i].split == Split::Train)
            .collect();
        if train.is_empty() {
            (0..self.len()).collect()
        } else {
            train
        }
    }
}

/// Parses and validates a manifest CSV. Relative feature paths resolve
/// against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<CorpusManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Err(Error::Validation(format!(
            "{}: empty manifest",
            path.display()
        )));
    }
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        .clone();
    let cols = COLUMNS
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Error::Parse(format!("{}: missing column '{name}'", path.display())))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record =
            record.map_err(|e| Error::Parse(format!("{}: row {row}: {e}", path.display())))?;
        let field = |k: usize| -> Result<&str> {
            match record.get(cols[k]) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(Error::Parse(format!(
                    "{}: row {row}, column '{}': missing value",
                    path.display(),
                    COLUMNS[k]
                ))),
            }
        };
        let clip_id = field(0)?.to_string();
        if !seen.insert(clip_id.clone()) {
            return Err(Error::Validation(format!(
                "{}: row {row}: duplicate clip_id '{clip_id}'",
                path.display()
            )));
        }
        let fps: f64 = field(4)?.parse().map_err(|_| {
            Error::Parse(format!(
                "{}: row {row}, column 'fps': not a number",
                path.display()
            ))
        })?;
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Validation(format!(
                "{}: row {row}, column 'fps': must be positive",
                path.display()
            )));
        }
        let split: Split = field(5)?.parse().map_err(|e| {
            Error::Parse(format!(
                "{}: row {row}, column 'split': {e}",
                path.display()
            ))
        })?;
        entries.push(ManifestEntry {
            clip_id,
            dyad_id: field(1)?.to_string(),
            speaker_path: base.join(field(2)?),
            listener_path: base.join(field(3)?),
            fps,
            split,
        });
    }
    if entries.is_empty() {
        return Err(Error::Validation(format!(
            "{}: empty manifest",
            path.display()
        )));
    }
    Ok(CorpusManifest { entries })
}

/// Writes a manifest; paths are written relative to `base` when possible.
pub fn write_manifest(path: &Path, manifest: &CorpusManifest, base: &Path) -> Result<()> {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for e in &manifest.entries {
        let rel = |p: &Path| -> String {
            p.strip_prefix(base)
                .unwrap_or(p)
                .to_string_lossy()
                .into_owned()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.clip_id,
            e.dyad_id,
            rel(&e.speaker_path),
            rel(&e.listener_path),
            e.fps,
            e.split
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
