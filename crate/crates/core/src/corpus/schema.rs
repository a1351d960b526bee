use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const ACTION_UNITS: [&str; 15] = [
    "AU1", "AU2", "AU4", "AU6", "AU7", "AU9", "AU10", "AU12", "AU14", "AU15", "AU17", "AU23",
    "AU24", "AU25", "AU26",
];

pub const AFFECT: [&str; 2] = ["valence", "arousal"];

pub const EXPRESSIONS: [&str; 8] = [
    "Neutral", "Happy", "Sad", "Surprise", "Fear", "Disgust", "Anger", "Contempt",
];

/// Number of facial attribute channels (AUs, affect, expressions).
pub const FACIAL_CHANNELS: usize = ACTION_UNITS.len() + AFFECT.len() + EXPRESSIONS.len();

/// What a channel measures; determines the raw value range checked at
/// ingestion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// Occurrence probability in `[0, 1]`.
    ActionUnit,
    /// Valence or arousal in `[-1, 1]`.
    Affect,
    /// Categorical expression probability in `[0, 1]`; the group sums to 1.
    Expression,
    /// Clip-level audio descriptor broadcast over frames; unconstrained.
    Audio,
    /// Unconstrained channel, used for ad-hoc signals.
    Generic,
}

/// Ordered channel layout shared by every clip of a corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelSchema {
    names: Vec<String>,
    kinds: Vec<ChannelKind>,
}

impl ChannelSchema {
    fn build(names: Vec<String>, kinds: Vec<ChannelKind>) -> Result<Self> {
        debug_assert_eq!(names.len(), kinds.len());
        if names.is_empty() {
            return Err(Error::InvalidArgument("schema has no channels".into()));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::InvalidArgument("empty channel name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate channel name '{name}'"
                )));
            }
        }
        Ok(ChannelSchema { names, kinds })
    }

    /// The 25 facial attribute channels in canonical order.
    pub fn facial() -> Self {
        let mut names = Vec::with_capacity(FACIAL_CHANNELS);
        let mut kinds = Vec::with_capacity(FACIAL_CHANNELS);
        for au in ACTION_UNITS {
            names.push(au.to_string());
            kinds.push(ChannelKind::ActionUnit);
        }
        for a in AFFECT {
            names.push(a.to_string());
            kinds.push(ChannelKind::Affect);
        }
        for e in EXPRESSIONS {
            names.push(e.to_string());
            kinds.push(ChannelKind::Expression);
        }
        ChannelSchema { names, kinds }
    }

    /// Facial channels followed by the given audio descriptor channels.
    pub fn facial_with_audio<I, S>(audio: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let base = Self::facial();
        let mut names = base.names;
        let mut kinds = base.kinds;
        for name in audio {
            names.push(name.into());
            kinds.push(ChannelKind::Audio);
        }
        Self::build(names, kinds)
    }

    /// Schema of unconstrained channels.
    pub fn generic<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let kinds = vec![ChannelKind::Generic; names.len()];
        Self::build(names, kinds)
    }

    /// Convenience for tests and kernels: `c0, c1, ...`.
    pub fn anonymous(channels: usize) -> Result<Self> {
        Self::generic((0..channels).map(|c| format!("c{c}")))
    }

    pub fn into_arc(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[ChannelKind] {
        &self.kinds
    }

    pub fn kind(&self, channel: usize) -> ChannelKind {
        self.kinds[channel]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// True when the first 25 channels are the canonical facial layout.
    pub fn has_facial_prefix(&self) -> bool {
        let facial = Self::facial();
        self.len() >= FACIAL_CHANNELS
            && self.names[..FACIAL_CHANNELS] == facial.names[..]
            && self.kinds[..FACIAL_CHANNELS] == facial.kinds[..]
    }

    /// Names of audio descriptor channels, in order.
    pub fn audio_channels(&self) -> impl Iterator<Item = &str> {
        self.names
            .iter()
            .zip(&self.kinds)
            .filter(|(_, k)| **k == ChannelKind::Audio)
            .map(|(n, _)| n.as_str())
    }

    pub(crate) fn expression_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&c| self.kinds[c] == ChannelKind::Expression)
            .collect()
    }
}
