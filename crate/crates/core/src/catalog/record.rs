use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::CatalogError;
use crate::channels::{Rgb, SegmentLabelSequence};
use crate::emotion::EmotionScores;

/// One entry of an inline dominant palette: a color and its pixel count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Swatch {
    pub color: Rgb,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PosterRef {
    Path(PathBuf),
    Palette(Vec<Swatch>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackRef {
    pub title: String,
    pub performer: String,
}

/// Precomputed per-channel scores, used in place of the media inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelScores {
    pub poster: EmotionScores,
    pub soundtrack: EmotionScores,
    pub description: EmotionScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovieRecord {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub overview: String,
    pub genres: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poster: Option<PosterRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soundtrack: Option<TrackRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soundtrack_labels: Option<SegmentLabelSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub popularity_rank: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cached_channels: Option<ChannelScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cached_profile: Option<EmotionScores>,
}

impl MovieRecord {
    pub fn new(id: impl Into<String>, title: impl Into<String>, genres: Vec<String>) -> Self {
        MovieRecord {
            id: id.into(),
            title: title.into(),
            overview: String::new(),
            genres,
            poster: None,
            soundtrack: None,
            soundtrack_labels: None,
            popularity_rank: None,
            cached_channels: None,
            cached_profile: None,
        }
    }

    pub fn has_genre(&self, genre: &str) -> bool {
        self.genres.iter().any(|g| g.eq_ignore_ascii_case(genre))
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let invalid = |field: &'static str, message: String| CatalogError::Invalid {
            record: self.id.clone(),
            field,
            message,
        };
        if self.id.trim().is_empty() {
            return Err(invalid("id", "must not be empty".into()));
        }
        if self.title.trim().is_empty() {
            return Err(invalid("title", "must not be empty".into()));
        }
        if let Some(i) = self.genres.iter().position(|g| g.trim().is_empty()) {
            return Err(invalid("genres", format!("entry {i} is empty")));
        }
        if self.popularity_rank == Some(0) {
            return Err(invalid("popularity_rank", "must be a positive integer".into()));
        }
        if let Some(PosterRef::Palette(swatches)) = &self.poster {
            if swatches.is_empty() {
                return Err(invalid("poster", "inline palette is empty".into()));
            }
            if swatches.iter().all(|s| s.count == 0) {
                return Err(invalid("poster", "inline palette has no pixels".into()));
            }
        }
        if let Some(labels) = &self.soundtrack_labels {
            labels
                .validate()
                .map_err(|e| invalid("soundtrack_labels", e.to_string()))?;
        }
        if let Some(ch) = &self.cached_channels {
            for (name, scores) in [
                ("poster", &ch.poster),
                ("soundtrack", &ch.soundtrack),
                ("description", &ch.description),
            ] {
                scores
                    .validate()
                    .map_err(|e| invalid("cached_channels", format!("{name}: {e}")))?;
            }
        }
        if let Some(p) = &self.cached_profile {
            p.validate().map_err(|e| invalid("cached_profile", e.to_string()))?;
        }
        Ok(())
    }
}
