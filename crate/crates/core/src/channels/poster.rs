//! Poster scoring: quantize pixels onto knowledge-base colors, take the
//! dominant palette, and compare it with each emotion's characteristic
//! colors by Jaccard similarity.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ChannelError;
use crate::emotion::{jaccard_sets, Emotion, EmotionScores};

const DEFAULT_KB: &str = include_str!("../../data/default_color_kb.json");

pub type Rgb = [u8; 3];

/// Decoded raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosterImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl PosterImage {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self, ChannelError> {
        let expected = width as usize * height as usize;
        if expected == 0 || pixels.len() != expected {
            return Err(ChannelError::Image(format!(
                "{width}x{height} image needs {expected} pixels, got {}",
                pixels.len()
            )));
        }
        Ok(PosterImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        self.pixels[(y * self.width + x) as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbEntry {
    #[serde(default)]
    pub name: String,
    pub color: Rgb,
    pub emotion_weights: BTreeMap<Emotion, f64>,
}

impl KbEntry {
    pub fn weight(&self, emotion: Emotion) -> f64 {
        self.emotion_weights.get(&emotion).copied().unwrap_or(0.0)
    }
}

fn default_palette_size() -> usize {
    8
}

fn default_cutoff() -> f64 {
    0.5
}

/// Reference colors with per-emotion weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorEmotionKb {
    pub entries: Vec<KbEntry>,
    pub palette_size: usize,
    /// Minimum weight for a color to be characteristic of an emotion.
    pub membership_cutoff: f64,
}

#[derive(Deserialize)]
struct KbFile {
    entries: Vec<RawEntry>,
    #[serde(default = "default_palette_size")]
    palette_size: usize,
    #[serde(default = "default_cutoff")]
    membership_cutoff: f64,
}

#[derive(Deserialize)]
struct RawEntry {
    #[serde(default)]
    name: String,
    color: Rgb,
    emotion_weights: BTreeMap<String, f64>,
}

impl ColorEmotionKb {
    pub fn builtin() -> Self {
        Self::from_json_str(DEFAULT_KB).expect("bundled color KB is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ChannelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ChannelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ChannelError> {
        let (kb, ignored) = Self::parse_with_warnings(text)?;
        for warning in ignored {
            log::warn!("{warning}");
        }
        Ok(kb)
    }

    /// Parses a KB file and also returns one warning per ignored
    /// non-canonical emotion weight.
    pub fn parse_with_warnings(text: &str) -> Result<(Self, Vec<String>), ChannelError> {
        let file: KbFile =
            serde_json::from_str(text).map_err(|e| ChannelError::ColorKb(e.to_string()))?;
        let mut warnings = Vec::new();
        let mut entries = Vec::with_capacity(file.entries.len());
        for (i, raw) in file.entries.into_iter().enumerate() {
            let mut weights = BTreeMap::new();
            for (name, w) in raw.emotion_weights {
                match name.parse::<Emotion>() {
                    Ok(e) => {
                        weights.insert(e, w);
                    }
                    Err(_) => warnings.push(format!(
                        "color KB entry {i} ({}): ignoring non-canonical emotion `{name}`",
                        raw.name
                    )),
                }
            }
            entries.push(KbEntry {
                name: raw.name,
                color: raw.color,
                emotion_weights: weights,
            });
        }
        let kb = ColorEmotionKb {
            entries,
            palette_size: file.palette_size,
            membership_cutoff: file.membership_cutoff,
        };
        kb.validate()?;
        Ok((kb, warnings))
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |m: String| Err(ChannelError::ColorKb(m));
        if self.entries.len() < 5 {
            return bad(format!("need at least 5 entries, got {}", self.entries.len()));
        }
        if self.palette_size == 0 {
            return bad("palette_size must be positive".into());
        }
        if !(self.membership_cutoff > 0.0 && self.membership_cutoff <= 1.0) {
            return bad(format!("membership_cutoff {} not in (0, 1]", self.membership_cutoff));
        }
        for (i, entry) in self.entries.iter().enumerate() {
            if entry
                .emotion_weights
                .values()
                .any(|w| !(w.is_finite() && (0.0..=1.0).contains(w)))
            {
                return bad(format!("entry {i} has a weight outside [0, 1]"));
            }
            if entry.emotion_weights.values().all(|&w| w == 0.0) {
                return bad(format!("entry {i} ({}) has no non-zero emotion weight", entry.name));
            }
        }
        Ok(())
    }

    /// Index of the closest entry by squared RGB distance; ties go to the
    /// earlier entry.
    pub fn nearest(&self, rgb: Rgb) -> usize {
        let dist = |c: Rgb| -> u32 {
            c.iter()
                .zip(rgb.iter())
                .map(|(&a, &b)| {
                    let d = a as i32 - b as i32;
                    (d * d) as u32
                })
                .sum()
        };
        self.entries
            .iter()
            .enumerate()
            .min_by_key(|(i, e)| (dist(e.color), *i))
            .map(|(i, _)| i)
            .expect("validated KB is non-empty")
    }

    pub fn characteristic_set(&self, emotion: Emotion) -> BTreeSet<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.weight(emotion) >= self.membership_cutoff)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Per-KB-entry pixel counts after nearest-color quantization.
pub fn quantize<'a, I>(pixels: I, kb: &ColorEmotionKb) -> Vec<u64>
where
    I: IntoIterator<Item = (&'a Rgb, u64)>,
{
    let mut counts = vec![0u64; kb.entries.len()];
    for (rgb, weight) in pixels {
        counts[kb.nearest(*rgb)] += weight;
    }
    counts
}

/// The `palette_size` most frequent KB entries (count desc, index asc).
pub fn dominant_palette(counts: &[u64], palette_size: usize) -> BTreeSet<usize> {
    let mut ranked: Vec<(usize, u64)> = counts
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(palette_size).map(|(i, _)| i).collect()
}

fn score_palette(palette: &BTreeSet<usize>, kb: &ColorEmotionKb) -> EmotionScores {
    EmotionScores::from_pairs(
        Emotion::ALL
            .into_iter()
            .map(|e| (e, jaccard_sets(palette, &kb.characteristic_set(e)))),
    )
}

pub fn poster_emotions(img: &PosterImage, kb: &ColorEmotionKb) -> EmotionScores {
    let counts = quantize(img.pixels.iter().map(|p| (p, 1)), kb);
    score_palette(&dominant_palette(&counts, kb.palette_size), kb)
}

/// Same scoring from a precomputed color histogram, e.g. an inline palette
/// stored in a catalog record.
pub fn palette_emotions(swatches: &[(Rgb, u64)], kb: &ColorEmotionKb) -> EmotionScores {
    let counts = quantize(swatches.iter().map(|(c, n)| (c, *n)), kb);
    score_palette(&dominant_palette(&counts, kb.palette_size), kb)
}
