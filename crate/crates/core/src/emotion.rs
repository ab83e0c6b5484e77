//! The five canonical emotions, score containers, channel fusion and
//! thresholded-set Jaccard similarity.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Threshold above which an emotion counts as present in a profile.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Happy,
    Angry,
    Surprise,
    Sad,
    Fear,
}

impl Emotion {
    /// Canonical order; also the serialization key order.
    pub const ALL: [Emotion; 5] = [
        Emotion::Happy,
        Emotion::Angry,
        Emotion::Surprise,
        Emotion::Sad,
        Emotion::Fear,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        match self {
            Emotion::Happy => "happy",
            Emotion::Angry => "angry",
            Emotion::Surprise => "surprise",
            Emotion::Sad => "sad",
            Emotion::Fear => "fear",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Emotion::Happy => "Happy",
            Emotion::Angry => "Angry",
            Emotion::Surprise => "Surprise",
            Emotion::Sad => "Sad",
            Emotion::Fear => "Fear",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown emotion `{0}`")]
pub struct UnknownEmotion(pub String);

impl FromStr for Emotion {
    type Err = UnknownEmotion;

    /// Accepts the canonical names plus the common adjectival/nominal forms
    /// used by the upstream tools (`fearful`, `anger`, `happiness`, ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "happy" | "happiness" | "joy" => Ok(Emotion::Happy),
            "angry" | "anger" => Ok(Emotion::Angry),
            "surprise" | "surprised" => Ok(Emotion::Surprise),
            "sad" | "sadness" => Ok(Emotion::Sad),
            "fear" | "fearful" => Ok(Emotion::Fear),
            _ => Err(UnknownEmotion(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("{emotion} score {value} is not finite")]
    NonFinite { emotion: Emotion, value: f64 },
    #[error("{emotion} score {value} is outside [0, 1]")]
    OutOfRange { emotion: Emotion, value: f64 },
    #[error("{channel} channel: {source}")]
    Channel {
        channel: &'static str,
        #[source]
        source: Box<ScoreError>,
    },
    #[error("invalid channel weights ({poster}, {soundtrack}, {description}): each must be finite and > 0")]
    Weights {
        poster: f64,
        soundtrack: f64,
        description: f64,
    },
}

/// One score per canonical emotion.
///
/// Construction through [`EmotionScores::from_array`] is unchecked so that
/// callers can assemble intermediate values; [`EmotionScores::validate`]
/// enforces the finite-and-in-[0,1] invariant and deserialization always
/// validates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EmotionScores([f64; 5]);

impl EmotionScores {
    pub const ZERO: EmotionScores = EmotionScores([0.0; 5]);

    pub fn from_array(values: [f64; 5]) -> Self {
        EmotionScores(values)
    }

    pub fn try_from_array(values: [f64; 5]) -> Result<Self, ScoreError> {
        let scores = EmotionScores(values);
        scores.validate()?;
        Ok(scores)
    }

    pub fn from_pairs<I: IntoIterator<Item = (Emotion, f64)>>(pairs: I) -> Self {
        let mut values = [0.0; 5];
        for (emotion, value) in pairs {
            values[emotion.index()] = value;
        }
        EmotionScores(values)
    }

    pub fn get(&self, emotion: Emotion) -> f64 {
        self.0[emotion.index()]
    }

    pub fn set(&mut self, emotion: Emotion, value: f64) {
        self.0[emotion.index()] = value;
    }

    pub fn as_array(&self) -> &[f64; 5] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Emotion, f64)> + '_ {
        Emotion::ALL.iter().map(move |&e| (e, self.0[e.index()]))
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        for (emotion, value) in self.iter() {
            if !value.is_finite() {
                return Err(ScoreError::NonFinite { emotion, value });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(ScoreError::OutOfRange { emotion, value });
            }
        }
        Ok(())
    }

    /// Scales so the scores sum to one; an all-zero vector stays all-zero.
    pub fn normalized(&self) -> Self {
        let total = self.sum();
        if total <= 0.0 {
            return EmotionScores::ZERO;
        }
        EmotionScores(self.0.map(|v| v / total))
    }

    /// Presentation copy with every score rounded to two decimals.
    pub fn rounded(&self) -> Self {
        EmotionScores(self.0.map(round_2dp))
    }

    pub fn to_set(&self, threshold: f64) -> EmotionSet {
        to_emotion_set(self, threshold)
    }
}

impl fmt::Display for EmotionScores {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (emotion, value)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {:.2}", emotion, round_2dp(value))?;
        }
        f.write_str("}")
    }
}

impl Serialize for EmotionScores {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(5))?;
        for (emotion, value) in self.iter() {
            map.serialize_entry(emotion.key(), &value)?;
        }
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoresRepr {
    #[serde(default)]
    happy: f64,
    #[serde(default)]
    angry: f64,
    #[serde(default)]
    surprise: f64,
    #[serde(default)]
    sad: f64,
    #[serde(default)]
    fear: f64,
}

impl<'de> Deserialize<'de> for EmotionScores {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = ScoresRepr::deserialize(deserializer)?;
        EmotionScores::try_from_array([r.happy, r.angry, r.surprise, r.sad, r.fear])
            .map_err(de::Error::custom)
    }
}

/// Rounds half-up at two decimals. The nudge absorbs binary representation
/// error so that decimal halves such as 0.265 round up as printed.
pub fn round_2dp(x: f64) -> f64 {
    let scaled = x * 100.0;
    (scaled + 1e-9_f64.copysign(scaled)).round() / 100.0
}

/// Per-channel fusion weights for poster, soundtrack and description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelWeights {
    pub poster: f64,
    pub soundtrack: f64,
    pub description: f64,
}

impl ChannelWeights {
    pub fn new(poster: f64, soundtrack: f64, description: f64) -> Result<Self, ScoreError> {
        let weights = ChannelWeights {
            poster,
            soundtrack,
            description,
        };
        weights.validate()?;
        Ok(weights)
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        let ok = |w: f64| w.is_finite() && w > 0.0;
        if ok(self.poster) && ok(self.soundtrack) && ok(self.description) {
            Ok(())
        } else {
            Err(ScoreError::Weights {
                poster: self.poster,
                soundtrack: self.soundtrack,
                description: self.description,
            })
        }
    }

    pub fn total(&self) -> f64 {
        self.poster + self.soundtrack + self.description
    }
}

impl Default for ChannelWeights {
    fn default() -> Self {
        ChannelWeights {
            poster: 1.0,
            soundtrack: 2.0,
            description: 3.0,
        }
    }
}

impl FromStr for ChannelWeights {
    type Err = String;

    /// Parses `p,m,d`, e.g. `1,2,3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected `poster,soundtrack,description`, got `{s}`"));
        }
        let mut nums = [0.0; 3];
        for (slot, part) in nums.iter_mut().zip(&parts) {
            *slot = part
                .parse::<f64>()
                .map_err(|e| format!("bad weight `{part}`: {e}"))?;
        }
        ChannelWeights::new(nums[0], nums[1], nums[2]).map_err(|e| e.to_string())
    }
}

/// Weighted average of the three channel score vectors.
pub fn fuse_channels(
    poster: &EmotionScores,
    soundtrack: &EmotionScores,
    description: &EmotionScores,
    weights: &ChannelWeights,
) -> Result<EmotionScores, ScoreError> {
    weights.validate()?;
    for (channel, scores) in [
        ("poster", poster),
        ("soundtrack", soundtrack),
        ("description", description),
    ] {
        scores.validate().map_err(|e| ScoreError::Channel {
            channel,
            source: Box::new(e),
        })?;
    }
    let total = weights.total();
    let mut out = [0.0; 5];
    for (i, slot) in out.iter_mut().enumerate() {
        let v = (weights.poster * poster.0[i]
            + weights.soundtrack * soundtrack.0[i]
            + weights.description * description.0[i])
            / total;
        // keep the result inside the per-emotion hull despite rounding
        let lo = poster.0[i].min(soundtrack.0[i]).min(description.0[i]);
        let hi = poster.0[i].max(soundtrack.0[i]).max(description.0[i]);
        *slot = v.clamp(lo, hi);
    }
    Ok(EmotionScores(out))
}

/// A subset of the five emotions, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EmotionSet(u8);

impl EmotionSet {
    pub const EMPTY: EmotionSet = EmotionSet(0);
    pub const FULL: EmotionSet = EmotionSet(0b1_1111);

    pub fn insert(&mut self, emotion: Emotion) {
        self.0 |= 1 << emotion.index();
    }

    pub fn contains(&self, emotion: Emotion) -> bool {
        self.0 & (1 << emotion.index()) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn intersection(&self, other: &EmotionSet) -> EmotionSet {
        EmotionSet(self.0 & other.0)
    }

    pub fn union(&self, other: &EmotionSet) -> EmotionSet {
        EmotionSet(self.0 | other.0)
    }

    pub fn is_subset(&self, other: &EmotionSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Emotion> + '_ {
        Emotion::ALL.into_iter().filter(move |e| self.contains(*e))
    }
}

impl FromIterator<Emotion> for EmotionSet {
    fn from_iter<I: IntoIterator<Item = Emotion>>(iter: I) -> Self {
        let mut set = EmotionSet::EMPTY;
        for emotion in iter {
            set.insert(emotion);
        }
        set
    }
}

impl fmt::Display for EmotionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter().map(|e| e.to_string()).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

impl Serialize for EmotionSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for EmotionSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let emotions = Vec::<Emotion>::deserialize(deserializer)?;
        Ok(emotions.into_iter().collect())
    }
}

/// Emotions whose score is strictly greater than `threshold`.
pub fn to_emotion_set(scores: &EmotionScores, threshold: f64) -> EmotionSet {
    scores
        .iter()
        .filter(|&(_, v)| v > threshold)
        .map(|(e, _)| e)
        .collect()
}

/// |A ∩ B| / |A ∪ B|, with two empty sets scoring 0.
pub fn jaccard(a: &EmotionSet, b: &EmotionSet) -> f64 {
    jaccard_ratio(a.intersection(b).len(), a.union(b).len())
}

/// Jaccard similarity over arbitrary ordered sets, same empty-set convention
/// as [`jaccard`].
pub fn jaccard_sets<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let intersection = a.intersection(b).count();
    jaccard_ratio(intersection, a.len() + b.len() - intersection)
}

fn jaccard_ratio(intersection: usize, union: usize) -> f64 {
    if union == 0 {
        0.0
    } else {
        intersection as f64 / union as f64
    }
}
