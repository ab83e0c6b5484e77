//! Soundtrack scoring from per-segment classifier labels.
//!
//! The external audio classifier emits one integer class per 2-second
//! segment. Only five of its eight classes have a canonical emotion.

use serde::{Deserialize, Serialize};

use super::ChannelError;
use crate::emotion::{Emotion, EmotionScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentClass {
    Neutral = 1,
    Happy = 2,
    Sad = 3,
    Angry = 4,
    Fearful = 5,
    Disgust = 6,
    Surprised = 7,
    Calm = 8,
}

impl SegmentClass {
    pub fn from_code(code: u8) -> Option<Self> {
        use SegmentClass::*;
        Some(match code {
            1 => Neutral,
            2 => Happy,
            3 => Sad,
            4 => Angry,
            5 => Fearful,
            6 => Disgust,
            7 => Surprised,
            8 => Calm,
            _ => return None,
        })
    }

    pub fn emotion(self) -> Option<Emotion> {
        match self {
            SegmentClass::Happy => Some(Emotion::Happy),
            SegmentClass::Sad => Some(Emotion::Sad),
            SegmentClass::Angry => Some(Emotion::Angry),
            SegmentClass::Fearful => Some(Emotion::Fear),
            SegmentClass::Surprised => Some(Emotion::Surprise),
            SegmentClass::Neutral | SegmentClass::Disgust | SegmentClass::Calm => None,
        }
    }
}

/// Ordered classifier codes, one per segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentLabelSequence(pub Vec<u8>);

impl SegmentLabelSequence {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.0.is_empty() {
            return Err(ChannelError::EmptySegments);
        }
        for (index, &code) in self.0.iter().enumerate() {
            if SegmentClass::from_code(code).is_none() {
                return Err(ChannelError::UnknownSegmentCode { index, code });
            }
        }
        Ok(())
    }
}

/// Share of each emotion among the segments that map to one.
pub fn soundtrack_emotions(seq: &SegmentLabelSequence) -> Result<EmotionScores, ChannelError> {
    seq.validate()?;
    let mut counts = [0usize; 5];
    let mut kept = 0usize;
    for &code in &seq.0 {
        if let Some(emotion) = SegmentClass::from_code(code).and_then(SegmentClass::emotion) {
            counts[emotion.index()] += 1;
            kept += 1;
        }
    }
    if kept == 0 {
        return Ok(EmotionScores::ZERO);
    }
    Ok(EmotionScores::from_array(
        counts.map(|c| c as f64 / kept as f64),
    ))
}
