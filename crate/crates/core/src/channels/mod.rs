//! Per-channel emotion scoring: description text, poster colors and
//! soundtrack segment labels.

pub mod poster;
pub mod soundtrack;
pub mod text;

use thiserror::Error;

pub use poster::{palette_emotions, poster_emotions, ColorEmotionKb, KbEntry, PosterImage, Rgb};
pub use soundtrack::{soundtrack_emotions, SegmentClass, SegmentLabelSequence};
pub use text::{text_emotions, EmotionLexicon};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("color KB: {0}")]
    ColorKb(String),
    #[error("image: {0}")]
    Image(String),
    #[error("segment {index}: unknown label code {code} (expected 1-8)")]
    UnknownSegmentCode { index: usize, code: u8 },
    #[error("soundtrack label sequence is empty")]
    EmptySegments,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
