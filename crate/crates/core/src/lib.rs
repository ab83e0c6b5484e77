//! Emotion-aware group movie recommendation.
//!
//! Each movie gets a fused five-emotion profile from its poster colors,
//! soundtrack segment labels and description text. Candidates are ranked by
//! mean Jaccard similarity to the group's favorites, and group feedback on
//! the pick passes through a Mamdani fuzzy system whose interquartile range
//! decides whether the group accepts it.

pub mod analytics;
pub mod catalog;
pub mod channels;
pub mod consensus;
pub mod emotion;
pub mod fuzzy;
pub mod recommender;

use thiserror::Error;

pub use catalog::{load_catalog, save_catalog, Catalog, CatalogError, MovieRecord, Provenance};
pub use consensus::{
    consensus_from_feedback, evaluate_consensus, ConsensusError, ConsensusLevel, ConsensusReport,
    FeedbackEntry, FeedbackFile, IqrBands, Verdict,
};
pub use emotion::{
    fuse_channels, jaccard, round_2dp, to_emotion_set, ChannelWeights, Emotion, EmotionScores,
    EmotionSet, ScoreError, DEFAULT_THRESHOLD,
};
pub use fuzzy::{FuzzyError, FuzzySystem};
pub use recommender::{
    movie_profile, prediction_accuracy, recommend, GroupRequest, ProfileContext, RankedRecommendation,
    RecommendError,
};

/// Any error the library can produce.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Channel(#[from] channels::ChannelError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Fetch(#[from] catalog::FetchError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Analytics(#[from] analytics::AnalyticsError),
}
