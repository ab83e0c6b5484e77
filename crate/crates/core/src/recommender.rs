//! Group recommendation: fused movie profiles, per-participant Jaccard
//! against each favorite, mean aggregation and genre-aware ranking.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{decode_poster, Catalog, CatalogError, MovieRecord, PosterRef};
use crate::channels::{
    palette_emotions, poster_emotions, soundtrack_emotions, text_emotions, ChannelError,
    ColorEmotionKb, EmotionLexicon,
};
use crate::emotion::{
    fuse_channels, jaccard, round_2dp, to_emotion_set, ChannelWeights, EmotionScores, ScoreError,
    DEFAULT_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("no {0} input and no cached channel scores")]
    MissingChannel(&'static str),
    #[error("{channel} channel: {source}")]
    Channel {
        channel: &'static str,
        #[source]
        source: ChannelError,
    },
    #[error("poster: {0}")]
    Poster(#[source] CatalogError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error("movie `{movie}`: {source}")]
    Profile {
        movie: String,
        #[source]
        source: ProfileError,
    },
    #[error("group request needs at least one participant")]
    NoParticipants,
    #[error("group request needs at least one candidate")]
    NoCandidates,
    #[error("candidate `{0}` listed more than once")]
    DuplicateCandidate(String),
    #[error("participant `{0}` listed more than once")]
    DuplicateParticipant(String),
    #[error("threshold must be a finite number in [0,1), got {0}")]
    BadThreshold(f64),
    #[error(transparent)]
    Weights(#[from] ScoreError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("predicted has {predicted} entries but human has {human}")]
    LengthMismatch { predicted: usize, human: usize },
    #[error("entry {index}: predicted id `{predicted}` does not match human id `{human}`")]
    IdMismatch {
        index: usize,
        predicted: String,
        human: String,
    },
    #[error("accuracy needs at least one movie")]
    EmptyAccuracy,
}

/// Inputs needed to compute a profile from raw media.
#[derive(Debug, Clone)]
pub struct ProfileContext<'a> {
    pub weights: ChannelWeights,
    pub lexicon: &'a EmotionLexicon,
    pub kb: &'a ColorEmotionKb,
    /// Directory that relative poster paths resolve against.
    pub media_root: Option<PathBuf>,
}

impl<'a> ProfileContext<'a> {
    pub fn new(weights: ChannelWeights, lexicon: &'a EmotionLexicon, kb: &'a ColorEmotionKb) -> Self {
        ProfileContext {
            weights,
            lexicon,
            kb,
            media_root: None,
        }
    }

    pub fn with_media_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.media_root = Some(root.into());
        self
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.media_root {
            Some(root) if path.is_relative() => root.join(path),
            _ => path.to_path_buf(),
        }
    }
}

/// The three per-channel score vectors of a movie, from cache or media.
pub fn channel_scores(
    movie: &MovieRecord,
    ctx: &ProfileContext<'_>,
) -> Result<[EmotionScores; 3], ProfileError> {
    if let Some(c) = &movie.cached_channels {
        return Ok([c.poster, c.soundtrack, c.description]);
    }
    let poster = match &movie.poster {
        None => return Err(ProfileError::MissingChannel("poster")),
        Some(PosterRef::Palette(swatches)) => {
            let sw: Vec<_> = swatches.iter().map(|s| (s.color, s.count)).collect();
            palette_emotions(&sw, ctx.kb)
        }
        Some(PosterRef::Path(p)) => {
            let img = decode_poster(ctx.resolve(p)).map_err(ProfileError::Poster)?;
            poster_emotions(&img, ctx.kb)
        }
    };
    let labels = movie
        .soundtrack_labels
        .as_ref()
        .ok_or(ProfileError::MissingChannel("soundtrack"))?;
    let soundtrack = soundtrack_emotions(labels).map_err(|source| ProfileError::Channel {
        channel: "soundtrack",
        source,
    })?;
    if movie.overview.trim().is_empty() {
        return Err(ProfileError::MissingChannel("description"));
    }
    let description = text_emotions(&movie.overview, ctx.lexicon);
    Ok([poster, soundtrack, description])
}

/// Fused emotion profile. A cached profile wins over cached channels, which
/// win over recomputation from media.
pub fn movie_profile(
    movie: &MovieRecord,
    ctx: &ProfileContext<'_>,
) -> Result<EmotionScores, ProfileError> {
    if let Some(p) = movie.cached_profile {
        return Ok(p);
    }
    let [p, m, d] = channel_scores(movie, ctx)?;
    Ok(fuse_channels(&p, &m, &d, &ctx.weights)?)
}

fn annotated(movie: &MovieRecord, ctx: &ProfileContext<'_>) -> Result<EmotionScores, RecommendError> {
    movie_profile(movie, ctx).map_err(|source| RecommendError::Profile {
        movie: movie.id.clone(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct Participant {
    pub id: String,
    pub favorite: MovieRecord,
}

#[derive(Debug, Clone)]
pub struct GroupRequest {
    pub participants: Vec<Participant>,
    pub candidates: Vec<MovieRecord>,
    pub threshold: f64,
    pub weights: ChannelWeights,
    pub genre_filter: bool,
}

impl GroupRequest {
    pub fn new(participants: Vec<Participant>, candidates: Vec<MovieRecord>) -> Self {
        GroupRequest {
            participants,
            candidates,
            threshold: DEFAULT_THRESHOLD,
            weights: ChannelWeights::default(),
            genre_filter: false,
        }
    }

    pub fn validate(&self) -> Result<(), RecommendError> {
        if self.participants.is_empty() {
            return Err(RecommendError::NoParticipants);
        }
        if self.candidates.is_empty() {
            return Err(RecommendError::NoCandidates);
        }
        if !(self.threshold.is_finite() && (0.0..1.0).contains(&self.threshold)) {
            return Err(RecommendError::BadThreshold(self.threshold));
        }
        self.weights.validate()?;
        let mut seen = HashSet::new();
        for c in &self.candidates {
            if !seen.insert(c.id.as_str()) {
                return Err(RecommendError::DuplicateCandidate(c.id.clone()));
            }
        }
        let mut seen = HashSet::new();
        for p in &self.participants {
            if !seen.insert(p.id.as_str()) {
                return Err(RecommendError::DuplicateParticipant(p.id.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantScore {
    pub participant: String,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub movie_id: String,
    pub title: String,
    pub j_agg: f64,
    pub per_participant: Vec<ParticipantScore>,
    pub genre_affinity: usize,
    pub profile: EmotionScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRecommendation {
    pub items: Vec<RankedItem>,
}

impl RankedRecommendation {
    pub fn top(&self) -> Option<&RankedItem> {
        self.items.first()
    }

    pub fn get(&self, movie_id: &str) -> Option<&RankedItem> {
        self.items.iter().find(|i| i.movie_id == movie_id)
    }

    pub fn position(&self, movie_id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.movie_id == movie_id)
    }
}

impl fmt::Display for RankedRecommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.items.iter().map(|i| i.title.len()).max().unwrap_or(5).max(5);
        writeln!(f, "{:>4}  {:<width$}  {:>5}  {:>5}  per-participant", "rank", "title", "J_agg", "genre")?;
        for (n, item) in self.items.iter().enumerate() {
            let per: Vec<String> = item
                .per_participant
                .iter()
                .map(|p| format!("{}={:.2}", p.participant, round_2dp(p.jaccard)))
                .collect();
            writeln!(
                f,
                "{:>4}  {:<width$}  {:>5.2}  {:>5}  {}",
                n + 1,
                item.title,
                round_2dp(item.j_agg),
                item.genre_affinity,
                per.join(" ")
            )?;
        }
        Ok(())
    }
}

// Scores that agree to 1e-9 count as tied so float noise cannot outrank
// the genre tiebreak.
fn score_key(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

fn rank_order(a: &RankedItem, b: &RankedItem) -> Ordering {
    score_key(b.j_agg)
        .cmp(&score_key(a.j_agg))
        .then(b.genre_affinity.cmp(&a.genre_affinity))
        .then_with(|| a.movie_id.cmp(&b.movie_id))
}

pub fn recommend(
    req: &GroupRequest,
    ctx: &ProfileContext<'_>,
) -> Result<RankedRecommendation, RecommendError> {
    req.validate()?;
    let ctx = ProfileContext {
        weights: req.weights,
        ..ctx.clone()
    };
    let favorites = req
        .participants
        .iter()
        .map(|p| Ok((p.id.as_str(), to_emotion_set(&annotated(&p.favorite, &ctx)?, req.threshold))))
        .collect::<Result<Vec<_>, RecommendError>>()?;
    let favorite_genres: BTreeSet<String> = req
        .participants
        .iter()
        .flat_map(|p| p.favorite.genres.iter().map(|g| g.to_lowercase()))
        .collect();

    let mut items = Vec::with_capacity(req.candidates.len());
    for movie in &req.candidates {
        let genres: BTreeSet<String> = movie.genres.iter().map(|g| g.to_lowercase()).collect();
        let genre_affinity = genres.intersection(&favorite_genres).count();
        if req.genre_filter && genre_affinity == 0 {
            continue;
        }
        let profile = annotated(movie, &ctx)?;
        let set = to_emotion_set(&profile, req.threshold);
        let per_participant: Vec<ParticipantScore> = favorites
            .iter()
            .map(|(pid, fav)| ParticipantScore {
                participant: pid.to_string(),
                jaccard: jaccard(&set, fav),
            })
            .collect();
        let j_agg = per_participant.iter().map(|p| p.jaccard).sum::<f64>() / favorites.len() as f64;
        items.push(RankedItem {
            movie_id: movie.id.clone(),
            title: movie.title.clone(),
            j_agg,
            per_participant,
            genre_affinity,
            profile,
        });
    }
    items.sort_by(rank_order);
    Ok(RankedRecommendation { items })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FavoriteRef {
    Id(String),
    Inline(Box<MovieRecord>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantSpec {
    pub id: String,
    pub favorite: FavoriteRef,
}

/// On-disk group request; movie ids resolve against a catalog.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupRequestFile {
    pub participants: Vec<ParticipantSpec>,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<ChannelWeights>,
    #[serde(default)]
    pub genre_filter: bool,
}

impl GroupRequestFile {
    pub fn resolve(&self, catalog: &Catalog) -> Result<GroupRequest, RecommendError> {
        let participants = self
            .participants
            .iter()
            .map(|p| {
                let favorite = match &p.favorite {
                    FavoriteRef::Id(id) => catalog.require(id)?.clone(),
                    FavoriteRef::Inline(r) => {
                        r.validate()?;
                        (**r).clone()
                    }
                };
                Ok(Participant {
                    id: p.id.clone(),
                    favorite,
                })
            })
            .collect::<Result<Vec<_>, RecommendError>>()?;
        let candidates = self
            .candidates
            .iter()
            .map(|id| Ok(catalog.require(id)?.clone()))
            .collect::<Result<Vec<_>, RecommendError>>()?;
        let mut req = GroupRequest::new(participants, candidates);
        if let Some(t) = self.threshold {
            req.threshold = t;
        }
        if let Some(w) = self.weights {
            req.weights = w;
        }
        req.genre_filter = self.genre_filter;
        req.validate()?;
        Ok(req)
    }
}

/// Scores tagged with the movie they belong to, as stored in accuracy files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledScores {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub scores: EmotionScores,
}

/// Accuracy input file: `{"movies": [LabeledScores, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledScoresFile {
    pub movies: Vec<LabeledScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub per_movie: Vec<f64>,
    pub mean: f64,
}

pub fn prediction_accuracy(
    predicted: &[EmotionScores],
    human: &[EmotionScores],
    threshold: f64,
) -> Result<AccuracyReport, RecommendError> {
    if predicted.len() != human.len() {
        return Err(RecommendError::LengthMismatch {
            predicted: predicted.len(),
            human: human.len(),
        });
    }
    if predicted.is_empty() {
        return Err(RecommendError::EmptyAccuracy);
    }
    let per_movie: Vec<f64> = predicted
        .iter()
        .zip(human)
        .map(|(p, h)| jaccard(&to_emotion_set(p, threshold), &to_emotion_set(h, threshold)))
        .collect();
    let mean = per_movie.iter().sum::<f64>() / per_movie.len() as f64;
    Ok(AccuracyReport { per_movie, mean })
}

/// Pairs two labeled lists by position, insisting the ids line up.
pub fn labeled_accuracy(
    predicted: &[LabeledScores],
    human: &[LabeledScores],
    threshold: f64,
) -> Result<AccuracyReport, RecommendError> {
    if predicted.len() != human.len() {
        return Err(RecommendError::LengthMismatch {
            predicted: predicted.len(),
            human: human.len(),
        });
    }
    for (index, (p, h)) in predicted.iter().zip(human).enumerate() {
        if p.id != h.id {
            return Err(RecommendError::IdMismatch {
                index,
                predicted: p.id.clone(),
                human: h.id.clone(),
            });
        }
    }
    let p: Vec<_> = predicted.iter().map(|s| s.scores).collect();
    let h: Vec<_> = human.iter().map(|s| s.scores).collect();
    prediction_accuracy(&p, &h, threshold)
}
