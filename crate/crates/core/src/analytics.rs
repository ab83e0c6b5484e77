//! Corpus statistics: popularity rank series, genre by emotion means,
//! thresholded emotion distribution and Pearson correlations.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::catalog::{Catalog, MovieRecord};
use crate::emotion::{Emotion, EmotionScores};
use crate::recommender::{movie_profile, ProfileContext, ProfileError};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooFew(usize),
    #[error("record `{0}` has no popularity_rank")]
    MissingRank(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("movie `{movie}`: {source}")]
    Profile {
        movie: String,
        #[source]
        source: ProfileError,
    },
    #[error("response row {row}, column {column}: expected 0 or 1, got {value}")]
    NotIndicator { row: usize, column: usize, value: u8 },
}

/// Pearson r, or `Undefined` when a series has zero variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    Value(f64),
    Undefined,
}

impl Correlation {
    pub fn value(self) -> Option<f64> {
        match self {
            Correlation::Value(r) => Some(r),
            Correlation::Undefined => None,
        }
    }
}

impl fmt::Display for Correlation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Correlation::Value(r) => write!(f, "{r:.2}"),
            Correlation::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Correlation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Correlation::Value(r) => s.serialize_f64(*r),
            Correlation::Undefined => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Correlation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map_or(Correlation::Undefined, Correlation::Value))
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(AnalyticsError::TooFew(n));
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Ok(Correlation::Undefined);
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok(Correlation::Value((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// Pearson over all (movie, emotion) cells of two aligned score lists.
pub fn score_correlation(a: &[EmotionScores], b: &[EmotionScores]) -> Result<Correlation, AnalyticsError> {
    if a.len() != b.len() {
        return Err(AnalyticsError::LengthMismatch(a.len(), b.len()));
    }
    let x: Vec<f64> = a.iter().flat_map(|s| *s.as_array()).collect();
    let y: Vec<f64> = b.iter().flat_map(|s| *s.as_array()).collect();
    pearson(&x, &y)
}

#[derive(Debug, Clone, Copy)]
pub struct Profiled<'a> {
    pub record: &'a MovieRecord,
    pub profile: EmotionScores,
}

pub fn profile_corpus<'a>(
    corpus: &'a Catalog,
    ctx: &ProfileContext<'_>,
) -> Result<Vec<Profiled<'a>>, AnalyticsError> {
    corpus
        .records()
        .map(|record| {
            movie_profile(record, ctx)
                .map(|profile| Profiled { record, profile })
                .map_err(|source| AnalyticsError::Profile {
                    movie: record.id.clone(),
                    source,
                })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSeries {
    pub emotion: Emotion,
    pub points: Vec<(u32, f64)>,
    pub mean: f64,
}

pub fn rank_series(corpus: &[Profiled<'_>], emotion: Emotion) -> Result<RankSeries, AnalyticsError> {
    if corpus.is_empty() {
        return Err(AnalyticsError::EmptyCorpus);
    }
    let mut points = corpus
        .iter()
        .map(|p| {
            p.record
                .popularity_rank
                .map(|r| (r, p.profile.get(emotion)))
                .ok_or_else(|| AnalyticsError::MissingRank(p.record.id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    points.sort_by_key(|&(rank, _)| rank);
    let mean = points.iter().map(|&(_, s)| s).sum::<f64>() / points.len() as f64;
    Ok(RankSeries { emotion, points, mean })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GenreMatrix {
    pub rows: BTreeMap<String, EmotionScores>,
}

impl GenreMatrix {
    pub fn get(&self, genre: &str) -> Option<&EmotionScores> {
        self.rows.get(genre)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Per-genre mean profile. A movie counts once toward each of its genres.
pub fn genre_emotion_matrix(corpus: &[Profiled<'_>]) -> GenreMatrix {
    let mut acc: BTreeMap<String, ([f64; 5], usize)> = BTreeMap::new();
    for p in corpus {
        let mut genres: Vec<&String> = p.record.genres.iter().collect();
        genres.sort();
        genres.dedup();
        for g in genres {
            let (sum, n) = acc.entry(g.clone()).or_insert(([0.0; 5], 0));
            for (s, v) in sum.iter_mut().zip(p.profile.as_array()) {
                *s += v;
            }
            *n += 1;
        }
    }
    GenreMatrix {
        rows: acc
            .into_iter()
            .map(|(g, (sum, n))| (g, EmotionScores::from_array(sum.map(|s| s / n as f64))))
            .collect(),
    }
}

/// Share of each emotion among all (movie, emotion) scores above `threshold`.
pub fn emotion_distribution(corpus: &[Profiled<'_>], threshold: f64) -> BTreeMap<Emotion, f64> {
    let mut counts = [0usize; 5];
    for p in corpus {
        for (e, v) in p.profile.iter() {
            if v > threshold {
                counts[e.index()] += 1;
            }
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return BTreeMap::new();
    }
    Emotion::ALL
        .iter()
        .filter(|e| counts[e.index()] > 0)
        .map(|&e| (e, counts[e.index()] as f64 / total as f64))
        .collect()
}

/// Everything `corpus-stats` reports for one catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusStats {
    pub movies: usize,
    pub threshold: f64,
    pub rank_series: Vec<RankSeries>,
    pub genre_matrix: GenreMatrix,
    pub distribution: BTreeMap<Emotion, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey: Option<[[Correlation; 5]; 5]>,
}

/// Rank series for every emotion plus the genre matrix and distribution.
/// A corpus without popularity ranks yields no rank series.
pub fn corpus_stats(corpus: &[Profiled<'_>], threshold: f64) -> Result<CorpusStats, AnalyticsError> {
    if corpus.is_empty() {
        return Err(AnalyticsError::EmptyCorpus);
    }
    let rank_series = if corpus.iter().all(|p| p.record.popularity_rank.is_some()) {
        Emotion::ALL
            .iter()
            .map(|&e| rank_series(corpus, e))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    Ok(CorpusStats {
        movies: corpus.len(),
        threshold,
        rank_series,
        genre_matrix: genre_emotion_matrix(corpus),
        distribution: emotion_distribution(corpus, threshold),
        survey: None,
    })
}

/// Survey file layout: column names in canonical order, then 0/1 rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyFile {
    pub emotions: Vec<Emotion>,
    pub responses: Vec<Response>,
}

/// One survey response: a 0/1 choice per emotion in canonical order.
pub type Response = [u8; 5];

pub fn survey_emotion_correlation(responses: &[Response]) -> Result<[[Correlation; 5]; 5], AnalyticsError> {
    if responses.len() < 2 {
        return Err(AnalyticsError::TooFew(responses.len()));
    }
    for (row, r) in responses.iter().enumerate() {
        if let Some(column) = r.iter().position(|&v| v > 1) {
            return Err(AnalyticsError::NotIndicator { row, column, value: r[column] });
        }
    }
    let columns: Vec<Vec<f64>> = (0..5)
        .map(|c| responses.iter().map(|r| f64::from(r[c])).collect())
        .collect();
    let mut out = [[Correlation::Undefined; 5]; 5];
    for i in 0..5 {
        for j in i..5 {
            let r = pearson(&columns[i], &columns[j])?;
            let r = match (i == j, r) {
                (true, Correlation::Value(_)) => Correlation::Value(1.0),
                (_, r) => r,
            };
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    Ok(out)
}
