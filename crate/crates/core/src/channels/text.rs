//! Lexicon-based emotion scoring for movie overviews.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::ChannelError;
use crate::emotion::{Emotion, EmotionScores};

const DEFAULT_LEXICON: &str = include_str!("../../data/default_lexicon.csv");

/// Token → weighted emotions, plus a stopword list.
///
/// File format: one record per line, `token,emotion,weight`. A record whose
/// emotion field is `stopword` adds the token to the stopword list and takes
/// no weight. Blank lines and lines starting with `#` are skipped.
#[derive(Debug, Clone, Default)]
pub struct EmotionLexicon {
    entries: HashMap<String, Vec<(Emotion, f64)>>,
    stopwords: HashSet<String>,
}

impl EmotionLexicon {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ChannelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ChannelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ChannelError> {
        let mut lexicon = EmotionLexicon::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| ChannelError::Lexicon {
                line: lineno + 1,
                message,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let token = normalize(fields[0]);
            if token.is_empty() {
                return Err(bad("empty token".into()));
            }
            match fields.as_slice() {
                [_, kind] | [_, kind, _] if kind.eq_ignore_ascii_case("stopword") => {
                    lexicon.stopwords.insert(token);
                }
                [_, emotion, weight] => {
                    let emotion: Emotion = emotion.parse().map_err(|e| bad(format!("{e}")))?;
                    let weight: f64 = weight
                        .parse()
                        .map_err(|_| bad(format!("weight `{weight}` is not a number")))?;
                    if !(weight.is_finite() && weight > 0.0) {
                        return Err(bad(format!("weight {weight} must be > 0")));
                    }
                    lexicon.insert(&token, emotion, weight);
                }
                _ => {
                    return Err(bad(format!(
                        "expected `token,emotion,weight`, got {} field(s)",
                        fields.len()
                    )))
                }
            }
        }
        Ok(lexicon)
    }

    pub fn insert(&mut self, token: &str, emotion: Emotion, weight: f64) {
        let slot = self.entries.entry(normalize(token)).or_default();
        match slot.iter_mut().find(|(e, _)| *e == emotion) {
            Some((_, w)) => *w += weight,
            None => slot.push((emotion, weight)),
        }
    }

    pub fn add_stopword(&mut self, token: &str) {
        self.stopwords.insert(normalize(token));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact match first, then the form with a trailing plural `s` removed.
    fn lookup(&self, token: &str) -> Option<&[(Emotion, f64)]> {
        if let Some(hits) = self.entries.get(token) {
            return Some(hits);
        }
        let stem = token.strip_suffix('s').filter(|s| s.len() >= 3 && !s.ends_with('s'))?;
        self.entries.get(stem).map(Vec::as_slice)
    }
}

fn normalize(token: &str) -> String {
    token.trim().to_lowercase()
}

pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(normalize)
}

/// Sums lexicon weights per emotion over the overview's tokens and
/// normalizes to a distribution; no hits gives all zeros.
pub fn text_emotions(text: &str, lexicon: &EmotionLexicon) -> EmotionScores {
    let mut totals = EmotionScores::ZERO;
    for token in tokenize(text) {
        if lexicon.stopwords.contains(&token) {
            continue;
        }
        if let Some(hits) = lexicon.lookup(&token) {
            for &(emotion, weight) in hits {
                totals.set(emotion, totals.get(emotion) + weight);
            }
        }
    }
    totals.normalized()
}
