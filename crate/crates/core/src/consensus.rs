//! Group consensus over participant feedback: fuzzy feedback values,
//! interquartile range, mean, and the resulting verdict.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emotion::round_2dp;
use crate::fuzzy::{FuzzyError, FuzzySystem};

pub const DEFAULT_MEAN_THRESHOLD: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum ConsensusError {
    #[error("quantile of an empty list")]
    EmptyValues,
    #[error("quantile level {0} is outside [0, 1]")]
    BadQuantile(f64),
    #[error("insufficient feedback: need at least 2 values, got {0}")]
    InsufficientFeedback(usize),
    #[error("participant `{participant}`: {field} {value} is outside [0, 10]")]
    OutOfRange {
        participant: String,
        field: &'static str,
        value: f64,
    },
    #[error("non-finite feedback value {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

/// One participant's reaction to a recommendation, both on a 0–10 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackEntry {
    pub participant: String,
    pub agreement: f64,
    pub confidence: f64,
}

impl FeedbackEntry {
    pub fn new(participant: impl Into<String>, agreement: f64, confidence: f64) -> Result<Self, ConsensusError> {
        let entry = FeedbackEntry {
            participant: participant.into(),
            agreement,
            confidence,
        };
        entry.validate()?;
        Ok(entry)
    }

    pub fn validate(&self) -> Result<(), ConsensusError> {
        for (field, value) in [("agreement", self.agreement), ("confidence", self.confidence)] {
            if !(value.is_finite() && (0.0..=10.0).contains(&value)) {
                return Err(ConsensusError::OutOfRange {
                    participant: self.participant.clone(),
                    field,
                    value,
                });
            }
        }
        Ok(())
    }
}

/// On-disk form of a round of feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackFile {
    pub feedback: Vec<FeedbackEntry>,
}

pub fn feedback_value(entry: &FeedbackEntry, fis: &FuzzySystem) -> Result<f64, ConsensusError> {
    entry.validate()?;
    Ok(fis.infer(entry.agreement, entry.confidence)?)
}

/// Linear-interpolation quantile on the sorted values: position
/// `q * (n - 1)`, interpolating between its neighbours.
pub fn quantile(values: &[f64], q: f64) -> Result<f64, ConsensusError> {
    if values.is_empty() {
        return Err(ConsensusError::EmptyValues);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(ConsensusError::BadQuantile(q));
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(ConsensusError::NonFinite(bad));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    match sorted.get(lo + 1) {
        Some(&next) => sorted[lo] + frac * (next - sorted[lo]),
        None => sorted[lo],
    }
}

pub fn iqr(values: &[f64]) -> Result<f64, ConsensusError> {
    Ok(quantile(values, 0.75)? - quantile(values, 0.25)?)
}

pub fn mean(values: &[f64]) -> Result<f64, ConsensusError> {
    if values.is_empty() {
        return Err(ConsensusError::EmptyValues);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConsensusLevel {
    High,
    Medium,
    None,
}

impl fmt::Display for ConsensusLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConsensusLevel::High => "High",
            ConsensusLevel::Medium => "Medium",
            ConsensusLevel::None => "None",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accepted,
    ReEvaluate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accepted => "Accepted",
            Verdict::ReEvaluate => "ReEvaluate",
        })
    }
}

/// IQR upper edges for the High and Medium levels; anything above
/// `medium_max` is no consensus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqrBands {
    pub high_max: f64,
    pub medium_max: f64,
}

impl Default for IqrBands {
    fn default() -> Self {
        IqrBands {
            high_max: 2.0,
            medium_max: 4.0,
        }
    }
}

impl IqrBands {
    pub fn level(&self, iqr: f64) -> ConsensusLevel {
        if iqr <= self.high_max {
            ConsensusLevel::High
        } else if iqr <= self.medium_max {
            ConsensusLevel::Medium
        } else {
            ConsensusLevel::None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusReport {
    pub feedback_values: Vec<f64>,
    pub iqr: f64,
    pub mean: f64,
    pub level: ConsensusLevel,
    pub verdict: Verdict,
}

impl fmt::Display for ConsensusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let values: Vec<String> = self
            .feedback_values
            .iter()
            .map(|v| format!("{:.2}", round_2dp(*v)))
            .collect();
        writeln!(f, "feedback values: {}", values.join(", "))?;
        writeln!(f, "iqr: {:.2}", round_2dp(self.iqr))?;
        writeln!(f, "mean: {:.2}", round_2dp(self.mean))?;
        writeln!(f, "verdict: {}", self.verdict)?;
        write!(f, "level: {}", self.level)
    }
}

pub fn evaluate_consensus(
    values: &[f64],
    bands: &IqrBands,
    mean_threshold: f64,
) -> Result<ConsensusReport, ConsensusError> {
    if values.len() < 2 {
        return Err(ConsensusError::InsufficientFeedback(values.len()));
    }
    let iqr = iqr(values)?;
    let mean = mean(values)?;
    let level = bands.level(iqr);
    let verdict = if level != ConsensusLevel::None && mean >= mean_threshold {
        Verdict::Accepted
    } else {
        Verdict::ReEvaluate
    };
    Ok(ConsensusReport {
        feedback_values: values.to_vec(),
        iqr,
        mean,
        level,
        verdict,
    })
}

/// Runs every entry through the inference system, then evaluates the group.
pub fn consensus_from_feedback(
    entries: &[FeedbackEntry],
    fis: &FuzzySystem,
    bands: &IqrBands,
    mean_threshold: f64,
) -> Result<ConsensusReport, ConsensusError> {
    let values = entries
        .iter()
        .map(|e| feedback_value(e, fis))
        .collect::<Result<Vec<_>, _>>()?;
    evaluate_consensus(&values, bands, mean_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TABLE: [f64; 4] = [5.0, 8.44, 4.99, 3.75];

    #[test]
    fn quantile_examples() {
        let sorted = [3.75, 4.99, 5.0, 8.44];
        // hand evaluation: p = 0.75 -> 3.75 + 0.75 * 1.24; p = 2.25 -> 5.0 + 0.25 * 3.44
        assert!((quantile(&sorted, 0.25).unwrap() - 4.68).abs() < 1e-12);
        assert!((quantile(&sorted, 0.75).unwrap() - 5.86).abs() < 1e-12);
        for q in [0.0, 0.3, 0.5, 1.0] {
            assert_eq!(quantile(&[7.0, 7.0, 7.0], q).unwrap(), 7.0);
        }
        assert_eq!(quantile(&[], 0.5), Err(ConsensusError::EmptyValues));
        assert!(quantile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn table_values_give_high_consensus() {
        let r = evaluate_consensus(&TABLE, &IqrBands::default(), DEFAULT_MEAN_THRESHOLD).unwrap();
        assert!((r.iqr - 1.18).abs() < 0.01);
        assert!((r.mean - 5.54).abs() < 0.01);
        assert_eq!(r.level, ConsensusLevel::High);
        assert_eq!(r.verdict, Verdict::Accepted);
        assert_eq!(r.feedback_values, TABLE.to_vec());
    }

    #[test]
    fn constant_feedback() {
        let r = evaluate_consensus(&[5.0; 4], &IqrBands::default(), 5.0).unwrap();
        assert_eq!((r.iqr, r.mean, r.level), (0.0, 5.0, ConsensusLevel::High));
    }

    #[test]
    fn polarized_feedback_has_no_consensus() {
        let r = evaluate_consensus(&[0.0, 0.0, 10.0, 10.0], &IqrBands::default(), 5.0).unwrap();
        assert_eq!(r.iqr, 10.0);
        assert_eq!(r.level, ConsensusLevel::None);
        assert_eq!(r.verdict, Verdict::ReEvaluate);
    }

    #[test]
    fn low_mean_triggers_reevaluation() {
        let r = evaluate_consensus(&[2.0, 2.5, 3.0], &IqrBands::default(), 5.0).unwrap();
        assert_eq!(r.level, ConsensusLevel::High);
        assert_eq!(r.verdict, Verdict::ReEvaluate);
    }

    #[test]
    fn band_edges() {
        let b = IqrBands::default();
        assert_eq!(b.level(2.00), ConsensusLevel::High);
        assert_eq!(b.level(2.01), ConsensusLevel::Medium);
        assert_eq!(b.level(4.00), ConsensusLevel::Medium);
        assert_eq!(b.level(4.01), ConsensusLevel::None);
    }

    #[test]
    fn needs_two_values() {
        assert_eq!(
            evaluate_consensus(&[5.0], &IqrBands::default(), 5.0),
            Err(ConsensusError::InsufficientFeedback(1))
        );
    }

    #[test]
    fn feedback_entry_range() {
        assert!(FeedbackEntry::new("p", 11.0, 5.0).is_err());
        assert!(FeedbackEntry::new("p", 5.0, -0.1).is_err());
        assert!(FeedbackEntry::new("p", 10.0, 0.0).is_ok());
    }

    #[test]
    fn report_text_ends_with_level() {
        let r = evaluate_consensus(&TABLE, &IqrBands::default(), 5.0).unwrap();
        let text = r.to_string();
        assert!(text.ends_with("level: High"), "{text}");
        assert!(text.contains("iqr: 1.18"));
    }

    fn median_oracle(values: &[f64]) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    }

    proptest! {
        #[test]
        fn median_matches_oracle(values in prop::collection::vec(0.0..10.0f64, 1..30)) {
            let q = quantile(&values, 0.5).unwrap();
            prop_assert!((q - median_oracle(&values)).abs() < 1e-12);
        }

        #[test]
        fn iqr_nonnegative_and_permutation_invariant(values in prop::collection::vec(0.0..10.0f64, 2..30)) {
            let a = iqr(&values).unwrap();
            let mut rev = values.clone();
            rev.reverse();
            prop_assert!(a >= 0.0);
            prop_assert!((a - iqr(&rev).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn adding_the_median_never_widens_iqr(values in prop::collection::vec(0.0..10.0f64, 2..30)) {
            let before = iqr(&values).unwrap();
            let mut more = values.clone();
            more.push(median_oracle(&values));
            prop_assert!(iqr(&more).unwrap() <= before + 1e-12);
        }
    }
}
