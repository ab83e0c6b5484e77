//! Two-input Mamdani inference with trapezoidal membership functions.
//!
//! Operators: AND = min, implication = clip, aggregation = max, and centroid
//! defuzzification on a uniform grid over the output universe.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_FIS: &str = include_str!("../data/default_fis.json");

/// Number of samples used by centroid defuzzification.
pub const CENTROID_GRID: usize = 1001;

const EDGE_EPS: f64 = 1e-9;
const COVERAGE_STEP: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum FuzzyError {
    #[error("membership function ({a}, {b}, {c}, {d}) must satisfy a <= b <= c <= d")]
    InvalidMf { a: f64, b: f64, c: f64, d: f64 },
    #[error("variable `{variable}`: {message}")]
    InvalidVariable { variable: String, message: String },
    #[error("rule {rule}: `{label}` is not a term of `{variable}`")]
    UnknownTerm {
        rule: usize,
        variable: String,
        label: String,
    },
    #[error("rule base has no rule for ({0}, {1})")]
    MissingRule(String, String),
    #[error("rule base has more than one rule for ({0}, {1})")]
    DuplicateRule(String, String),
    #[error("no rule fired for inputs ({0}, {1})")]
    NoRuleFired(f64, f64),
    #[error("FIS definition: {0}")]
    Parse(String),
}

/// Trapezoid with feet `a`, `d` and shoulders `b`, `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidMf {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl TrapezoidMf {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        let finite = [a, b, c, d].iter().all(|v| v.is_finite());
        if !finite || !(a <= b && b <= c && c <= d) {
            return Err(FuzzyError::InvalidMf { a, b, c, d });
        }
        Ok(TrapezoidMf { a, b, c, d })
    }

    pub fn params(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// `max(min((x-a)/(b-a), 1, (d-x)/(d-c)), 0)`; a vertical edge (a = b or
    /// c = d) is a step that includes its top point.
    pub fn membership(&self, x: f64) -> f64 {
        if x < self.a || x > self.d {
            0.0
        } else if x >= self.b && x <= self.c {
            1.0
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else {
            (self.d - x) / (self.d - self.c)
        }
    }
}

impl Serialize for TrapezoidMf {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.params().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrapezoidMf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [a, b, c, d4] = <[f64; 4]>::deserialize(d)?;
        TrapezoidMf::new(a, b, c, d4).map_err(serde::de::Error::custom)
    }
}

/// Free-function form of [`TrapezoidMf::membership`].
pub fn membership(mf: &TrapezoidMf, x: f64) -> f64 {
    mf.membership(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub mf: TrapezoidMf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticVariable {
    pub name: String,
    pub universe: [f64; 2],
    pub terms: Vec<Term>,
}

impl LinguisticVariable {
    pub fn new(name: impl Into<String>, universe: [f64; 2], terms: Vec<Term>) -> Result<Self, FuzzyError> {
        let var = LinguisticVariable {
            name: name.into(),
            universe,
            terms,
        };
        var.validate()?;
        Ok(var)
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        let bad = |message: String| {
            Err(FuzzyError::InvalidVariable {
                variable: self.name.clone(),
                message,
            })
        };
        let [lo, hi] = self.universe;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("universe [{lo}, {hi}] is empty"));
        }
        if self.terms.is_empty() {
            return bad("no terms".into());
        }
        for (i, t) in self.terms.iter().enumerate() {
            if self.terms[..i].iter().any(|o| o.label == t.label) {
                return bad(format!("duplicate term `{}`", t.label));
            }
            let [a, _, _, d] = t.mf.params();
            if a < lo - EDGE_EPS || d > hi + EDGE_EPS {
                return bad(format!("term `{}` [{a}, {d}] leaves the universe", t.label));
            }
        }
        let steps = ((hi - lo) / COVERAGE_STEP).round() as usize;
        for k in 0..=steps {
            let x = (lo + k as f64 * COVERAGE_STEP).min(hi);
            if self.terms.iter().all(|t| t.mf.membership(x) <= 0.0) {
                return bad(format!("no term covers x = {x:.2}"));
            }
        }
        Ok(())
    }

    pub fn term_index(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.label == label)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.universe[0], self.universe[1])
    }

    pub fn fuzzify(&self, x: f64) -> Vec<f64> {
        self.terms.iter().map(|t| t.mf.membership(x)).collect()
    }
}

/// `IF first is <when.0> AND second is <when.1> THEN output is <then>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzyRule {
    #[serde(rename = "if")]
    pub when: (String, String),
    pub then: String,
}

impl FuzzyRule {
    pub fn new(first: &str, second: &str, then: &str) -> Self {
        FuzzyRule {
            when: (first.to_string(), second.to_string()),
            then: then.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ResolvedRule {
    first: usize,
    second: usize,
    then: usize,
}

/// A validated inference system: two inputs, one output and a complete rule
/// base.
#[derive(Debug, Clone)]
pub struct FuzzySystem {
    inputs: [LinguisticVariable; 2],
    output: LinguisticVariable,
    rules: Vec<FuzzyRule>,
    resolved: Vec<ResolvedRule>,
}

#[derive(Serialize, Deserialize)]
struct FisFile {
    inputs: [LinguisticVariable; 2],
    output: LinguisticVariable,
    rules: Vec<FuzzyRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDegree {
    pub label: String,
    pub degree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFiring {
    /// 1-based position in the rule base.
    pub rule: usize,
    pub when: (String, String),
    pub then: String,
    pub strength: f64,
}

/// Intermediate quantities of one inference, for explanation and plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub inputs: (f64, f64),
    pub first: Vec<TermDegree>,
    pub second: Vec<TermDegree>,
    pub rules: Vec<RuleFiring>,
    pub clip_levels: Vec<TermDegree>,
    pub value: f64,
}

impl Activation {
    /// Rules with non-zero firing strength.
    pub fn fired(&self) -> impl Iterator<Item = &RuleFiring> {
        self.rules.iter().filter(|r| r.strength > 0.0)
    }
}

impl FuzzySystem {
    pub fn new(
        first: LinguisticVariable,
        second: LinguisticVariable,
        output: LinguisticVariable,
        rules: Vec<FuzzyRule>,
    ) -> Result<Self, FuzzyError> {
        first.validate()?;
        second.validate()?;
        output.validate()?;
        let mut resolved = Vec::with_capacity(rules.len());
        for (i, rule) in rules.iter().enumerate() {
            let lookup = |var: &LinguisticVariable, label: &str| {
                var.term_index(label).ok_or_else(|| FuzzyError::UnknownTerm {
                    rule: i + 1,
                    variable: var.name.clone(),
                    label: label.to_string(),
                })
            };
            resolved.push(ResolvedRule {
                first: lookup(&first, &rule.when.0)?,
                second: lookup(&second, &rule.when.1)?,
                then: lookup(&output, &rule.then)?,
            });
        }
        for (i, a) in first.terms.iter().enumerate() {
            for (j, b) in second.terms.iter().enumerate() {
                let n = resolved.iter().filter(|r| r.first == i && r.second == j).count();
                match n {
                    0 => return Err(FuzzyError::MissingRule(a.label.clone(), b.label.clone())),
                    1 => {}
                    _ => return Err(FuzzyError::DuplicateRule(a.label.clone(), b.label.clone())),
                }
            }
        }
        Ok(FuzzySystem {
            inputs: [first, second],
            output,
            rules,
            resolved,
        })
    }

    /// The shipped agreement/confidence → feedback system.
    pub fn builtin() -> Self {
        Self::from_json_str(DEFAULT_FIS).expect("bundled FIS definition is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Self, FuzzyError> {
        let file: FisFile = serde_json::from_str(text).map_err(|e| FuzzyError::Parse(e.to_string()))?;
        let [first, second] = file.inputs;
        FuzzySystem::new(first, second, file.output, file.rules)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, FuzzyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| FuzzyError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let file = FisFile {
            inputs: self.inputs.clone(),
            output: self.output.clone(),
            rules: self.rules.clone(),
        };
        serde_json::to_string_pretty(&file).expect("FIS serializes")
    }

    pub fn first_input(&self) -> &LinguisticVariable {
        &self.inputs[0]
    }

    pub fn second_input(&self) -> &LinguisticVariable {
        &self.inputs[1]
    }

    pub fn output(&self) -> &LinguisticVariable {
        &self.output
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn infer(&self, first: f64, second: f64) -> Result<f64, FuzzyError> {
        self.describe_activation(first, second).map(|a| a.value)
    }

    pub fn describe_activation(&self, first: f64, second: f64) -> Result<Activation, FuzzyError> {
        let x1 = self.inputs[0].clamp(first);
        let x2 = self.inputs[1].clamp(second);
        let mu1 = self.inputs[0].fuzzify(x1);
        let mu2 = self.inputs[1].fuzzify(x2);

        let mut clip = vec![0.0_f64; self.output.terms.len()];
        let mut firings = Vec::with_capacity(self.rules.len());
        for (i, (rule, r)) in self.rules.iter().zip(&self.resolved).enumerate() {
            let strength = mu1[r.first].min(mu2[r.second]);
            clip[r.then] = clip[r.then].max(strength);
            firings.push(RuleFiring {
                rule: i + 1,
                when: rule.when.clone(),
                then: rule.then.clone(),
                strength,
            });
        }
        if clip.iter().all(|&h| h <= 0.0) {
            return Err(FuzzyError::NoRuleFired(first, second));
        }

        let value = self.centroid(&clip);
        let degrees = |var: &LinguisticVariable, mu: &[f64]| {
            var.terms
                .iter()
                .zip(mu)
                .map(|(t, &degree)| TermDegree {
                    label: t.label.clone(),
                    degree,
                })
                .collect::<Vec<_>>()
        };
        Ok(Activation {
            inputs: (x1, x2),
            first: degrees(&self.inputs[0], &mu1),
            second: degrees(&self.inputs[1], &mu2),
            rules: firings,
            clip_levels: degrees(&self.output, &clip),
            value,
        })
    }

    /// Aggregated (clipped, max-combined) output membership at `x`.
    pub fn aggregated_membership(&self, clip: &[f64], x: f64) -> f64 {
        self.output
            .terms
            .iter()
            .zip(clip)
            .map(|(t, &h)| t.mf.membership(x).min(h))
            .fold(0.0, f64::max)
    }

    fn centroid(&self, clip: &[f64]) -> f64 {
        let [lo, hi] = self.output.universe;
        let step = (hi - lo) / (CENTROID_GRID - 1) as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..CENTROID_GRID {
            let x = lo + k as f64 * step;
            let mu = self.aggregated_membership(clip, x);
            num += mu * x;
            den += mu;
        }
        (num / den).clamp(lo, hi)
    }
}
