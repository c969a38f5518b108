//! Per-sample proper scoring rules.
//!
//! Every rule is negatively oriented: 0 for a perfect one-hot prediction,
//! larger for worse predictions. The ranked rules (`rps`, `sa_rps`) compare
//! cumulative distributions and therefore penalize probability mass placed
//! far from the true class more than mass placed on neighbouring classes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{EvalDataset, ProbVector};

/// Floor applied to `p_label` before taking the logarithm.
pub const LOG_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Brier,
    Log,
    Rps,
    SaRps,
}

impl Rule {
    pub const ALL: [Rule; 4] = [Rule::Brier, Rule::Log, Rule::Rps, Rule::SaRps];

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Brier => "brier",
            Rule::Log => "log",
            Rule::Rps => "rps",
            Rule::SaRps => "sa_rps",
        }
    }

    pub fn score(self, p: &ProbVector, label: usize) -> f64 {
        self.score_with(p, label, &ScoringConfig::default())
    }

    pub fn score_with(self, p: &ProbVector, label: usize, cfg: &ScoringConfig) -> f64 {
        match self {
            Rule::Brier => brier(p, label),
            Rule::Log => log_score(p, label),
            Rule::Rps => rps(p, label),
            Rule::SaRps if cfg.sa_rps_paper_literal => sa_rps_outer_normalized(p, label),
            Rule::SaRps => sa_rps(p, label),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brier" => Ok(Rule::Brier),
            "log" => Ok(Rule::Log),
            "rps" => Ok(Rule::Rps),
            "sa_rps" => Ok(Rule::SaRps),
            other => Err(Error::UnknownRule(other.to_string())),
        }
    }
}

/// Options that change how rules are evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringConfig {
    /// Evaluate `sa_rps` with the `1/(K-1)` factor outside the square
    /// (range `[0, K-1]`, linear growth) instead of inside it.
    pub sa_rps_paper_literal: bool,
}

/// A single scored sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredSample {
    pub id: String,
    pub score: f64,
    pub label: usize,
    pub argmax_class: usize,
}

/// Squared Euclidean distance between `p` and the one-hot label. Range `[0, 2]`.
pub fn brier(p: &ProbVector, label: usize) -> f64 {
    p.as_slice()
        .iter()
        .enumerate()
        .map(|(i, &pi)| {
            let d = if i == label { pi - 1.0 } else { pi };
            d * d
        })
        .sum()
}

/// `-ln(max(p_label, LOG_EPSILON))`.
pub fn log_score(p: &ProbVector, label: usize) -> f64 {
    -p.as_slice()[label].max(LOG_EPSILON).ln()
}

/// Differences between the prediction's cumulative distribution and the
/// label's, over the first `K - 1` positions (the last is always 0).
fn cumulative_gaps(p: &ProbVector, label: usize) -> impl Iterator<Item = f64> {
    let k = p.num_classes();
    p.cumulative()
        .into_iter()
        .take(k - 1)
        .enumerate()
        .map(move |(i, c)| if i >= label { c - 1.0 } else { c })
}

/// Ranked Probability Score: mean squared cumulative gap. Range `[0, 1]`.
pub fn rps(p: &ProbVector, label: usize) -> f64 {
    let k = p.num_classes();
    cumulative_gaps(p, label).map(|d| d * d).sum::<f64>() / (k - 1) as f64
}

/// Squared-absolute RPS: the mean absolute cumulative gap, squared.
///
/// Range `[0, 1]`; a one-hot prediction at distance `d` scores
/// `(d / (K - 1))^2`. Unlike [`rps`] it does not favour predictions that
/// spread mass symmetrically around the true class.
pub fn sa_rps(p: &ProbVector, label: usize) -> f64 {
    let k = p.num_classes();
    let mean_abs = cumulative_gaps(p, label).map(f64::abs).sum::<f64>() / (k - 1) as f64;
    mean_abs * mean_abs
}

/// `sa_rps` variant with the normalization outside the square:
/// `(sum |gap|)^2 / (K - 1)`. Range `[0, K - 1]`.
pub fn sa_rps_outer_normalized(p: &ProbVector, label: usize) -> f64 {
    let k = p.num_classes();
    let total: f64 = cumulative_gaps(p, label).map(f64::abs).sum();
    total * total / (k - 1) as f64
}

/// Score every sample of `ds` with the rule named `rule`, preserving order.
pub fn score_dataset(ds: &EvalDataset, rule: &str) -> Result<Vec<ScoredSample>> {
    let rule: Rule = rule.parse()?;
    Ok(score_dataset_with(ds, rule, &ScoringConfig::default()))
}

pub fn score_dataset_with(ds: &EvalDataset, rule: Rule, cfg: &ScoringConfig) -> Vec<ScoredSample> {
    ds.samples()
        .iter()
        .map(|s| ScoredSample {
            id: s.id.clone(),
            score: rule.score_with(&s.probs, s.label, cfg),
            label: s.label,
            argmax_class: s.probs.argmax(),
        })
        .collect()
}

/// Mean score of `rule` over the dataset.
pub fn mean_score(ds: &EvalDataset, rule: Rule, cfg: &ScoringConfig) -> f64 {
    let total: f64 = ds
        .samples()
        .iter()
        .map(|s| rule.score_with(&s.probs, s.label, cfg))
        .sum();
    total / ds.len() as f64
}
