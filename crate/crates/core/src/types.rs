//! Domain records shared by every scoring rule and metric.
//!
//! All types are immutable once validated. Class indices are 0-based
//! internally; file readers convert from other bases at ingestion.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum allowed deviation of a probability vector's sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-6;

const RENORMALIZE_SLACK: f64 = 1e-12;

/// A validated probabilistic prediction over `K >= 2` ordered classes.
///
/// Entries are nonnegative and sum to 1 (inputs within [`SUM_TOLERANCE`] are
/// renormalized on construction).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::TooFewClasses(probs.len()));
        }
        let id = String::new();
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteProbability { id });
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(Error::NegativeProbability { id });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::SumOutOfTolerance { id, sum });
        }
        // Vectors already summing to 1 up to rounding are kept bit-for-bit so
        // that validation is idempotent.
        if (sum - 1.0).abs() <= RENORMALIZE_SLACK {
            return Ok(Self(probs));
        }
        Ok(Self(probs.into_iter().map(|p| p / sum).collect()))
    }

    /// One-hot vector at `class`.
    pub fn one_hot(num_classes: usize, class: usize) -> Result<Self> {
        if class >= num_classes {
            return Err(Error::LabelOutOfRange {
                id: String::new(),
                label: class as i64,
                num_classes,
            });
        }
        let mut probs = vec![0.0; num_classes];
        probs[class] = 1.0;
        Self::new(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    /// Hard prediction. Ties resolve to the lowest class index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Top-label confidence, i.e. the largest probability.
    pub fn confidence(&self) -> f64 {
        self.0[self.argmax()]
    }

    /// Cumulative distribution `P[i] = sum_{j <= i} p[j]`, with the last
    /// entry pinned to exactly 1.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out: Vec<f64> = self
            .0
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect();
        if let Some(last) = out.last_mut() {
            *last = 1.0;
        }
        out
    }
}

impl AsRef<[f64]> for ProbVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Free-function form of [`ProbVector::cumulative`].
pub fn cumulative(p: &ProbVector) -> Vec<f64> {
    p.cumulative()
}

/// One sample: opaque id, true class, and the model's prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledPrediction {
    pub id: String,
    pub label: usize,
    pub probs: ProbVector,
}

/// An unvalidated sample as it comes out of a file or generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPrediction {
    pub id: String,
    pub label: usize,
    pub probs: Vec<f64>,
}

/// A validated evaluation set. Sample order is significant: later sorts
/// break ties by position in this list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalDataset {
    num_classes: usize,
    samples: Vec<LabeledPrediction>,
}

impl EvalDataset {
    pub fn new(num_classes: usize, samples: Vec<LabeledPrediction>) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::TooFewClasses(num_classes));
        }
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.probs.num_classes() != num_classes {
                return Err(Error::ClassCountMismatch {
                    id: s.id.clone(),
                    expected: num_classes,
                    got: s.probs.num_classes(),
                });
            }
            if s.label >= num_classes {
                return Err(Error::LabelOutOfRange {
                    id: s.id.clone(),
                    label: s.label as i64,
                    num_classes,
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Self {
            num_classes,
            samples,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn samples(&self) -> &[LabeledPrediction] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_raw(&self) -> Vec<RawPrediction> {
        self.samples
            .iter()
            .map(|s| RawPrediction {
                id: s.id.clone(),
                label: s.label,
                probs: s.probs.as_slice().to_vec(),
            })
            .collect()
    }
}

/// Validate raw samples into an [`EvalDataset`], renormalizing every
/// probability vector that is within tolerance.
pub fn validate_dataset(num_classes: usize, raw: Vec<RawPrediction>) -> Result<EvalDataset> {
    if num_classes < 2 {
        return Err(Error::TooFewClasses(num_classes));
    }
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let samples = raw
        .into_iter()
        .map(|r| {
            if r.probs.len() != num_classes {
                return Err(Error::ClassCountMismatch {
                    id: r.id,
                    expected: num_classes,
                    got: r.probs.len(),
                });
            }
            let probs = ProbVector::new(r.probs).map_err(|e| e.with_id(&r.id))?;
            Ok(LabeledPrediction {
                id: r.id,
                label: r.label,
                probs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EvalDataset::new(num_classes, samples)
}

/// Ordinal misclassification costs. Entries are nonnegative with a zero
/// diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostMatrix {
    costs: Vec<Vec<f64>>,
}

impl CostMatrix {
    pub fn new(costs: Vec<Vec<f64>>) -> Result<Self> {
        let k = costs.len();
        if k < 2 {
            return Err(Error::TooFewClasses(k));
        }
        for (i, row) in costs.iter().enumerate() {
            if row.len() != k {
                return Err(Error::ShapeMismatch(format!(
                    "cost matrix row {i} has {} columns, expected {k}",
                    row.len()
                )));
            }
            for (j, &c) in row.iter().enumerate() {
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::InvalidCostMatrix(format!(
                        "entry ({i}, {j}) = {c} is not a finite nonnegative number"
                    )));
                }
                if i == j && c != 0.0 {
                    return Err(Error::InvalidCostMatrix(format!(
                        "diagonal entry ({i}, {i}) = {c} is not zero"
                    )));
                }
            }
        }
        Ok(Self { costs })
    }

    /// `|i - j| / (K - 1)`: linear in class distance, maximum cost 1.
    pub fn linear(num_classes: usize) -> Self {
        Self::from_distance(num_classes, |d| d)
    }

    /// `((i - j) / (K - 1))^2`.
    pub fn quadratic(num_classes: usize) -> Self {
        Self::from_distance(num_classes, |d| d * d)
    }

    /// 1 off the diagonal, 0 on it.
    pub fn zero_one(num_classes: usize) -> Self {
        Self::from_distance(num_classes, |d| if d > 0.0 { 1.0 } else { 0.0 })
    }

    fn from_distance(num_classes: usize, f: impl Fn(f64) -> f64) -> Self {
        let denom = (num_classes.max(2) - 1) as f64;
        let costs = (0..num_classes)
            .map(|i| {
                (0..num_classes)
                    .map(|j| f((i as f64 - j as f64).abs() / denom))
                    .collect()
            })
            .collect();
        Self { costs }
    }

    pub fn num_classes(&self) -> usize {
        self.costs.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> f64 {
        self.costs[truth][predicted]
    }

    pub fn max_cost(&self) -> f64 {
        self.costs
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.costs
    }
}
