//! Evaluation of probabilistic predictions from ordinal classifiers.
//!
//! * [`psr`]: per-sample proper scoring rules (Brier, log, RPS, sa-RPS).
//! * [`hard_metrics`]: QWK, expected cost, accuracy and ECE on argmax
//!   predictions.
//! * [`retention`]: retained-samples curves, AURSC and its bootstrap.
//! * [`synth`]: seeded synthetic classifier outputs.
//! * [`io`] and [`svg`]: prediction files, reports and charts.

pub mod cli;
pub mod error;
pub mod hard_metrics;
pub mod io;
pub mod psr;
pub mod retention;
pub mod svg;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use hard_metrics::{ConfusionMatrix, MetricReport};
pub use psr::{Rule, ScoredSample, ScoringConfig};
pub use retention::{BootstrapSummary, FractionGrid, Metric, RetentionConfig, RetentionCurve};
pub use synth::{Mode, SynthConfig};
pub use types::{validate_dataset, CostMatrix, EvalDataset, LabeledPrediction, ProbVector, RawPrediction};
