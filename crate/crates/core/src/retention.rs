//! Retained-samples curves.
//!
//! Samples are ranked by a per-sample scoring rule, the worst are removed
//! progressively, and a hard metric (QWK or expected cost) is computed on
//! each retained subset. The area under that curve (AURSC) is the
//! unnormalized sum of the metric over the retention grid. A rule that
//! identifies ordinally-wrong predictions better improves the metric faster
//! as samples are removed.
//!
//! Bootstrap replicates resample the dataset with replacement before the
//! whole score-sort-curve pipeline runs. Replicate `r` draws its indices from
//! a ChaCha8 generator seeded with `seed` (via `SeedableRng::seed_from_u64`)
//! on stream `r`, so replicates are independent of evaluation order and
//! thread count. Seed 0 is reserved: every replicate is the identity
//! resample.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hard_metrics::{expected_cost, qwk, ConfusionMatrix};
use crate::psr::{Rule, ScoredSample, ScoringConfig};
use crate::types::{CostMatrix, EvalDataset, LabeledPrediction};

pub const DEFAULT_REPLICATES: usize = 50;

/// Seed value that turns every bootstrap replicate into the identity resample.
pub const IDENTITY_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Qwk,
    Ec,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Qwk => "qwk",
            Metric::Ec => "ec",
        }
    }

    /// Whether larger values are better.
    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::Qwk)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qwk" => Ok(Metric::Qwk),
            "ec" => Ok(Metric::Ec),
            other => Err(Error::UnknownMetric(other.to_string())),
        }
    }
}

/// Strictly decreasing retention fractions in `(0, 1]`, starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FractionGrid(Vec<f64>);

impl FractionGrid {
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::EmptyFractionList);
        }
        if let Some(&f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::FractionOutOfRange(f));
        }
        if fractions.len() < 2 {
            return Err(Error::InvalidFractionGrid(
                "at least two fractions are required".into(),
            ));
        }
        if fractions[0] != 1.0 {
            return Err(Error::InvalidFractionGrid(format!(
                "grid must start at 1.0, starts at {}",
                fractions[0]
            )));
        }
        if fractions.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidFractionGrid(
                "fractions must be strictly decreasing".into(),
            ));
        }
        Ok(Self(fractions))
    }

    /// `start, start - step, ...` down to `stop` inclusive. Values are
    /// computed as `start - i * step` and rounded to 12 decimals so that
    /// `1.0:0.05:0.05` yields exactly the 20 expected points.
    pub fn from_range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidFractionGrid(format!(
                "bad range {start}:{stop}:{step}"
            )));
        }
        let mut out = Vec::new();
        let mut i = 0u32;
        loop {
            let f = ((start - i as f64 * step) * 1e12).round() / 1e12;
            if f < stop - 1e-9 {
                break;
            }
            out.push(f);
            i += 1;
            if i > 1_000_000 {
                return Err(Error::InvalidFractionGrid("range too long".into()));
            }
        }
        Self::new(out)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for FractionGrid {
    /// 1.00, 0.95, ..., 0.05.
    fn default() -> Self {
        Self::from_range(1.0, 0.05, 0.05).expect("default grid is valid")
    }
}

impl FromStr for FractionGrid {
    type Err = Error;

    /// Parses `start:stop:step` or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidFractionGrid(format!("not a number: {t:?}")))
        };
        if s.trim().is_empty() {
            return Err(Error::EmptyFractionList);
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [start, stop, step] => Self::from_range(parse(start)?, parse(stop)?, parse(step)?),
            [_] => Self::new(s.split(',').map(parse).collect::<Result<_>>()?),
            _ => Err(Error::InvalidFractionGrid(format!(
                "expected start:stop:step, got {s:?}"
            ))),
        }
    }
}

/// Everything that determines a retention curve besides the data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetentionConfig {
    pub rule: Rule,
    pub metric: Metric,
    pub fractions: FractionGrid,
    pub costs: CostMatrix,
    pub scoring: ScoringConfig,
}

impl RetentionConfig {
    pub fn new(rule: Rule, metric: Metric, num_classes: usize) -> Self {
        Self {
            rule,
            metric,
            fractions: FractionGrid::default(),
            costs: CostMatrix::linear(num_classes),
            scoring: ScoringConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetentionCurve {
    pub rule: Rule,
    pub metric: Metric,
    pub fractions: Vec<f64>,
    pub values: Vec<f64>,
    pub aursc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub std: f64,
    pub replicates: Vec<f64>,
    pub seed: u64,
    #[serde(rename = "R")]
    pub r: usize,
}

impl BootstrapSummary {
    pub fn from_replicates(replicates: Vec<f64>, seed: u64) -> Self {
        let n = replicates.len() as f64;
        let mean = replicates.iter().sum::<f64>() / n;
        let var = replicates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            r: replicates.len(),
            replicates,
            seed,
        }
    }
}

/// Scores sorted worst first (descending). Ties keep dataset order.
pub fn rank_samples(ds: &EvalDataset, rule: &str) -> Result<Vec<ScoredSample>> {
    let rule: Rule = rule.parse()?;
    rank_samples_with(ds, rule, &ScoringConfig::default())
}

pub fn rank_samples_with(
    ds: &EvalDataset,
    rule: Rule,
    cfg: &ScoringConfig,
) -> Result<Vec<ScoredSample>> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut scored = crate::psr::score_dataset_with(ds, rule, cfg);
    // stable sort keeps input order among equal scores
    scored.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(scored)
}

/// Retention curve on the full dataset.
pub fn sample_retention_curve(
    ds: &EvalDataset,
    rule: &str,
    metric: &str,
    fractions: &[f64],
) -> Result<RetentionCurve> {
    let rule: Rule = rule.parse()?;
    let metric: Metric = metric.parse()?;
    let mut cfg = RetentionConfig::new(rule, metric, ds.num_classes());
    cfg.fractions = FractionGrid::new(fractions.to_vec())?;
    retention_curve(ds, &cfg)
}

pub fn retention_curve(ds: &EvalDataset, cfg: &RetentionConfig) -> Result<RetentionCurve> {
    check_costs(ds, cfg)?;
    let samples: Vec<&LabeledPrediction> = ds.samples().iter().collect();
    curve_for(&samples, ds.num_classes(), cfg)
}

fn check_costs(ds: &EvalDataset, cfg: &RetentionConfig) -> Result<()> {
    if cfg.costs.num_classes() != ds.num_classes() {
        return Err(Error::ShapeMismatch(format!(
            "dataset has {} classes, cost matrix {}",
            ds.num_classes(),
            cfg.costs.num_classes()
        )));
    }
    Ok(())
}

/// Number of best-scored samples kept at fraction `f` of `n`.
pub fn retained_count(f: f64, n: usize) -> usize {
    ((f * n as f64).round() as usize).clamp(1, n)
}

fn curve_for(
    samples: &[&LabeledPrediction],
    num_classes: usize,
    cfg: &RetentionConfig,
) -> Result<RetentionCurve> {
    let scores: Vec<f64> = samples
        .iter()
        .map(|s| cfg.rule.score_with(&s.probs, s.label, &cfg.scoring))
        .collect();
    let values = metric_along_grid(
        samples,
        &scores,
        num_classes,
        cfg.metric,
        &cfg.fractions,
        &cfg.costs,
    )?;
    let aursc = values.iter().sum();
    Ok(RetentionCurve {
        rule: cfg.rule,
        metric: cfg.metric,
        fractions: cfg.fractions.as_slice().to_vec(),
        values,
        aursc,
    })
}

/// Curve values for an arbitrary per-sample score (higher = worse), e.g. an
/// oracle that knows which argmax predictions are wrong.
pub fn curve_values_from_scores(
    ds: &EvalDataset,
    scores: &[f64],
    metric: Metric,
    fractions: &FractionGrid,
    costs: &CostMatrix,
) -> Result<Vec<f64>> {
    if scores.len() != ds.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores for {} samples",
            scores.len(),
            ds.len()
        )));
    }
    let samples: Vec<&LabeledPrediction> = ds.samples().iter().collect();
    metric_along_grid(&samples, scores, ds.num_classes(), metric, fractions, costs)
}

fn metric_along_grid(
    samples: &[&LabeledPrediction],
    scores: &[f64],
    num_classes: usize,
    metric: Metric,
    fractions: &FractionGrid,
    costs: &CostMatrix,
) -> Result<Vec<f64>> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    // worst first, ties in input order; the retained set at count m is the
    // last m entries of this ranking
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    // Retained sets are nested, so grow one confusion matrix from the best
    // sample upward and read it off at each grid point (smallest first).
    let fractions = fractions.as_slice();
    let mut targets: Vec<(usize, usize)> = fractions
        .iter()
        .enumerate()
        .map(|(i, &f)| (retained_count(f, n), i))
        .collect();
    targets.sort_unstable();

    let mut values = vec![0.0; fractions.len()];
    let mut cm = ConfusionMatrix::zeros(num_classes);
    let mut kept = 0;
    for (count, slot) in targets {
        while kept < count {
            let s = samples[order[n - 1 - kept]];
            cm.add(s.label, s.probs.argmax());
            kept += 1;
        }
        values[slot] = match metric {
            Metric::Qwk => qwk(&cm)?,
            Metric::Ec => expected_cost(&cm, costs)?,
        };
    }
    Ok(values)
}

/// Bootstrap indices for replicate `replicate`.
pub fn replicate_indices(n: usize, seed: u64, replicate: u64) -> Vec<usize> {
    if seed == IDENTITY_SEED {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    (0..n).map(|_| rng.gen_range(0..n as u64) as usize).collect()
}

/// AURSC over `replicates` bootstrap resamples of `ds`.
///
/// Replicates run on the current rayon pool; results do not depend on its
/// size.
pub fn bootstrap_aursc(
    ds: &EvalDataset,
    cfg: &RetentionConfig,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    if replicates == 0 {
        return Err(Error::InvalidConfig(
            "bootstrap needs at least one replicate".into(),
        ));
    }
    check_costs(ds, cfg)?;
    let all = ds.samples();
    let values = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let picked: Vec<&LabeledPrediction> = replicate_indices(all.len(), seed, r)
                .into_iter()
                .map(|i| &all[i])
                .collect();
            curve_for(&picked, ds.num_classes(), cfg).map(|c| c.aursc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(BootstrapSummary::from_replicates(values, seed))
}
