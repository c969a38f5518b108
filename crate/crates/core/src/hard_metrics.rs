//! Metrics on arg-maxed predictions: accuracy, quadratic-weighted kappa,
//! expected cost, plus top-label ECE for calibration context.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{CostMatrix, EvalDataset, LabeledPrediction};

pub const DEFAULT_ECE_BINS: usize = 15;

/// `counts[t][p]` = number of samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(num_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k < 2 {
            return Err(Error::TooFewClasses(k));
        }
        if counts.iter().any(|row| row.len() != k) {
            return Err(Error::ShapeMismatch(format!(
                "confusion matrix must be {k}x{k}"
            )));
        }
        Ok(Self { counts })
    }

    /// Build from `(true, predicted)` pairs.
    pub fn from_pairs(
        num_classes: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut cm = Self::zeros(num_classes);
        for (t, p) in pairs {
            cm.add(t, p);
        }
        cm
    }

    pub(crate) fn from_samples<'a>(
        num_classes: usize,
        samples: impl IntoIterator<Item = &'a LabeledPrediction>,
    ) -> Self {
        Self::from_pairs(
            num_classes,
            samples.into_iter().map(|s| (s.label, s.probs.argmax())),
        )
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn transpose(&self) -> Self {
        let k = self.num_classes();
        let counts = (0..k)
            .map(|p| (0..k).map(|t| self.counts[t][p]).collect())
            .collect();
        Self { counts }
    }

    fn nonempty_total(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::EmptyDataset),
            n => Ok(n as f64),
        }
    }
}

/// Confusion matrix of argmax predictions (lowest index wins ties).
pub fn confusion(ds: &EvalDataset) -> Result<ConfusionMatrix> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(ConfusionMatrix::from_samples(ds.num_classes(), ds.samples()))
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.nonempty_total()?;
    Ok(cm.correct() as f64 / n)
}

/// Quadratic-weighted Cohen's kappa.
///
/// Weights are `(i - j)^2 / (K - 1)^2`; expected agreement comes from the
/// outer product of the marginals. With no possible disagreement (zero
/// expected weighted mass) the result is 1 if the observed mass is also
/// zero and 0 otherwise.
pub fn qwk(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.nonempty_total()?;
    let k = cm.num_classes();
    let denom_k = ((k - 1) * (k - 1)) as f64;
    let rows: Vec<f64> = cm
        .counts
        .iter()
        .map(|r| r.iter().sum::<u64>() as f64 / n)
        .collect();
    let cols: Vec<f64> = (0..k)
        .map(|j| cm.counts.iter().map(|r| r[j]).sum::<u64>() as f64 / n)
        .collect();

    let mut observed = 0.0;
    let mut expected = 0.0;
    for i in 0..k {
        for j in 0..k {
            let d = i as f64 - j as f64;
            let w = d * d / denom_k;
            observed += w * cm.counts[i][j] as f64 / n;
            expected += w * rows[i] * cols[j];
        }
    }
    if expected == 0.0 {
        return Ok(if observed == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(1.0 - observed / expected)
}

/// Average misclassification cost `(1/N) sum counts[t][p] * C[t][p]`.
pub fn expected_cost(cm: &ConfusionMatrix, costs: &CostMatrix) -> Result<f64> {
    if cm.num_classes() != costs.num_classes() {
        return Err(Error::ShapeMismatch(format!(
            "confusion matrix has {} classes, cost matrix {}",
            cm.num_classes(),
            costs.num_classes()
        )));
    }
    let n = cm.nonempty_total()?;
    let mut total = 0.0;
    for (t, row) in cm.counts.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            total += c as f64 * costs.get(t, p);
        }
    }
    Ok(total / n)
}

/// Top-label expected calibration error with `bins` equal-width bins over
/// `[0, 1]`. A confidence of exactly 1 falls into the last bin.
pub fn ece(ds: &EvalDataset, bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::ZeroBins);
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let stats = ece_bins(ds.samples(), bins);
    let n = ds.len() as f64;
    Ok(stats.iter().map(|b| b.gap_mass()).sum::<f64>() / n)
}

#[derive(Debug, Clone, Copy, Default)]
struct BinStats {
    count: usize,
    correct: usize,
    confidence_sum: f64,
}

impl BinStats {
    /// `n_b * |acc_b - conf_b|`
    fn gap_mass(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.correct as f64 - self.confidence_sum).abs()
    }
}

fn ece_bins(samples: &[LabeledPrediction], bins: usize) -> Vec<BinStats> {
    let mut stats = vec![BinStats::default(); bins];
    for s in samples {
        let pred = s.probs.argmax();
        let conf = s.probs.as_slice()[pred];
        let b = ((conf * bins as f64) as usize).min(bins - 1);
        stats[b].count += 1;
        stats[b].confidence_sum += conf;
        if pred == s.label {
            stats[b].correct += 1;
        }
    }
    stats
}

/// Total miscalibration mass `sum_b n_b |acc_b - conf_b|` (ECE times N).
pub fn miscalibration_mass(ds: &EvalDataset, bins: usize) -> Result<f64> {
    Ok(ece(ds, bins)? * ds.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub qwk: f64,
    pub expected_cost: f64,
    pub ece: f64,
    pub n: usize,
}

pub fn evaluate(ds: &EvalDataset, costs: &CostMatrix, bins: usize) -> Result<MetricReport> {
    let cm = confusion(ds)?;
    Ok(MetricReport {
        accuracy: accuracy(&cm)?,
        qwk: qwk(&cm)?,
        expected_cost: expected_cost(&cm, costs)?,
        ece: ece(ds, bins)?,
        n: ds.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{validate_dataset, RawPrediction};

    fn dataset(k: usize, rows: &[(usize, &[f64])]) -> EvalDataset {
        let raw = rows
            .iter()
            .enumerate()
            .map(|(i, (label, p))| RawPrediction {
                id: format!("s{i}"),
                label: *label,
                probs: p.to_vec(),
            })
            .collect();
        validate_dataset(k, raw).unwrap()
    }

    fn cm(rows: &[&[u64]]) -> ConfusionMatrix {
        ConfusionMatrix::from_counts(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn confusion_examples() {
        let ds = dataset(2, &[(0, &[0.9, 0.1])]);
        assert_eq!(confusion(&ds).unwrap().counts(), &[vec![1, 0], vec![0, 0]]);
        let ds = dataset(2, &[(0, &[0.1, 0.9]), (1, &[0.2, 0.8])]);
        assert_eq!(confusion(&ds).unwrap().counts(), &[vec![0, 1], vec![0, 1]]);
        let ds = dataset(2, &[(1, &[0.5, 0.5])]);
        assert_eq!(confusion(&ds).unwrap().counts(), &[vec![0, 0], vec![1, 0]]);
    }

    #[test]
    fn qwk_examples() {
        assert_eq!(qwk(&cm(&[&[3, 0], &[0, 2]])).unwrap(), 1.0);
        // 1 - (1/12) / (5/12), evaluated by hand with exact fractions
        let v = qwk(&cm(&[&[2, 0, 0], &[0, 0, 2], &[0, 0, 2]])).unwrap();
        assert!((v - 0.8).abs() < 1e-12, "{v}");
        // everything predicted as class 0, uniform labels
        let v = qwk(&cm(&[&[2, 0, 0], &[2, 0, 0], &[2, 0, 0]])).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn qwk_degenerate_cases() {
        // single class, all correct: no disagreement possible
        assert_eq!(qwk(&cm(&[&[4, 0], &[0, 0]])).unwrap(), 1.0);
        assert!(matches!(
            qwk(&ConfusionMatrix::zeros(3)).unwrap_err(),
            Error::EmptyDataset
        ));
    }

    #[test]
    fn expected_cost_examples() {
        let lin = CostMatrix::linear(3);
        assert_eq!(expected_cost(&cm(&[&[1, 0, 0], &[0, 4, 0], &[0, 0, 2]]), &lin).unwrap(), 0.0);
        assert_eq!(expected_cost(&cm(&[&[0, 0, 1], &[0, 0, 0], &[0, 0, 0]]), &lin).unwrap(), 1.0);
        assert_eq!(expected_cost(&cm(&[&[1, 1, 0], &[0, 0, 0], &[0, 0, 0]]), &lin).unwrap(), 0.25);
        assert!(matches!(
            expected_cost(&cm(&[&[1, 0], &[0, 1]]), &lin).unwrap_err(),
            Error::ShapeMismatch(_)
        ));
    }

    #[test]
    fn ece_examples() {
        let ds = dataset(3, &[(0, &[1.0, 0.0, 0.0]), (2, &[0.0, 0.0, 1.0])]);
        assert_eq!(ece(&ds, 15).unwrap(), 0.0);
        assert!(matches!(ece(&ds, 0).unwrap_err(), Error::ZeroBins));

        let rows: Vec<(usize, &[f64])> = (0..10)
            .map(|i| (if i < 6 { 0 } else { 1 }, &[0.6, 0.4][..]))
            .collect();
        assert!(ece(&dataset(2, &rows), 15).unwrap().abs() < 1e-12);

        let rows: Vec<(usize, &[f64])> = (0..100)
            .map(|i| (if i < 70 { 0 } else { 1 }, &[0.99, 0.01][..]))
            .collect();
        assert!((ece(&dataset(2, &rows), 15).unwrap() - 0.29).abs() < 1e-12);
    }

    #[test]
    fn zero_one_cost_is_error_rate() {
        let m = cm(&[&[3, 1, 0], &[2, 5, 1], &[0, 4, 7]]);
        let ec = expected_cost(&m, &CostMatrix::zero_one(3)).unwrap();
        assert!((ec - (1.0 - accuracy(&m).unwrap())).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix() -> impl Strategy<Value = ConfusionMatrix> {
            (2usize..=6).prop_flat_map(|k| {
                prop::collection::vec(prop::collection::vec(0u64..20, k), k)
                    .prop_filter_map("empty", |c| {
                        let m = ConfusionMatrix::from_counts(c).unwrap();
                        (m.total() > 0).then_some(m)
                    })
            })
        }

        fn predictions() -> impl Strategy<Value = EvalDataset> {
            prop::collection::vec((0usize..3, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..40)
                .prop_map(|rows| {
                    let raw = rows
                        .into_iter()
                        .enumerate()
                        .map(|(i, (label, a, b, c))| {
                            let s = a + b + c + 1e-3;
                            RawPrediction {
                                id: format!("s{i}"),
                                label,
                                probs: vec![(a + 1e-3) / s, b / s, c / s],
                            }
                        })
                        .collect();
                    validate_dataset(3, raw).unwrap()
                })
        }

        proptest! {
            #[test]
            fn qwk_transpose_invariant(m in matrix()) {
                let a = qwk(&m).unwrap();
                let b = qwk(&m.transpose()).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&a));
            }

            #[test]
            fn zero_one_cost_matches_accuracy(m in matrix()) {
                let k = m.num_classes();
                let ec = expected_cost(&m, &CostMatrix::zero_one(k)).unwrap();
                prop_assert!((ec - (1.0 - accuracy(&m).unwrap())).abs() < 1e-12);
            }

            #[test]
            fn ece_bounded_and_perfect_sample_never_adds_mass(ds in predictions()) {
                let e = ece(&ds, DEFAULT_ECE_BINS).unwrap();
                prop_assert!((0.0..=1.0).contains(&e));
                let before = miscalibration_mass(&ds, DEFAULT_ECE_BINS).unwrap();
                let mut raw = ds.to_raw();
                raw.push(RawPrediction { id: "perfect".into(), label: 1, probs: vec![0.0, 1.0, 0.0] });
                let after = miscalibration_mass(&validate_dataset(3, raw).unwrap(), DEFAULT_ECE_BINS).unwrap();
                prop_assert!(after <= before + 1e-9);
            }

            #[test]
            fn metrics_permutation_invariant(ds in predictions(), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let mut raw = ds.to_raw();
                raw.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let shuffled = validate_dataset(3, raw).unwrap();
                let costs = CostMatrix::linear(3);
                let a = evaluate(&ds, &costs, 15).unwrap();
                let b = evaluate(&shuffled, &costs, 15).unwrap();
                prop_assert!((a.qwk - b.qwk).abs() < 1e-12);
                prop_assert!((a.expected_cost - b.expected_cost).abs() < 1e-12);
                prop_assert!((a.ece - b.ece).abs() < 1e-12);
                prop_assert_eq!(a.accuracy, b.accuracy);
            }
        }
    }
}
