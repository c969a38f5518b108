//! Seeded synthetic classifier outputs.
//!
//! Each sample draws a true class `c` uniformly and a continuous centre
//! `c' = c + u`, `u ~ U(-1.5 noise, 1.5 noise)`. The prediction is a
//! softmax over Gaussian-shaped logits `-(j - c')^2 / (2 noise^2)`, raised to
//! the power `miscal` and renormalized. Errors are therefore distance
//! structured: the argmax lands on neighbouring classes far more often than
//! on distant ones.
//!
//! "Shuffled" mode relabels the classes with one seeded permutation applied
//! jointly to the probability vector and the label. Class adjacency is lost
//! while every distance-blind score (Brier, log) is unchanged.
//!
//! Draws are counter based: sample `i` uses a ChaCha8 stream `i + 1` of the
//! configured seed and the permutation uses stream 0, so output does not
//! depend on generation order.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{validate_dataset, EvalDataset, RawPrediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ordinal,
    Shuffled,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ordinal => "ordinal",
            Mode::Shuffled => "shuffled",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ordinal" => Ok(Mode::Ordinal),
            "shuffled" => Ok(Mode::Shuffled),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub k: usize,
    /// Spread of predicted mass around the true class.
    pub noise: f64,
    /// Confidence inflation exponent; 1 leaves the softmax untouched.
    pub miscal: f64,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            k: 5,
            noise: 1.0,
            miscal: 1.0,
            mode: Mode::Ordinal,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise must be finite and >= 0, got {}",
                self.noise
            )));
        }
        if !(self.miscal > 0.0 && self.miscal.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "miscal must be finite and > 0, got {}",
                self.miscal
            )));
        }
        Ok(())
    }
}

fn sample_id(i: usize) -> String {
    format!("s{:06}", i + 1)
}

/// Ordinal probability vector centred on `centre` (before any shuffling).
fn gaussian_probs(k: usize, centre: f64, noise: f64, miscal: f64) -> Vec<f64> {
    let logits: Vec<f64> = (0..k)
        .map(|j| {
            let d = j as f64 - centre;
            -d * d / (2.0 * noise * noise)
        })
        .collect();
    // exp(miscal * (l - max)) is the softmax raised to `miscal`, up to scale
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (miscal * (l - max)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<EvalDataset> {
    cfg.validate()?;
    let permutation = match cfg.mode {
        Mode::Ordinal => None,
        Mode::Shuffled => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(0);
            let mut perm: Vec<usize> = (0..cfg.k).collect();
            perm.shuffle(&mut rng);
            Some(perm)
        }
    };

    let raw = (0..cfg.n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64 + 1);
            let label = rng.gen_range(0..cfg.k as u64) as usize;
            let u: f64 = rng.gen();
            let probs = if cfg.noise == 0.0 {
                let mut p = vec![0.0; cfg.k];
                p[label] = 1.0;
                p
            } else {
                let centre = label as f64 + (2.0 * u - 1.0) * 1.5 * cfg.noise;
                gaussian_probs(cfg.k, centre, cfg.noise, cfg.miscal)
            };
            match &permutation {
                None => RawPrediction {
                    id: sample_id(i),
                    label,
                    probs,
                },
                Some(perm) => {
                    // class j is renamed perm[j]
                    let mut shuffled = vec![0.0; cfg.k];
                    for (j, &p) in probs.iter().enumerate() {
                        shuffled[perm[j]] = p;
                    }
                    RawPrediction {
                        id: sample_id(i),
                        label: perm[label],
                        probs: shuffled,
                    }
                }
            }
        })
        .collect();
    validate_dataset(cfg.k, raw)
}
