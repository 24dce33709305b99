//! Soft-label encoding of motion scores over a fixed bin grid, KL and
//! Jensen-Shannon divergences, and expectation decoding.

use libm::erfc;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Clamp applied to the second argument of the KL divergence before the log.
pub const KL_CLAMP: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LabelError {
    #[error("label has {got} bins, grid has {want}")]
    Length { got: usize, want: usize },
    #[error("label entry {0} is negative or non-finite")]
    BadEntry(usize),
    #[error("label sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("cannot build a histogram from no scores")]
    Empty,
    #[error("invalid bin grid: {0}")]
    Grid(String),
}

/// Equal-width bins on `[low, high]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinGrid {
    pub low: f64,
    pub high: f64,
    pub n_bins: usize,
}

impl Default for BinGrid {
    /// 50 bins of width 0.1 mm over [-0.5, 4.5].
    fn default() -> Self {
        Self { low: -0.5, high: 4.5, n_bins: 50 }
    }
}

impl BinGrid {
    pub fn new(low: f64, high: f64, n_bins: usize) -> Result<Self, LabelError> {
        let g = Self { low, high, n_bins };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), LabelError> {
        if !(self.low < self.high && self.low.is_finite() && self.high.is_finite()) || self.n_bins < 2 {
            return Err(LabelError::Grid(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.high - self.low) / self.n_bins as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.low + (i as f64 + 0.5) * self.width()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_bins).map(|i| self.center(i)).collect()
    }

    pub fn edge(&self, i: usize) -> f64 {
        if i == self.n_bins {
            self.high
        } else {
            self.low + i as f64 * self.width()
        }
    }

    /// Bin containing `score`; out-of-range scores clip to the edge bins.
    pub fn bin_of(&self, score: f64) -> usize {
        let i = ((score - self.low) / self.width()).floor();
        if i.is_nan() || i < 0.0 {
            0
        } else {
            (i as usize).min(self.n_bins - 1)
        }
    }
}

/// A probability vector over the bins of a [`BinGrid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftLabel<T> {
    probs: Vec<T>,
}

fn sum_tolerance<T: Real>() -> f64 {
    (T::epsilon().to_f64_lossy() * 64.0).max(1e-9)
}

impl<T: Real> SoftLabel<T> {
    /// Validates non-negativity and normalisation (to within `1e-9` in `f64`).
    pub fn new(probs: Vec<T>) -> Result<Self, LabelError> {
        if let Some(i) = probs.iter().position(|p| !(p.is_finite() && *p >= T::zero())) {
            return Err(LabelError::BadEntry(i));
        }
        let sum: f64 = probs.iter().map(|p| p.to_f64_lossy()).sum();
        if (sum - 1.0).abs() > sum_tolerance::<T>() {
            return Err(LabelError::NotNormalized(sum));
        }
        Ok(Self { probs })
    }

    /// Normalises non-negative weights.
    pub fn from_weights(weights: Vec<T>) -> Result<Self, LabelError> {
        if let Some(i) = weights.iter().position(|p| !(p.is_finite() && *p >= T::zero())) {
            return Err(LabelError::BadEntry(i));
        }
        let sum = weights.iter().fold(T::zero(), |a, &b| a + b);
        if !(sum > T::zero()) {
            return Err(LabelError::NotNormalized(0.0));
        }
        Ok(Self { probs: weights.into_iter().map(|w| w / sum).collect() })
    }

    pub fn uniform(n: usize) -> Self {
        Self { probs: vec![T::one() / T::lit(n as f64); n] }
    }

    pub fn one_hot(n: usize, index: usize) -> Self {
        let mut probs = vec![T::zero(); n];
        probs[index] = T::one();
        Self { probs }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn check_grid(&self, grid: &BinGrid) -> Result<(), LabelError> {
        if self.probs.len() != grid.n_bins {
            return Err(LabelError::Length { got: self.probs.len(), want: grid.n_bins });
        }
        Ok(())
    }
}

/// `Φ(b) − Φ(a)` for `a ≤ b`, computed from whichever tail keeps precision.
fn normal_mass(a: f64, b: f64) -> f64 {
    let upper = |x: f64| 0.5 * erfc(x / std::f64::consts::SQRT_2);
    if a >= 0.0 {
        upper(a) - upper(b)
    } else if b <= 0.0 {
        upper(-b) - upper(-a)
    } else {
        1.0 - upper(-a) - upper(b)
    }
}

/// Integrates `N(score, sigma²)` over each bin and renormalises to the grid.
/// If the whole density falls outside the grid, the nearest edge bin gets all the mass.
pub fn encode<T: Real>(score: f64, sigma: f64, grid: &BinGrid) -> SoftLabel<T> {
    assert!(sigma > 0.0, "soft-label sigma must be positive");
    assert!(score.is_finite(), "score must be finite");
    let masses: Vec<f64> = (0..grid.n_bins)
        .map(|i| normal_mass((grid.edge(i) - score) / sigma, (grid.edge(i + 1) - score) / sigma).max(0.0))
        .collect();
    let total: f64 = masses.iter().sum();
    if !(total > f64::MIN_POSITIVE) {
        return SoftLabel::one_hot(grid.n_bins, grid.bin_of(score));
    }
    SoftLabel { probs: masses.into_iter().map(|m| T::lit(m / total)).collect() }
}

/// Expected bin centre under `label`.
pub fn decode<T: Real>(label: &SoftLabel<T>, grid: &BinGrid) -> f64 {
    debug_assert_eq!(label.len(), grid.n_bins);
    let w = grid.width();
    let centre_sum: f64 =
        label.probs.iter().enumerate().map(|(i, p)| p.to_f64_lossy() * (grid.low + (i as f64 + 0.5) * w)).sum();
    let mass: f64 = label.probs.iter().map(|p| p.to_f64_lossy()).sum();
    (centre_sum / mass).clamp(grid.center(0), grid.center(grid.n_bins - 1))
}

/// `Σ pᵢ ln(pᵢ / max(qᵢ, 1e-12))`, with `0 ln 0 = 0`.
pub fn kl_divergence<T: Real>(p: &SoftLabel<T>, q: &SoftLabel<T>) -> f64 {
    assert_eq!(p.len(), q.len(), "KL of labels with different bin counts");
    let kl: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .filter(|(pi, _)| **pi > T::zero())
        .map(|(pi, qi)| {
            let pi = pi.to_f64_lossy();
            pi * (pi / qi.to_f64_lossy().max(KL_CLAMP)).ln()
        })
        .sum();
    kl.max(0.0)
}

/// Jensen-Shannon divergence in nats; symmetric and bounded by `ln 2`.
pub fn js_divergence<T: Real>(p: &SoftLabel<T>, q: &SoftLabel<T>) -> f64 {
    assert_eq!(p.len(), q.len(), "JS of labels with different bin counts");
    let half = |pi: f64, mi: f64| if pi > 0.0 { pi * (pi / mi).ln() } else { 0.0 };
    let mut acc = 0.0;
    for (pi, qi) in p.probs.iter().zip(&q.probs) {
        let (pi, qi) = (pi.to_f64_lossy(), qi.to_f64_lossy());
        let mi = 0.5 * (pi + qi);
        acc += 0.5 * half(pi, mi) + 0.5 * half(qi, mi);
    }
    acc.clamp(0.0, std::f64::consts::LN_2)
}

/// Normalised histogram of scores over the grid, out-of-range scores clipped to the edge bins.
pub fn score_histogram(scores: &[f64], grid: &BinGrid) -> Result<SoftLabel<f64>, LabelError> {
    if scores.is_empty() {
        return Err(LabelError::Empty);
    }
    let mut counts = vec![0.0; grid.n_bins];
    for &s in scores {
        counts[grid.bin_of(s)] += 1.0;
    }
    let n = scores.len() as f64;
    Ok(SoftLabel { probs: counts.into_iter().map(|c| c / n).collect() })
}
