//! Probability vectors over finite index sets.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sums within this distance of one are accepted unchanged.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Sums (and negative weights) within this distance are renormalized; beyond it, rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// A probability distribution over `0..len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("simplex vector must be nonempty"));
        }
        let mut weights = weights;
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() {
                return Err(Error::invalid(format!("weight {i} is not finite")));
            }
            if *w < -RENORMALIZE_TOL {
                return Err(Error::invalid(format!("weight {i} = {w} is negative")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        let defect = (sum - 1.0).abs();
        if defect > RENORMALIZE_TOL {
            return Err(Error::invalid(format!(
                "weights sum to {sum}, not 1 (tolerance {RENORMALIZE_TOL})"
            )));
        }
        if defect > SIMPLEX_TOL {
            for w in &mut weights {
                *w /= sum;
            }
        }
        if let Some(w) = weights.iter().find(|w| **w > 1.0) {
            return Err(Error::invalid(format!("weight {w} exceeds 1")));
        }
        Ok(SimplexVector(weights))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty set");
        SimplexVector(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, index: usize) -> Self {
        assert!(index < n, "point mass index {index} out of range {n}");
        let mut w = vec![0.0; n];
        w[index] = 1.0;
        SimplexVector(w)
    }

    /// Uniform over `support`, zero elsewhere.
    pub fn uniform_on(n: usize, support: &[usize]) -> Self {
        assert!(!support.is_empty(), "empty support");
        let mut w = vec![0.0; n];
        let p = 1.0 / support.len() as f64;
        for &i in support {
            w[i] = p;
        }
        SimplexVector(w)
    }

    /// `(1 - eps) * self + eps * uniform`.
    pub fn mix_uniform(&self, eps: f64) -> Self {
        if eps <= 0.0 {
            return self.clone();
        }
        let u = eps / self.len() as f64;
        SimplexVector(self.0.iter().map(|w| (1.0 - eps) * w + u).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.0.len());
        self.0.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn total_variation(&self, other: &SimplexVector) -> f64 {
        0.5 * self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn max_abs_diff(&self, other: &SimplexVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_point_mass(&self) -> Option<usize> {
        let idx = self.0.iter().position(|&w| w == 1.0)?;
        Some(idx)
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexVector::new(v)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(s: SimplexVector) -> Self {
        s.0
    }
}

/// Draw an index from `dist`. Consumes exactly one `f64` from `rng`.
pub fn sample_from<R: Rng + ?Sized>(dist: &SimplexVector, rng: &mut R) -> usize {
    sample_index(dist.weights(), rng)
}

/// Like [`sample_from`] but validates raw weights first.
pub fn sample_from_weights<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let dist = SimplexVector::new(weights.to_vec())?;
    Ok(sample_from(&dist, rng))
}

// Inverse-CDF draw over already-validated weights.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        cum += w;
        last_positive = i;
        if u < cum {
            return i;
        }
    }
    last_positive
}
