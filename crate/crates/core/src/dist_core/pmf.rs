use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{poisson_pmf, poisson_sf, stable_sum, NeumaierSum, EPS_NORM};

/// A pmf on `{0, 1, ..., K}` together with the probability mass it does not
/// account for beyond `K`.
///
/// Every constructor runs the normalization audit: masses lie in `[0, 1]` and
/// `sum(probs) + tail_mass` is within [`EPS_NORM`] of one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedPmf {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl TruncatedPmf {
    pub fn new(mut probs: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("pmf needs at least one atom"));
        }
        if !(tail_mass.is_finite() && tail_mass >= 0.0) {
            return Err(Error::domain(format!("tail mass must be non-negative, got {tail_mass}")));
        }
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -EPS_NORM || *p > 1.0 + EPS_NORM {
                return Err(Error::domain(format!("mass {p} outside [0, 1]")));
            }
            *p = p.clamp(0.0, 1.0);
        }
        let total = stable_sum(probs.iter().copied()) + tail_mass;
        if (total - 1.0).abs() > EPS_NORM {
            return Err(Error::Normalization { total });
        }
        Ok(Self { probs, tail_mass })
    }

    /// Builds a pmf whose full law has unit mass, assigning `1 - sum(probs)` to the tail.
    pub fn from_unit_mass(probs: Vec<f64>) -> Result<Self> {
        let s = stable_sum(probs.iter().copied());
        Self::new(probs, (1.0 - s).max(0.0))
    }

    /// Normalizes arbitrary non-negative weights; no tail.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let s = stable_sum(weights.iter().copied());
        if !(s > 0.0) {
            return Err(Error::domain("weights must have positive total"));
        }
        Self::new(weights.into_iter().map(|w| w / s).collect(), 0.0)
    }

    pub fn point_mass(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        Self { probs, tail_mass: 0.0 }
    }

    /// Poisson(`mu`) truncated where the exact upper tail drops below `tol`.
    pub fn poisson(mu: f64, tol: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::domain(format!("Poisson mean must be non-negative, got {mu}")));
        }
        let mut probs = Vec::new();
        let mut j = 0u64;
        loop {
            probs.push(poisson_pmf(mu, j));
            let tail = poisson_sf(mu, j);
            if tail < tol {
                return Self::new(probs, tail);
            }
            j += 1;
            if j > 10_000_000 {
                return Err(Error::Truncation { tol, max_index: j as usize, tail });
            }
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Largest index K held explicitly.
    pub fn max_index(&self) -> usize {
        self.probs.len() - 1
    }

    /// Mass at `j`; zero beyond the window.
    pub fn get(&self, j: usize) -> f64 {
        self.probs.get(j).copied().unwrap_or(0.0)
    }

    /// `P(X <= j)` over the explicit window.
    pub fn cdf(&self, j: usize) -> f64 {
        stable_sum(self.probs.iter().take(j + 1).copied())
    }

    pub fn cdf_values(&self) -> Vec<f64> {
        let mut acc = NeumaierSum::default();
        self.probs
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.total()
            })
            .collect()
    }

    /// `E f(X)` over the window (tail ignored).
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        stable_sum(self.probs.iter().enumerate().map(|(j, &p)| p * f(j as f64)))
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    pub fn moment(&self, k: i32) -> f64 {
        self.expect(|x| x.powi(k))
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    /// Law of `X + by`.
    pub fn shift(&self, by: usize) -> Self {
        let mut probs = vec![0.0; by];
        probs.extend_from_slice(&self.probs);
        Self { probs, tail_mass: self.tail_mass }
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &TruncatedPmf) -> Result<Self> {
        let n = self.probs.len() + other.probs.len() - 1;
        let mut out = vec![NeumaierSum::default(); n];
        for (i, &a) in self.probs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.probs.iter().enumerate() {
                out[i + j].add(a * b);
            }
        }
        let probs: Vec<f64> = out.iter().map(|s| s.total()).collect();
        let s = stable_sum(probs.iter().copied());
        // window mass is exactly (1 - ta)(1 - tb) up to rounding; the rest is unaccounted
        let tail = (1.0 - s).max(0.0);
        Self::new(probs, tail)
    }

    /// Drops trailing zeros (keeps at least one atom).
    pub fn trimmed(mut self) -> Self {
        while self.probs.len() > 1 && *self.probs.last().unwrap() == 0.0 {
            self.probs.pop();
        }
        self
    }
}
