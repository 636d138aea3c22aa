use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::parallel_draws;
use crate::dist_core::{sample_dickman, GriddedLaw, DICKMAN_SAMPLER_DEPTH};
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Draws of `c D` from the recursion `D = U (1 + D)` cut at `depth` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DickmanSampler {
    pub c: f64,
    pub seed: u64,
    pub depth: usize,
}

impl DickmanSampler {
    pub fn new(c: f64, seed: u64, depth: usize) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("Dickman scale must be positive, got {c}")));
        }
        if depth == 0 {
            return Err(Error::domain("depth must be at least 1"));
        }
        Ok(Self { c, seed, depth })
    }

    pub fn with_default_depth(c: f64, seed: u64) -> Result<Self> {
        Self::new(c, seed, DICKMAN_SAMPLER_DEPTH)
    }

    /// Upper bound on the downward bias of the mean, `c 2^{-depth}`.
    pub fn bias(&self) -> f64 {
        self.c * 0.5f64.powi(self.depth as i32)
    }

    pub fn draws(&self, count: usize) -> Vec<f64> {
        let (c, depth) = (self.c, self.depth);
        parallel_draws(self.seed, 0xd1c, count, |rng| c * sample_dickman(rng, depth))
    }
}

/// `count` draws of `MP(c D)`.
pub fn dickman_mp_samples(c: f64, seed: u64, count: usize) -> Result<Vec<u64>> {
    let s = DickmanSampler::with_default_depth(c, seed)?;
    Ok(parallel_draws(seed, 0xd1d, count, |rng| {
        let mu = s.c * sample_dickman(rng, s.depth);
        if mu > 0.0 {
            Poisson::new(mu).expect("positive mean").sample(rng) as u64
        } else {
            0
        }
    }))
}

/// Law of `(1 - B_I) I / n` with `I` uniform on `1..=n` and `B_k ~ Bern(1/k)`.
pub fn harmonic_increment_law(n: u64) -> Result<GriddedLaw> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let nf = n as f64;
    let mut pts = vec![0.0];
    let mut ps = vec![(1..=n).map(|k| 1.0 / k as f64).sum::<f64>() / nf];
    for k in 2..=n {
        pts.push(k as f64 / nf);
        ps.push((1.0 - 1.0 / k as f64) / nf);
    }
    let total: f64 = ps.iter().sum();
    GriddedLaw::from_atoms(&pts, &ps.iter().map(|p| p / total).collect::<Vec<_>>())
}

/// `int_l^r |v - x| dx`.
fn abs_gap_integral(v: f64, l: f64, r: f64) -> f64 {
    if v <= l {
        0.5 * ((r - v).powi(2) - (l - v).powi(2))
    } else if v >= r {
        0.5 * ((v - l).powi(2) - (v - r).powi(2))
    } else {
        0.5 * ((v - l).powi(2) + (r - v).powi(2))
    }
}

/// Exact `d_W((1 - B_I) I / n, U(0,1))`, integrating `|F(x) - x|` cell by cell with
/// `F(x) = j/n + (H_n - H_j)/n` on `[j/n, (j+1)/n)`.
pub fn overflow_harmonic_dw(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let nf = n as f64;
    let mut h = vec![0.0; n as usize + 1];
    for j in 1..=n as usize {
        h[j] = h[j - 1] + 1.0 / j as f64;
    }
    let hn = h[n as usize];
    let mut acc = NeumaierSum::default();
    for j in 0..n as usize {
        let v = j as f64 / nf + (hn - h[j]) / nf;
        acc.add(abs_gap_integral(v, j as f64 / nf, (j + 1) as f64 / nf));
    }
    Ok(acc.total())
}

/// Exact `(a, b)` with `a = int_0^1 (x - floor(nx)/n) dx` and `b = (1/n) int_0^1 (H_n - H_floor(nx)) dx`.
pub fn harmonic_decomposition(n: u64) -> Result<(BigRational, BigRational)> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let int = |x: u64| BigRational::from_integer(BigInt::from(x));
    let nr = int(n);
    let mut a = BigRational::zero();
    let mut h = vec![BigRational::zero()];
    for j in 1..=n {
        let next = &h[(j - 1) as usize] + BigRational::new(BigInt::from(1), BigInt::from(j));
        h.push(next);
    }
    let mut b = BigRational::zero();
    for j in 0..n {
        let (l, r) = (int(j) / &nr, int(j + 1) / &nr);
        // int_l^r (x - l) dx
        a += (&r - &l) * (&r - &l) / int(2);
        b += (&h[n as usize] - &h[j as usize]) / &nr;
    }
    Ok((a, b / &nr))
}
