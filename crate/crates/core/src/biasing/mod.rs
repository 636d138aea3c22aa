//! Bias transforms, the Steutel increment catalog and the size-bias
//! decompositions of mixed Poisson and mixed negative binomial laws.

mod identity;
mod negbin;

pub use identity::{check_bias_identity, stein_characterization_residual, Law, TestFn, Transform};
pub use negbin::{mixed_negbin_pmf, negbin_sizebias_decomposition, NegBinDecomposition};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist_core::{mixed_poisson_pmf, GriddedLaw, MixingKind, MixingLaw, TruncatedPmf, MAX_PMF_INDEX};
use crate::error::{Error, Result};
use crate::numeric::{integrate_pieces, poisson_sf, stable_sum, NeumaierSum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IncrementKind {
    PointMass { at: f64 },
    Bernoulli { q: f64 },
    Exponential { rate: f64 },
    /// Uniform on `(0, width)`.
    Uniform { width: f64 },
    Grid { law: GriddedLaw },
}

/// The independent increment `eta` with `xi^s = xi + eta` in law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementLaw {
    kind: IncrementKind,
    mean: f64,
}

impl IncrementLaw {
    pub fn point_mass(at: f64) -> Result<Self> {
        if !(at >= 0.0 && at.is_finite()) {
            return Err(Error::domain("increment must be non-negative"));
        }
        Ok(Self { kind: IncrementKind::PointMass { at }, mean: at })
    }

    pub fn bernoulli(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::domain(format!("Bernoulli mean must lie in [0, 1], got {q}")));
        }
        Ok(Self { kind: IncrementKind::Bernoulli { q }, mean: q })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::domain("exponential rate must be positive"));
        }
        Ok(Self { kind: IncrementKind::Exponential { rate }, mean: 1.0 / rate })
    }

    pub fn uniform(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::domain("uniform width must be positive"));
        }
        Ok(Self { kind: IncrementKind::Uniform { width }, mean: 0.5 * width })
    }

    pub fn grid(law: GriddedLaw) -> Result<Self> {
        if law.support().0 < 0.0 {
            return Err(Error::domain("increment must be non-negative"));
        }
        let mean = law.mean();
        Ok(Self { kind: IncrementKind::Grid { law }, mean })
    }

    pub fn kind(&self) -> &IncrementKind {
        &self.kind
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.kind {
            IncrementKind::PointMass { at } => {
                if x >= *at {
                    1.0
                } else {
                    0.0
                }
            }
            IncrementKind::Bernoulli { q } => {
                if x >= 1.0 {
                    1.0
                } else {
                    1.0 - q
                }
            }
            IncrementKind::Exponential { rate } => -(-rate * x).exp_m1(),
            IncrementKind::Uniform { width } => (x / width).min(1.0),
            IncrementKind::Grid { law } => law.cdf(x),
        }
    }

    /// Points where the CDF jumps or has a kink, and a right end beyond which
    /// `int (1 - F)` is at most `eps`.
    pub fn breaks(&self, eps: f64) -> Vec<f64> {
        match &self.kind {
            IncrementKind::PointMass { at } => vec![0.0, *at],
            IncrementKind::Bernoulli { .. } => vec![0.0, 1.0],
            IncrementKind::Exponential { rate } => {
                let top = ((1.0 / (rate * eps)).ln().max(1.0)) / rate;
                let mut b = vec![0.0];
                let mut x = 0.5 / rate;
                while x < top {
                    b.push(x);
                    x *= 2.0;
                }
                b.push(top);
                b
            }
            IncrementKind::Uniform { width } => vec![0.0, *width],
            IncrementKind::Grid { law } => {
                let mut g = law.grid().to_vec();
                if g[0] > 0.0 {
                    g.insert(0, 0.0);
                }
                g
            }
        }
    }

    /// `int_x^inf (1 - F(t)) dt`.
    pub fn upper_tail_integral(&self, x: f64) -> f64 {
        match &self.kind {
            IncrementKind::Exponential { rate } => (-rate * x).exp() / rate,
            IncrementKind::Grid { law } => {
                if x >= law.support().1 {
                    law.tail_w()
                } else {
                    f64::INFINITY
                }
            }
            _ => 0.0,
        }
    }

    /// `E f(eta)`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        match &self.kind {
            IncrementKind::PointMass { at } => Ok(f(*at)),
            IncrementKind::Bernoulli { q } => Ok((1.0 - q) * f(0.0) + q * f(1.0)),
            IncrementKind::Exponential { rate } => {
                let r = *rate;
                let q = integrate_pieces(|x| r * (-r * x).exp() * f(x), &self.breaks(tol * 1e-6), tol)?;
                Ok(q.value)
            }
            IncrementKind::Uniform { width } => {
                let c = *width;
                let q = integrate_pieces(&f, &[0.0, 0.5 * c, c], tol * c)?;
                Ok(q.value / c)
            }
            IncrementKind::Grid { law } => Ok(law.expect(f)),
        }
    }

    /// Law of `Y ~ MP(eta)`, truncated where the upper tail drops below `tol`.
    pub fn mp_pmf(&self, tol: f64) -> Result<TruncatedPmf> {
        let finish = |probs: Vec<f64>, tail: f64| TruncatedPmf::new(probs, tail);
        match &self.kind {
            IncrementKind::PointMass { at } => TruncatedPmf::poisson(*at, tol),
            IncrementKind::Bernoulli { q } => {
                let pois = TruncatedPmf::poisson(1.0, tol)?;
                let mut probs: Vec<f64> = pois.probs().iter().map(|p| q * p).collect();
                probs[0] += 1.0 - q;
                finish(probs, q * pois.tail_mass())
            }
            IncrementKind::Exponential { rate } => {
                let ratio = 1.0 / (1.0 + rate);
                let mut probs = Vec::new();
                for j in 0..MAX_PMF_INDEX {
                    probs.push(rate / (1.0 + rate) * ratio.powi(j as i32));
                    let tail = ratio.powi(j as i32 + 1);
                    if tail < tol {
                        return finish(probs, tail);
                    }
                }
                Err(Error::Truncation { tol, max_index: MAX_PMF_INDEX, tail: ratio.powi(MAX_PMF_INDEX as i32) })
            }
            IncrementKind::Uniform { width } => {
                let c = *width;
                let mut probs = Vec::new();
                for j in 0..MAX_PMF_INDEX as u64 {
                    probs.push(poisson_sf(c, j) / c);
                    // P(Y > j) = E[(X - j - 1)^+] / c for X ~ Pois(c)
                    let tail = (c * poisson_sf(c, j) - (j as f64 + 1.0) * poisson_sf(c, j + 1)).max(0.0) / c;
                    if tail < tol {
                        return finish(probs, tail);
                    }
                }
                Err(Error::Truncation { tol, max_index: MAX_PMF_INDEX, tail: f64::NAN })
            }
            IncrementKind::Grid { law } => {
                if self.mean == 0.0 {
                    return Ok(TruncatedPmf::point_mass(0));
                }
                mixed_poisson_pmf(&MixingLaw::grid(law.clone(), false)?, MAX_PMF_INDEX, tol)
            }
        }
    }

    /// `E[e^{-eta} eta^i] = i! P(Y = i)`.
    pub fn tilted_moment(&self, i: u32, tol: f64) -> Result<f64> {
        let k = i as i32;
        self.expect(|x| if x == 0.0 { if i == 0 { 1.0 } else { 0.0 } } else { (-x).exp() * x.powi(k) }, tol)
    }

    /// Whether `Y ~ MP(eta)` has a non-increasing mass function, decided from the kind.
    ///
    /// `None` for gridded increments, which must be checked numerically.
    pub fn mp_is_monotone(&self) -> Option<bool> {
        match &self.kind {
            IncrementKind::PointMass { at } => Some(*at <= 1.0),
            IncrementKind::Bernoulli { .. } | IncrementKind::Exponential { .. } | IncrementKind::Uniform { .. } => Some(true),
            IncrementKind::Grid { .. } => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            IncrementKind::PointMass { at } => *at,
            IncrementKind::Bernoulli { q } => {
                if rng.random::<f64>() < *q {
                    1.0
                } else {
                    0.0
                }
            }
            IncrementKind::Exponential { rate } => -(-rng.random::<f64>()).ln_1p() / rate,
            IncrementKind::Uniform { width } => width * rng.random::<f64>(),
            IncrementKind::Grid { law } => law.quantile(rng.random::<f64>()),
        }
    }
}

/// Increment `eta` with `xi^s = xi + eta` for catalog mixings.
///
/// The binomial entry is the Bernoulli(`1 - p`) increment; binomial laws are not
/// infinitely divisible, so the relation holds in mean only.
pub fn steutel_increment(mixing: &MixingLaw) -> Result<IncrementLaw> {
    match mixing.kind() {
        MixingKind::PointMass { .. } => IncrementLaw::point_mass(0.0),
        MixingKind::Poisson { .. } => IncrementLaw::point_mass(1.0),
        MixingKind::Binomial { p, .. } => IncrementLaw::bernoulli(1.0 - p),
        MixingKind::Gamma { rate, .. } => IncrementLaw::exponential(*rate),
        MixingKind::Dickman { scale } => IncrementLaw::uniform(*scale),
        MixingKind::Grid { .. } => Err(Error::Unsupported(
            "no size-bias increment is known for a gridded mixing law".into(),
        )),
    }
}

/// Law of `Y ~ MP(eta)`, so that `Z^s = Z + Y + 1` for `Z ~ MP(xi)`.
pub fn mp_sizebias_increment(mixing: &MixingLaw, tol: f64) -> Result<TruncatedPmf> {
    steutel_increment(mixing)?.mp_pmf(tol)
}

/// Size-biased pmf `j p_j / sum_k k p_k` on the same window; the input tail is carried over.
pub fn size_bias_pmf(law: &TruncatedPmf) -> Result<TruncatedPmf> {
    let weights: Vec<f64> = law.probs().iter().enumerate().map(|(j, &p)| j as f64 * p).collect();
    let total = stable_sum(weights.iter().copied());
    if !(total > 0.0) {
        return Err(Error::domain("size-biasing needs a positive mean"));
    }
    let keep = 1.0 - law.tail_mass();
    TruncatedPmf::new(weights.into_iter().map(|w| w / total * keep).collect(), law.tail_mass())
}

/// Non-increasing masses over the window, with the tail no larger than the last mass.
///
/// A relative slack of `1e-12` absorbs rounding in equal neighbouring masses.
pub fn is_monotone_mass(law: &TruncatedPmf) -> bool {
    let p = law.probs();
    let slack = |x: f64| x * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    p.windows(2).all(|w| w[1] <= slack(w[0])) && law.tail_mass() <= slack(p[p.len() - 1])
}

/// `E[1/(Y + 1)]` over a truncated pmf; the tail contributes at most `tail / (K + 2)`.
pub fn mean_reciprocal_shift(y: &TruncatedPmf) -> (f64, f64) {
    let mut s = NeumaierSum::default();
    for (j, &p) in y.probs().iter().enumerate() {
        s.add(p / (j as f64 + 1.0));
    }
    (s.total(), y.tail_mass() / (y.max_index() as f64 + 2.0))
}
