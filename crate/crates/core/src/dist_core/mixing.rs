use std::str::FromStr;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::dickman::{
    dickman_cdf, dickman_density, dickman_quantile, rho_tail_point, sample_dickman,
};
use super::grid::{GriddedLaw, Interpolation};
use super::pmf::TruncatedPmf;
use crate::error::{Error, Result};
use crate::numeric::{
    integrate_pieces, ln_factorial, ln_gamma, poisson_pmf, poisson_sf, stable_sum, NeumaierSum,
};

/// Index cap for pmfs whose tail never drops below the requested tolerance.
pub const MAX_PMF_INDEX: usize = 100_000;

/// Depth of the Dickman recursion used by [`MixingLaw::sample`].
pub const DICKMAN_SAMPLER_DEPTH: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixingKind {
    PointMass { at: f64 },
    Poisson { mean: f64 },
    Binomial { n: u64, p: f64 },
    /// Gamma law with the given shape and rate (mean `shape / rate`).
    Gamma { shape: f64, rate: f64 },
    /// `scale * D` with `D` standard Dickman.
    Dickman { scale: f64 },
    Grid { law: GriddedLaw, assumed_infinitely_divisible: bool },
}

/// A non-negative mixing law `xi` for a mixed Poisson variable `MP(xi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingLaw {
    kind: MixingKind,
    mean: f64,
    variance: f64,
}

fn binomial_weights(n: u64, p: f64) -> Vec<f64> {
    (0..=n)
        .map(|m| {
            if p == 1.0 {
                return if m == n { 1.0 } else { 0.0 };
            }
            let lc = ln_factorial(n) - ln_factorial(m) - ln_factorial(n - m);
            (lc + m as f64 * p.ln() + (n - m) as f64 * (1.0 - p).ln()).exp()
        })
        .collect()
}

/// Raw moments `E D^k`, `k = 0..=kmax`, of the standard Dickman law via `E D^{k+1} = E (D + U)^k`.
fn dickman_raw_moments(kmax: usize) -> Vec<f64> {
    let mut m = vec![1.0; kmax + 1];
    for k in 0..kmax {
        // E (D + U)^k = sum_i C(k, i) E D^i / (k - i + 1)
        let mut s = 0.0;
        let mut binom = 1.0;
        for i in 0..=k {
            s += binom * m[i] / (k - i + 1) as f64;
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
        m[k + 1] = s;
    }
    m
}

impl MixingLaw {
    pub fn point_mass(at: f64) -> Result<Self> {
        if !(at > 0.0 && at.is_finite()) {
            return Err(Error::domain(format!("point-mass mixing needs a positive location, got {at}")));
        }
        Ok(Self { kind: MixingKind::PointMass { at }, mean: at, variance: 0.0 })
    }

    pub fn poisson(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::domain(format!("Poisson mixing needs a positive mean, got {mean}")));
        }
        Ok(Self { kind: MixingKind::Poisson { mean }, mean, variance: mean })
    }

    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        if n == 0 || !(p > 0.0 && p <= 1.0) {
            return Err(Error::domain(format!("binomial mixing needs n >= 1 and p in (0, 1], got n = {n}, p = {p}")));
        }
        let nf = n as f64;
        Ok(Self { kind: MixingKind::Binomial { n, p }, mean: nf * p, variance: nf * p * (1.0 - p) })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(Error::domain(format!("gamma mixing needs positive shape and rate, got {shape}, {rate}")));
        }
        Ok(Self {
            kind: MixingKind::Gamma { shape, rate },
            mean: shape / rate,
            variance: shape / (rate * rate),
        })
    }

    pub fn dickman(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!("Dickman mixing needs a positive scale, got {scale}")));
        }
        Ok(Self { kind: MixingKind::Dickman { scale }, mean: scale, variance: 0.5 * scale * scale })
    }

    /// User-supplied law; infinite divisibility is the caller's assertion, not verified.
    pub fn grid(law: GriddedLaw, assumed_infinitely_divisible: bool) -> Result<Self> {
        if law.support().0 < 0.0 {
            return Err(Error::domain("mixing laws must be supported on [0, inf)"));
        }
        let mean = law.mean();
        if !(mean > 0.0) {
            return Err(Error::domain("mixing law must have a positive mean"));
        }
        let variance = law.variance().max(0.0);
        Ok(Self { kind: MixingKind::Grid { law, assumed_infinitely_divisible }, mean, variance })
    }

    pub fn kind(&self) -> &MixingKind {
        &self.kind
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Short descriptor, parseable by [`FromStr`] for catalog kinds.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            MixingKind::PointMass { at } => format!("point:{at}"),
            MixingKind::Poisson { mean } => format!("poisson:{mean}"),
            MixingKind::Binomial { n, p } => format!("binomial:{n},{p}"),
            MixingKind::Gamma { shape, rate } => format!("gamma:{shape},{rate}"),
            MixingKind::Dickman { scale } => format!("dickman:{scale}"),
            MixingKind::Grid { law, .. } => format!("grid:{}pts", law.grid().len()),
        }
    }

    /// Whether the law is known (or asserted) to be infinitely divisible.
    ///
    /// Binomial laws are divisible only in the degenerate case `p = 1`.
    pub fn is_infinitely_divisible(&self) -> bool {
        match &self.kind {
            MixingKind::Binomial { p, .. } => *p == 1.0,
            MixingKind::Grid { assumed_infinitely_divisible, .. } => *assumed_infinitely_divisible,
            _ => true,
        }
    }

    /// Atoms of a discrete mixing law, with the mass left beyond the last atom.
    fn atoms(&self, tol: f64) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        match &self.kind {
            MixingKind::PointMass { at } => Some((vec![*at], vec![1.0], 0.0)),
            MixingKind::Poisson { mean } => {
                let pmf = TruncatedPmf::poisson(*mean, tol).ok()?;
                let xs = (0..pmf.probs().len()).map(|j| j as f64).collect();
                Some((xs, pmf.probs().to_vec(), pmf.tail_mass()))
            }
            MixingKind::Binomial { n, p } => {
                let xs = (0..=*n).map(|j| j as f64).collect();
                Some((xs, binomial_weights(*n, *p), 0.0))
            }
            MixingKind::Grid { law, .. } if law.interpolation() == Interpolation::Step => {
                let (xs, ps) = law.atoms()?;
                Some((xs, ps, 0.0))
            }
            _ => None,
        }
    }

    /// Upper integration limit beyond which the law has mass below `eps`, with interior breakpoints.
    fn continuous_breaks(&self, eps: f64) -> Vec<f64> {
        match &self.kind {
            MixingKind::Gamma { shape, rate } => {
                let mut hi = (shape + 1.0) / rate;
                while statrs::function::gamma::gamma_ur(*shape, rate * hi) > eps {
                    hi *= 1.5;
                }
                let mode = ((shape - 1.0).max(0.0)) / rate;
                let mut b = vec![0.0];
                for f in [0.25, 1.0, 2.0, 4.0] {
                    let x = (mode + f * shape.sqrt() / rate).min(hi);
                    if x > *b.last().unwrap() {
                        b.push(x);
                    }
                }
                if hi > *b.last().unwrap() {
                    b.push(hi);
                }
                b
            }
            MixingKind::Dickman { scale } => {
                let top = rho_tail_point(eps * 1e-2).max(2);
                (0..=top).map(|k| k as f64 * scale).collect()
            }
            MixingKind::Grid { law, .. } => law.grid().to_vec(),
            _ => Vec::new(),
        }
    }

    /// `E f(xi)` by summation (discrete kinds), quadrature (continuous kinds) or exact cell integration.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        if let Some((xs, ps, _)) = self.atoms(tol * 1e-3) {
            return Ok(stable_sum(xs.iter().zip(ps.iter()).map(|(&x, &p)| p * f(x))));
        }
        match &self.kind {
            MixingKind::Gamma { shape, rate } => {
                // substitute y = x^shape to remove the singularity at the origin
                let a = *shape;
                let r = *rate;
                let norm = (a * r.ln() - ln_gamma(a + 1.0)).exp();
                let breaks: Vec<f64> = self.continuous_breaks(tol * 1e-6).iter().map(|x| x.powf(a)).collect();
                let q = integrate_pieces(
                    |y: f64| {
                        let x = y.powf(1.0 / a);
                        f(x) * (-r * x).exp()
                    },
                    &breaks,
                    tol / norm.max(1e-300),
                )?;
                Ok(norm * q.value)
            }
            MixingKind::Dickman { scale } => {
                let c = *scale;
                let breaks = self.continuous_breaks(tol);
                let q = integrate_pieces(|x| f(x) * dickman_density(x / c) / c, &breaks, tol)?;
                Ok(q.value)
            }
            MixingKind::Grid { law, .. } => Ok(law.expect(f)),
            _ => unreachable!("discrete kinds handled above"),
        }
    }

    /// Raw moment `E xi^k` for `k <= 4`.
    pub fn raw_moment(&self, k: u32) -> f64 {
        assert!(k <= 4, "raw moments are provided up to order 4");
        let kf = k as i32;
        match &self.kind {
            MixingKind::PointMass { at } => at.powi(kf),
            MixingKind::Poisson { mean: mu } => {
                // Touchard polynomials
                let t = [
                    1.0,
                    *mu,
                    mu * mu + mu,
                    mu.powi(3) + 3.0 * mu * mu + mu,
                    mu.powi(4) + 6.0 * mu.powi(3) + 7.0 * mu * mu + mu,
                ];
                t[k as usize]
            }
            MixingKind::Gamma { shape, rate } => {
                (0..k).map(|i| shape + i as f64).product::<f64>() / rate.powi(kf)
            }
            MixingKind::Dickman { scale } => dickman_raw_moments(4)[k as usize] * scale.powi(kf),
            _ => self.expect(|x| x.powi(kf), 1e-13).unwrap_or(f64::NAN),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.kind {
            MixingKind::PointMass { at } => {
                if x >= *at {
                    1.0
                } else {
                    0.0
                }
            }
            MixingKind::Poisson { mean } => 1.0 - poisson_sf(*mean, x.floor() as u64),
            MixingKind::Binomial { n, p } => {
                let top = (x.floor() as u64).min(*n) as usize;
                stable_sum(binomial_weights(*n, *p).into_iter().take(top + 1)).min(1.0)
            }
            MixingKind::Gamma { shape, rate } => match rate * x {
                t if t <= 0.0 => 0.0,
                t if t.is_infinite() => 1.0,
                t => statrs::function::gamma::gamma_lr(*shape, t),
            },
            MixingKind::Dickman { scale } => dickman_cdf(x / scale),
            MixingKind::Grid { law, .. } => law.cdf(x),
        }
    }

    /// Left-continuous quantile function.
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.kind {
            MixingKind::PointMass { at } => *at,
            MixingKind::Poisson { .. } | MixingKind::Binomial { .. } => {
                let mut k = 0.0;
                while self.cdf(k) < u && k < MAX_PMF_INDEX as f64 {
                    k += 1.0;
                }
                k
            }
            MixingKind::Gamma { rate, .. } => {
                if u <= 0.0 {
                    return 0.0;
                }
                let mut hi = self.mean.max(1.0 / rate);
                while self.cdf(hi) < u {
                    hi *= 2.0;
                    if hi > 1e300 {
                        break;
                    }
                }
                crate::numeric::bisect(|x| self.cdf(x) - u, 0.0, hi, hi * 1e-16)
            }
            MixingKind::Dickman { scale } => scale * dickman_quantile(u),
            MixingKind::Grid { law, .. } => law.quantile(u),
        }
    }

    /// CDF levels at which the quantile function jumps (empty for continuous kinds).
    pub fn quantile_breaks(&self) -> Vec<f64> {
        match self.atoms(1e-17) {
            Some((_, ps, _)) => {
                let mut acc = NeumaierSum::default();
                let mut out = Vec::with_capacity(ps.len());
                for p in ps {
                    acc.add(p);
                    let c = acc.total();
                    if c > 0.0 && c < 1.0 {
                        out.push(c);
                    }
                }
                out
            }
            None => Vec::new(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            MixingKind::PointMass { at } => *at,
            MixingKind::Poisson { mean } => rand_distr::Poisson::new(*mean).expect("validated mean").sample(rng),
            MixingKind::Binomial { n, p } => rand_distr::Binomial::new(*n, *p).expect("validated p").sample(rng) as f64,
            MixingKind::Gamma { shape, rate } => {
                rand_distr::Gamma::new(*shape, 1.0 / rate).expect("validated parameters").sample(rng)
            }
            MixingKind::Dickman { scale } => scale * sample_dickman(rng, DICKMAN_SAMPLER_DEPTH),
            MixingKind::Grid { law, .. } => law.quantile(rng.random::<f64>()),
        }
    }
}

impl FromStr for MixingLaw {
    type Err = Error;

    /// Parses `point:a`, `poisson:mu`, `binomial:n,p`, `gamma:shape,rate` or `dickman:c`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("mixing descriptor `{s}` needs the form kind:args")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{a}` in `{s}`: {e}"))))
            .collect::<Result<_>>()?;
        let want = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("`{kind}` takes {n} argument(s), got {}", nums.len())))
            }
        };
        match kind.trim().to_ascii_lowercase().as_str() {
            "point" | "pointmass" => {
                want(1)?;
                Self::point_mass(nums[0])
            }
            "poisson" => {
                want(1)?;
                Self::poisson(nums[0])
            }
            "binomial" => {
                want(2)?;
                if nums[0] < 1.0 || nums[0].fract() != 0.0 {
                    return Err(Error::Parse(format!("binomial size must be a positive integer, got {}", nums[0])));
                }
                Self::binomial(nums[0] as u64, nums[1])
            }
            "gamma" => {
                want(2)?;
                Self::gamma(nums[0], nums[1])
            }
            "dickman" => {
                want(1)?;
                Self::dickman(nums[0])
            }
            other => Err(Error::Parse(format!("unknown mixing kind `{other}`"))),
        }
    }
}

/// Law of `Z ~ MP(xi)`: `P(Z = j) = E[e^{-xi} xi^j] / j!`, truncated once the
/// certified upper tail drops below `tol`.
pub fn mixed_poisson_pmf(mixing: &MixingLaw, max_j: usize, tol: f64) -> Result<TruncatedPmf> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    // per-index (mass, tail beyond index)
    let eval: Box<dyn Fn(u64) -> Result<(f64, f64)>> = match mixing.kind() {
        MixingKind::PointMass { at } => {
            let a = *at;
            Box::new(move |j| Ok((poisson_pmf(a, j), poisson_sf(a, j))))
        }
        MixingKind::Gamma { shape, rate } => {
            let (a, r) = (*shape, *rate);
            let q = r / (1.0 + r);
            Box::new(move |j| {
                let jf = j as f64;
                let ln = ln_gamma(jf + a) - ln_gamma(a) - ln_factorial(j) + a * q.ln() + jf * (1.0 - q).ln();
                let tail = statrs::function::beta::beta_reg(jf + 1.0, a, 1.0 - q);
                Ok((ln.exp(), tail))
            })
        }
        MixingKind::Grid { law, .. } if law.interpolation() == Interpolation::Linear => {
            let law = law.clone();
            Box::new(move |j| Ok(grid_linear_mass(&law, j)))
        }
        MixingKind::Dickman { .. } => {
            let m = mixing.clone();
            let qtol = tol * 1e-3;
            Box::new(move |j| {
                let lnf = ln_factorial(j);
                let mass = m.expect(|x| if x == 0.0 { if j == 0 { 1.0 } else { 0.0 } } else { (-x + j as f64 * x.ln() - lnf).exp() }, qtol)?;
                let tail = m.expect(|x| poisson_sf(x, j), qtol)?;
                let beyond = 1.0 - m.cdf(*m.continuous_breaks(qtol).last().unwrap());
                Ok((mass, tail + beyond.max(0.0)))
            })
        }
        _ => {
            let (xs, ps, rest) = mixing.atoms(tol * 1e-3).expect("discrete kind");
            Box::new(move |j| {
                let mass = stable_sum(xs.iter().zip(ps.iter()).map(|(&x, &p)| p * poisson_pmf(x, j)));
                let tail = stable_sum(xs.iter().zip(ps.iter()).map(|(&x, &p)| p * poisson_sf(x, j))) + rest;
                Ok((mass, tail))
            })
        }
    };
    let mut probs = Vec::new();
    for j in 0..=max_j {
        let (mass, tail) = eval(j as u64)?;
        probs.push(mass);
        if tail < tol {
            let sum = stable_sum(probs.iter().copied());
            // quadrature noise can leave the audit marginally off; fold it into the tail when benign
            let tail = tail.max(1.0 - sum).max(0.0);
            return TruncatedPmf::new(probs, tail);
        }
        if j == max_j {
            return Err(Error::Truncation { tol, max_index: max_j, tail });
        }
    }
    unreachable!()
}

/// Exact mixed Poisson mass and tail for a piecewise-constant mixing density.
fn grid_linear_mass(law: &GriddedLaw, j: u64) -> (f64, f64) {
    let g = law.grid();
    let c = law.cdf_values();
    // int_0^b P(Pois(x) > j) dx
    let integrated_sf = |b: f64| b * poisson_sf(b, j) - (j as f64 + 1.0) * poisson_sf(b, j + 1);
    let mut mass = NeumaierSum::default();
    let mut tail = NeumaierSum::default();
    if c[0] > 0.0 {
        mass.add(c[0] * poisson_pmf(g[0], j));
        tail.add(c[0] * poisson_sf(g[0], j));
    }
    for i in 1..g.len() {
        let dm = c[i] - c[i - 1];
        if dm <= 0.0 {
            continue;
        }
        let h = g[i] - g[i - 1];
        mass.add(dm / h * (poisson_sf(g[i], j) - poisson_sf(g[i - 1], j)));
        tail.add(dm / h * (integrated_sf(g[i]) - integrated_sf(g[i - 1])));
    }
    tail.add((1.0 - c[c.len() - 1]).max(0.0));
    (mass.total().max(0.0), tail.total().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_gives_poisson() {
        let pmf = mixed_poisson_pmf(&MixingLaw::point_mass(2.0).unwrap(), 1000, 1e-12).unwrap();
        assert!((pmf.get(0) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn exponential_mixing_gives_geometric() {
        let pmf = mixed_poisson_pmf(&MixingLaw::gamma(1.0, 1.0).unwrap(), 1000, 1e-12).unwrap();
        for j in 0..30 {
            assert!((pmf.get(j) - 0.5f64.powi(j as i32 + 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn dickman_moments_recovered() {
        let pmf = mixed_poisson_pmf(&MixingLaw::dickman(1.0).unwrap(), 1000, 1e-10).unwrap();
        assert!((pmf.mean() - 1.0).abs() < 1e-6);
        assert!((pmf.variance() - 1.5).abs() < 1e-6);
    }

    #[test]
    fn dickman_raw_moment_recursion() {
        let m = dickman_raw_moments(4);
        assert!((m[2] - 1.5).abs() < 1e-15);
        assert!((m[3] - 17.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn descriptors_round_trip() {
        for d in ["gamma:1.1,4", "poisson:2", "binomial:5,0.3", "dickman:1", "point:2"] {
            let m: MixingLaw = d.parse().unwrap();
            assert_eq!(m.descriptor(), d);
        }
        assert!("gamma:1".parse::<MixingLaw>().is_err());
        assert!("weird:1".parse::<MixingLaw>().is_err());
    }

    #[test]
    fn binomial_is_not_divisible() {
        assert!(!MixingLaw::binomial(2, 0.5).unwrap().is_infinitely_divisible());
        assert!(MixingLaw::binomial(2, 1.0).unwrap().is_infinitely_divisible());
    }
}
