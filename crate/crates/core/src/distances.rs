//! Total variation, Kolmogorov and Wasserstein distances on the line: exact for
//! truncated pmfs and gridded laws, empirical (with bootstrap error bars) for samples.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biasing::IncrementLaw;
use crate::dist_core::{GriddedLaw, TruncatedPmf};
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::numeric::{bisect, integrate_pieces, std_normal_cdf, std_normal_pdf, NeumaierSum};
use crate::rng::stream;

/// Merged grids beyond this many points are coarsened, widening the error bar.
pub const MAX_MERGED_GRID: usize = 1 << 20;

pub const MIN_EMPIRICAL_SAMPLES: usize = 1000;

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Component key reserved for bootstrap streams.
const BOOTSTRAP_STREAM: u64 = 0xb007;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    ExactPmf,
    ExactGrid,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub metric: Metric,
    pub value: f64,
    /// Truncation bound for exact methods, bootstrap or DKW half-width for empirical ones.
    pub error_bar: f64,
    pub method: DistanceMethod,
}

fn exact_pmf(metric: Metric, value: f64, error_bar: f64) -> DistanceResult {
    DistanceResult { metric, value, error_bar, method: DistanceMethod::ExactPmf }
}

/// `(1/2) sum |a_j - b_j|`; the unaccounted tails can add at most half their sum.
pub fn tv_discrete(a: &TruncatedPmf, b: &TruncatedPmf) -> DistanceResult {
    let k = a.max_index().max(b.max_index());
    let mut s = NeumaierSum::default();
    for j in 0..=k {
        s.add((a.get(j) - b.get(j)).abs());
    }
    exact_pmf(Metric::TotalVariation, (0.5 * s.total()).min(1.0), 0.5 * (a.tail_mass() + b.tail_mass()))
}

/// `sum_j |F_a(j) - F_b(j)|` over the joint window.
///
/// Beyond the window only the tail masses are known; the error bar assumes the
/// tails extend no further than the window length.
pub fn wasserstein_discrete(a: &TruncatedPmf, b: &TruncatedPmf) -> DistanceResult {
    let k = a.max_index().max(b.max_index());
    let (mut fa, mut fb) = (NeumaierSum::default(), NeumaierSum::default());
    let mut s = NeumaierSum::default();
    for j in 0..k {
        fa.add(a.get(j));
        fb.add(b.get(j));
        s.add((fa.total() - fb.total()).abs());
    }
    let tails = a.tail_mass() + b.tail_mass();
    exact_pmf(Metric::Wasserstein, s.total(), tails * (k as f64 + 1.0))
}

pub fn kolmogorov_discrete(a: &TruncatedPmf, b: &TruncatedPmf) -> DistanceResult {
    let k = a.max_index().max(b.max_index());
    let (mut fa, mut fb) = (NeumaierSum::default(), NeumaierSum::default());
    let mut best = 0.0f64;
    for j in 0..=k {
        fa.add(a.get(j));
        fb.add(b.get(j));
        best = best.max((fa.total() - fb.total()).abs());
    }
    exact_pmf(Metric::Kolmogorov, best.min(1.0), a.tail_mass().max(b.tail_mass()))
}

fn merged_grid(a: &GriddedLaw, b: &GriddedLaw) -> Vec<f64> {
    let mut g: Vec<f64> = a.grid().iter().chain(b.grid().iter()).copied().collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Sup of `|F_a - F_b|`. Between merged grid points the difference is linear, so
/// the sup is attained at a grid value or a left limit.
pub fn kolmogorov_grid(a: &GriddedLaw, b: &GriddedLaw) -> DistanceResult {
    let mut best = 0.0f64;
    for x in merged_grid(a, b) {
        best = best.max((a.cdf(x) - b.cdf(x)).abs());
        best = best.max((a.cdf_left(x) - b.cdf_left(x)).abs());
    }
    DistanceResult {
        metric: Metric::Kolmogorov,
        value: best.min(1.0),
        error_bar: a.cdf_error() + b.cdf_error(),
        method: DistanceMethod::ExactGrid,
    }
}

/// `int_0^h |d(t)| dt` for `d` linear from `d0` to `d1`.
fn abs_linear_integral(d0: f64, d1: f64, h: f64) -> f64 {
    if d0 * d1 >= 0.0 {
        0.5 * h * (d0.abs() + d1.abs())
    } else {
        0.5 * h * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
    }
}

/// `int |F_a - F_b|` over the merged grid, exact for the represented laws.
///
/// The error bar adds the CDF representation errors over the span and the
/// out-of-grid tail terms; past [`MAX_MERGED_GRID`] points a uniform coarse grid
/// is used and each coarse cell adds its width times the CDF variation inside it.
pub fn wasserstein_grid(a: &GriddedLaw, b: &GriddedLaw) -> DistanceResult {
    let mut g = merged_grid(a, b);
    let span = g[g.len() - 1] - g[0];
    let mut error_bar = (a.cdf_error() + b.cdf_error()) * span + a.tail_w() + b.tail_w();
    let mut s = NeumaierSum::default();
    if g.len() <= MAX_MERGED_GRID {
        for w in g.windows(2) {
            let d0 = a.cdf(w[0]) - b.cdf(w[0]);
            let d1 = a.cdf_left(w[1]) - b.cdf_left(w[1]);
            s.add(abs_linear_integral(d0, d1, w[1] - w[0]));
        }
    } else {
        let (lo, hi) = (g[0], g[g.len() - 1]);
        let n = MAX_MERGED_GRID - 1;
        g = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let mut coarse = NeumaierSum::default();
        for w in g.windows(2) {
            let h = w[1] - w[0];
            let d0 = a.cdf(w[0]) - b.cdf(w[0]);
            let d1 = a.cdf_left(w[1]) - b.cdf_left(w[1]);
            s.add(abs_linear_integral(d0, d1, h));
            let var = (a.cdf(w[1]) - a.cdf_left(w[0])) + (b.cdf(w[1]) - b.cdf_left(w[0]));
            coarse.add(h * var);
        }
        error_bar += coarse.total();
    }
    DistanceResult { metric: Metric::Wasserstein, value: s.total(), error_bar, method: DistanceMethod::ExactGrid }
}

/// A continuous, strictly increasing CDF with its partial integrals, the
/// interface needed to compare step laws with a reference law exactly.
pub trait CdfTarget: Sync {
    fn cdf(&self, x: f64) -> f64;
    /// `int_{-inf}^x F(t) dt`.
    fn lower_partial(&self, x: f64) -> f64;
    /// `int_x^inf (1 - F(t)) dt`.
    fn upper_partial(&self, x: f64) -> f64;

    fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    fn quantile(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0, 1.0);
        while self.cdf(lo) > u {
            lo *= 2.0;
        }
        while self.cdf(hi) < u {
            hi *= 2.0;
        }
        bisect(|x| self.cdf(x) - u, lo, hi, 1e-15 * hi.abs().max(lo.abs()))
    }

    /// `int_a^b F`, using whichever partial integral is small on that side of the median.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let m = self.median();
        if b <= m {
            self.lower_partial(b) - self.lower_partial(a)
        } else if a >= m {
            (b - a) - (self.upper_partial(a) - self.upper_partial(b))
        } else {
            self.integral(a, m) + self.integral(m, b)
        }
    }
}

/// `N(mean, sd^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTarget {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianTarget {
    pub fn standard() -> Self {
        Self { mean: 0.0, sd: 1.0 }
    }

    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(Error::domain("Gaussian target needs a finite mean and positive sd"));
        }
        Ok(Self { mean, sd })
    }
}

impl CdfTarget for GaussianTarget {
    fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf((x - self.mean) / self.sd)
    }

    fn lower_partial(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        self.sd * (z * std_normal_cdf(z) + std_normal_pdf(z))
    }

    fn upper_partial(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        self.sd * (std_normal_pdf(z) - z * std_normal_cdf(-z))
    }

    fn median(&self) -> f64 {
        self.mean
    }
}

/// `int |c - F|` over `[a, b]` for a constant level `c`.
fn level_gap<T: CdfTarget + ?Sized>(target: &T, c: f64, a: f64, b: f64) -> f64 {
    let (fa, fb) = (target.cdf(a), target.cdf(b));
    let t = if c <= fa {
        a
    } else if c >= fb {
        b
    } else {
        target.quantile(c).clamp(a, b)
    };
    let below = c * (t - a) - target.integral(a, t);
    let above = target.integral(t, b) - c * (b - t);
    below.max(0.0) + above.max(0.0)
}

/// `int |F_steps - F|` for a step CDF with the given sorted atoms and cumulative levels.
fn steps_vs_target<T: CdfTarget + ?Sized>(points: &[f64], levels: &[f64], target: &T) -> f64 {
    let mut s = NeumaierSum::default();
    s.add(target.lower_partial(points[0]));
    for i in 0..points.len() - 1 {
        s.add(level_gap(target, levels[i], points[i], points[i + 1]));
    }
    let last = points.len() - 1;
    // a step law ending below one leaves the remainder unmatched; treat it as mass at the last atom
    s.add(target.upper_partial(points[last]));
    s.total()
}

/// Exact `int |F_law - F|` for a step law against a continuous target.
pub fn wasserstein_to_target<T: CdfTarget + ?Sized>(law: &GriddedLaw, target: &T) -> Result<DistanceResult> {
    let (points, _) = law
        .atoms()
        .ok_or_else(|| Error::Unsupported("comparison with a continuous target needs a step law".into()))?;
    let value = steps_vs_target(&points, law.cdf_values(), target);
    Ok(DistanceResult { metric: Metric::Wasserstein, value, error_bar: 0.0, method: DistanceMethod::ExactGrid })
}

/// Exact `sup |F_law - F|` for a step law against a continuous target.
pub fn kolmogorov_to_target<T: CdfTarget + ?Sized>(law: &GriddedLaw, target: &T) -> Result<DistanceResult> {
    let (points, _) = law
        .atoms()
        .ok_or_else(|| Error::Unsupported("comparison with a continuous target needs a step law".into()))?;
    let levels = law.cdf_values();
    let mut best = 0.0f64;
    let mut prev = 0.0;
    for (x, &c) in points.iter().zip(levels) {
        let f = target.cdf(*x);
        best = best.max((c - f).abs()).max((prev - f).abs());
        prev = c;
    }
    Ok(DistanceResult { metric: Metric::Kolmogorov, value: best, error_bar: 0.0, method: DistanceMethod::ExactGrid })
}

fn quantile_95(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let idx = ((0.95 * xs.len() as f64).ceil() as usize).saturating_sub(1);
    xs[idx]
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_EMPIRICAL_SAMPLES {
        return Err(Error::domain(format!(
            "empirical distances need at least {MIN_EMPIRICAL_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

/// `int |F_N - F|` for the empirical CDF of `samples`.
///
/// The error bar is the 95% quantile of `d_W(F*_N, F_N)` over bootstrap resamples,
/// which bounds `|d_W(F_N, F) - d_W(G, F)|` for the sampled law `G` by the triangle
/// inequality. Resample `b` uses the stream `(seed, b)`, so the value does not
/// depend on the worker count.
pub fn empirical_wasserstein<T: CdfTarget + ?Sized>(samples: &[f64], target: &T, seed: u64) -> Result<DistanceResult> {
    let n = samples.len();
    check_samples(n)?;
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("samples must be finite"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let levels: Vec<f64> = (1..=n).map(|i| i as f64 / nf).collect();
    let value = steps_vs_target(&sorted, &levels, target);

    let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let draws: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b, BOOTSTRAP_STREAM);
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            let mut cum = 0i64;
            let mut s = NeumaierSum::default();
            for (i, h) in gaps.iter().enumerate() {
                cum += counts[i] as i64;
                s.add((cum - (i as i64 + 1)).abs() as f64 * h);
            }
            s.total() / nf
        })
        .collect();
    Ok(DistanceResult {
        metric: Metric::Wasserstein,
        value,
        error_bar: quantile_95(draws),
        method: DistanceMethod::Empirical,
    })
}

/// `sup |F_N - F|`, with the 95% Dvoretzky–Kiefer–Wolfowitz half-width as error bar.
pub fn empirical_kolmogorov<T: CdfTarget + ?Sized>(samples: &[f64], target: &T) -> Result<DistanceResult> {
    let n = samples.len();
    check_samples(n)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut best = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = target.cdf(x);
        best = best.max((i as f64 / nf - f).abs()).max(((i + 1) as f64 / nf - f).abs());
    }
    let dkw = ((2.0f64 / 0.05).ln() / (2.0 * nf)).sqrt();
    Ok(DistanceResult { metric: Metric::Kolmogorov, value: best, error_bar: dkw, method: DistanceMethod::Empirical })
}

/// Empirical pmf of integer samples.
pub fn empirical_pmf(samples: &[u64]) -> Result<TruncatedPmf> {
    let top = *samples.iter().max().ok_or_else(|| Error::domain("no samples"))? as usize;
    let mut counts = vec![0.0; top + 1];
    for &s in samples {
        counts[s as usize] += 1.0;
    }
    TruncatedPmf::from_weights(counts)
}

/// Total variation between the empirical pmf of `samples` and `exact`.
///
/// The error bar is the 95% bootstrap quantile of `d_TV(p*_N, p_N)` plus half the
/// tail mass of `exact`. Resamples are drawn as sequential conditional binomials.
pub fn empirical_tv(samples: &[u64], exact: &TruncatedPmf, seed: u64) -> Result<DistanceResult> {
    let n = samples.len();
    check_samples(n)?;
    let emp = empirical_pmf(samples)?;
    let value = tv_discrete(&emp, exact).value;
    let p = emp.probs().to_vec();
    let draws: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b, BOOTSTRAP_STREAM);
            let mut left = n as u64;
            let mut rest = 1.0;
            let mut s = NeumaierSum::default();
            for &pj in &p {
                let c = if left == 0 || pj <= 0.0 {
                    0
                } else if pj >= rest {
                    left
                } else {
                    Binomial::new(left, (pj / rest).min(1.0)).expect("probability in [0, 1]").sample(&mut rng)
                };
                left -= c;
                rest -= pj;
                s.add((c as f64 / n as f64 - pj).abs());
            }
            0.5 * s.total()
        })
        .collect();
    Ok(DistanceResult {
        metric: Metric::TotalVariation,
        value,
        error_bar: quantile_95(draws) + 0.5 * exact.tail_mass(),
        method: DistanceMethod::Empirical,
    })
}

/// `int_0^inf |F_a - F_b|` for two non-negative increment laws.
///
/// Integrated piecewise between the kinks of both CDFs; the error bar adds the
/// quadrature error and both upper tails beyond the last breakpoint.
pub fn wasserstein_increments(a: &IncrementLaw, b: &IncrementLaw, tol: f64) -> Result<DistanceResult> {
    if a == b {
        return Ok(DistanceResult { metric: Metric::Wasserstein, value: 0.0, error_bar: 0.0, method: DistanceMethod::ExactGrid });
    }
    let eps = tol * 1e-3;
    let mut breaks: Vec<f64> = a.breaks(eps).into_iter().chain(b.breaks(eps)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let top = breaks[breaks.len() - 1];
    let q = integrate_pieces(|x| (a.cdf(x) - b.cdf(x)).abs(), &breaks, tol)?;
    let tails = a.upper_tail_integral(top) + b.upper_tail_integral(top);
    Ok(DistanceResult {
        metric: Metric::Wasserstein,
        value: q.value,
        error_bar: q.error + tails,
        method: DistanceMethod::ExactGrid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pois(mu: f64) -> TruncatedPmf {
        TruncatedPmf::poisson(mu, 1e-15).unwrap()
    }

    #[test]
    fn poisson_examples() {
        let tv = tv_discrete(&pois(1.0), &pois(1.1));
        // 40-digit reference sum
        assert!((tv.value - 0.036_729_606_576_917_58).abs() < 1e-15);
        let w = wasserstein_discrete(&pois(1.0), &pois(1.2));
        assert!((w.value - 0.2).abs() < 2e-10);
        assert_eq!(tv_discrete(&TruncatedPmf::point_mass(0), &TruncatedPmf::point_mass(1)).value, 1.0);
    }

    #[test]
    fn shift_by_one() {
        let a = pois(2.5);
        let w = wasserstein_discrete(&a, &a.shift(1));
        assert!((w.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_law_against_uniform() {
        let step = GriddedLaw::from_atoms(&[0.0, 1.0], &[0.75, 0.25]).unwrap();
        let u = GriddedLaw::uniform(0.0, 1.0).unwrap();
        let w = wasserstein_grid(&step, &u);
        assert!((w.value - 0.3125).abs() < 1e-15);
        assert_eq!(wasserstein_grid(&u, &u).value, 0.0);
    }

    #[test]
    fn gaussian_shift_kolmogorov() {
        let xs: Vec<f64> = (0..=20_000).map(|i| -10.0 + i as f64 * 1e-3).collect();
        let a = GriddedLaw::from_cdf_fn(xs.clone(), std_normal_cdf, 3e-8, 0.0).unwrap();
        let b = GriddedLaw::from_cdf_fn(xs, |x| std_normal_cdf(x - 0.5), 3e-8, 0.0).unwrap();
        let k = kolmogorov_grid(&a, &b);
        assert!((k.value - 0.197_413).abs() < 1e-6);
    }

    #[test]
    fn point_mass_against_gaussian() {
        let law = GriddedLaw::from_atoms(&[0.0], &[1.0]).unwrap();
        let w = wasserstein_to_target(&law, &GaussianTarget::standard()).unwrap();
        assert!((w.value - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
        let k = kolmogorov_to_target(&law, &GaussianTarget::standard()).unwrap();
        assert_eq!(k.value, 0.5);
    }

    #[test]
    fn constant_samples_against_gaussian() {
        let w = empirical_wasserstein(&vec![0.0; 2000], &GaussianTarget::standard(), 1).unwrap();
        assert!((w.value - 0.797_884_560_802_865_4).abs() < 1e-14);
        assert_eq!(w.error_bar, 0.0);
        assert!(empirical_wasserstein(&[0.0; 10], &GaussianTarget::standard(), 1).is_err());
    }

    #[test]
    fn identical_increments() {
        let a = IncrementLaw::exponential(4.0).unwrap();
        assert_eq!(wasserstein_increments(&a, &a, 1e-12).unwrap().value, 0.0);
        let u = IncrementLaw::uniform(1.0).unwrap();
        let p = IncrementLaw::point_mass(0.5).unwrap();
        assert!((wasserstein_increments(&u, &p, 1e-12).unwrap().value - 0.25).abs() < 1e-13);
    }
}
