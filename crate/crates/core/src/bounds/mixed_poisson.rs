use std::cmp::Ordering;

use serde::Serialize;

use super::{BoundReport, TheoremId};
use crate::biasing::{steutel_increment, IncrementLaw};
use crate::dist_core::{GriddedLaw, MixingLaw};
use crate::distances::wasserstein_increments;
use crate::error::{Error, Result};
use crate::experiments::{harmonic_decomposition, harmonic_increment_law, overflow_harmonic_dw};
use crate::metric::Metric;
use crate::numeric::integrate_pieces;
use crate::stein_factors::{mp_stein_factors, SteinFactorBounds};
use num_traits::ToPrimitive;

/// Test-function class of a Taylor bound; every class has `||Delta^{k+1} h|| <= 2^k`.
pub type HClass = Metric;

/// Slack allowed in the CDF comparison behind a stochastic ordering check.
const ORDERING_SLACK: f64 = 1e-10;

/// Tolerance on matched mixing moments for the Taylor bound.
const MOMENT_MATCH_TOL: f64 = 1e-8;

/// One orientation of the two-mixing bound: Stein factors of the law playing the target.
struct Oriented {
    factors: SteinFactorBounds,
    increment_term: f64,
    mean_term: f64,
    from_target: bool,
}

impl Oriented {
    fn new(target: &MixingLaw, other_mean: f64, gap: f64, metric: Metric, tol: f64, from_target: bool) -> Result<Self> {
        let factors = mp_stein_factors(target, metric, tol)?;
        Ok(Self {
            increment_term: target.mean() * factors.m1 * gap,
            mean_term: factors.m0 * (other_mean - target.mean()).abs(),
            factors,
            from_target,
        })
    }

    fn total(&self) -> f64 {
        self.increment_term + self.mean_term
    }

    fn report<I: Serialize>(self, theorem: TheoremId, inputs: &I, pre: &[(&str, bool)], alternative: Option<f64>) -> BoundReport {
        let mut r = BoundReport::assemble(
            theorem,
            inputs,
            &[("increment_term", self.increment_term), ("mean_term", self.mean_term)],
            pre,
        )
        .with_diagnostic("m0", self.factors.m0)
        .with_diagnostic("m1", self.factors.m1)
        .with_diagnostic("lambda_total", self.factors.lambda_total)
        .with_diagnostic("factors_from_target", if self.from_target { 1.0 } else { 0.0 });
        if let Some(b) = self.factors.beta {
            r = r.with_diagnostic("beta", b);
        }
        if let Some(a) = alternative {
            r = r.with_diagnostic("other_orientation_value", a);
        }
        for w in self.factors.warnings {
            r = r.with_warning(w);
        }
        r
    }
}

/// Keep the orientation with the smaller total; a failed orientation yields to the other.
fn pick(a: Result<Oriented>, b: Result<Oriented>) -> Result<(Oriented, Option<f64>)> {
    match (a, b) {
        (Ok(a), Ok(b)) => {
            if b.total() < a.total() {
                let other = a.total();
                Ok((b, Some(other)))
            } else {
                let other = b.total();
                Ok((a, Some(other)))
            }
        }
        (Ok(a), Err(_)) => Ok((a, None)),
        (Err(_), Ok(b)) => Ok((b, None)),
        (Err(e), Err(_)) => Err(e),
    }
}

#[derive(Serialize)]
struct PairInputs<'a> {
    w: &'a MixingLaw,
    z: &'a MixingLaw,
    metric: Metric,
    tol: f64,
}

/// `(E xi) M_1 d_W(nu, eta) + M_0 |E mu - E xi|` for `W ~ MP(mu)`, `Z ~ MP(xi)`.
///
/// Both laws may supply the Stein factors; the smaller result is reported, and
/// `factors_from_target` records which one was used.
pub fn mp_distance_bound(w: &MixingLaw, z: &MixingLaw, metric: Metric, tol: f64) -> Result<BoundReport> {
    let nu = steutel_increment(w)?;
    let eta = steutel_increment(z)?;
    let d = wasserstein_increments(&nu, &eta, tol)?;
    let gap = d.value + d.error_bar;
    let (chosen, other) = pick(
        Oriented::new(z, w.mean(), gap, metric, tol, true),
        Oriented::new(w, z.mean(), gap, metric, tol, false),
    )?;
    let pre = [
        ("w_infinitely_divisible", w.is_infinitely_divisible()),
        ("z_infinitely_divisible", z.is_infinitely_divisible()),
    ];
    Ok(chosen
        .report(TheoremId::Mp, &PairInputs { w, z, metric, tol }, &pre, other)
        .with_diagnostic("d_w_increments", d.value)
        .with_diagnostic("d_w_error_bar", d.error_bar))
}

#[derive(Serialize)]
struct IncrementInputs<'a> {
    w_mean: f64,
    nu: &'a IncrementLaw,
    z: &'a MixingLaw,
    metric: Metric,
    tol: f64,
}

/// Same bound when `W^s = W + MP(nu) + 1` is known directly, as for mixings that are
/// not themselves catalog laws; the Stein factors come from `z`.
pub fn mp_distance_bound_from_increment(
    w_mean: f64,
    nu: &IncrementLaw,
    z: &MixingLaw,
    metric: Metric,
    tol: f64,
) -> Result<BoundReport> {
    if !(w_mean > 0.0 && w_mean.is_finite()) {
        return Err(Error::domain("mean of the approximated mixing must be positive"));
    }
    let eta = steutel_increment(z)?;
    let d = wasserstein_increments(nu, &eta, tol)?;
    let o = Oriented::new(z, w_mean, d.value + d.error_bar, metric, tol, true)?;
    let pre = [("z_infinitely_divisible", z.is_infinitely_divisible())];
    Ok(o.report(TheoremId::Mp, &IncrementInputs { w_mean, nu, z, metric, tol }, &pre, None)
        .with_diagnostic("d_w_increments", d.value)
        .with_diagnostic("d_w_error_bar", d.error_bar))
}

/// Stochastic order between two increments: `Greater` when `a` is stochastically larger
/// (`F_a <= F_b` everywhere), `Equal` when the CDFs agree, `None` when they cross.
pub fn increments_ordering(a: &IncrementLaw, b: &IncrementLaw) -> Option<Ordering> {
    let mut pts: Vec<f64> = a.breaks(1e-14).into_iter().chain(b.breaks(1e-14)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut xs = pts.clone();
    for w in pts.windows(2) {
        for i in 1..32 {
            xs.push(w[0] + (w[1] - w[0]) * i as f64 / 32.0);
        }
    }
    xs.push(2.0 * pts[pts.len() - 1] + 1.0);
    let (mut a_below, mut b_below) = (true, true);
    for &x in &xs {
        let (fa, fb) = (a.cdf(x), b.cdf(x));
        a_below &= fa <= fb + ORDERING_SLACK;
        b_below &= fb <= fa + ORDERING_SLACK;
    }
    match (a_below, b_below) {
        (true, true) => Some(Ordering::Equal),
        (true, false) => Some(Ordering::Greater),
        (false, true) => Some(Ordering::Less),
        (false, false) => None,
    }
}

/// Variant for stochastically ordered increments, where `d_W(nu, eta)` collapses to
/// `|Var mu / E mu - Var xi / E xi|`.
pub fn mp_ordered_bound(w: &MixingLaw, z: &MixingLaw, metric: Metric, tol: f64) -> Result<BoundReport> {
    let nu = steutel_increment(w)?;
    let eta = steutel_increment(z)?;
    let ordering = increments_ordering(&nu, &eta);
    let gap = (w.variance() / w.mean() - z.variance() / z.mean()).abs();
    let (chosen, other) = pick(
        Oriented::new(z, w.mean(), gap, metric, tol, true),
        Oriented::new(w, z.mean(), gap, metric, tol, false),
    )?;
    let pre = [
        ("increments_ordered", ordering.is_some()),
        ("w_infinitely_divisible", w.is_infinitely_divisible()),
        ("z_infinitely_divisible", z.is_infinitely_divisible()),
    ];
    let report = chosen
        .report(TheoremId::MpOrdered, &PairInputs { w, z, metric, tol }, &pre, other)
        .with_diagnostic("dispersion_gap", gap);
    Ok(match ordering {
        Some(o) => report.with_diagnostic("w_increment_order", o as i8 as f64),
        None => report,
    })
}

fn quantile_grid(a: &MixingLaw, b: &MixingLaw) -> Vec<f64> {
    let mut u: Vec<f64> = vec![0.0, 0.5, 1.0];
    u.extend(a.quantile_breaks());
    u.extend(b.quantile_breaks());
    for j in 1..=12 {
        let e = 10f64.powi(-j);
        u.push(e);
        u.push(1.0 - e);
    }
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

/// `E|mu - xi|^p` under the comonotone (quantile) coupling.
pub fn comonotone_moment(a: &MixingLaw, b: &MixingLaw, power: f64, tol: f64) -> Result<f64> {
    if !(power > 0.0) {
        return Err(Error::domain("coupling moment order must be positive"));
    }
    if a == b {
        return Ok(0.0);
    }
    let q = integrate_pieces(|u| (a.quantile(u) - b.quantile(u)).abs().powf(power), &quantile_grid(a, b), tol)?;
    Ok(q.value)
}

#[derive(Serialize)]
struct TaylorInputs<'a> {
    w: &'a MixingLaw,
    z: &'a MixingLaw,
    k: u32,
    coupling_moment: Option<f64>,
    h_class: HClass,
}

/// `||Delta^{k+1} h|| / (k + 1)! * E|mu - xi|^{k+1}` when the first `k` mixing moments agree.
///
/// Without a supplied coupling moment the comonotone coupling is used.
pub fn moment_matched_mp_bound(
    w: &MixingLaw,
    z: &MixingLaw,
    k: u32,
    coupling_moment: Option<f64>,
    h_class: HClass,
) -> Result<BoundReport> {
    if k > 4 {
        return Err(Error::domain("moment matching is supported up to k = 4"));
    }
    let cm = match coupling_moment {
        Some(c) if c >= 0.0 && c.is_finite() => c,
        Some(c) => return Err(Error::domain(format!("coupling moment must be non-negative, got {c}"))),
        None => comonotone_moment(w, z, (k + 1) as f64, 1e-11)?,
    };
    let matched = (1..=k).all(|j| {
        let (a, b) = (w.raw_moment(j), z.raw_moment(j));
        (a - b).abs() <= MOMENT_MATCH_TOL * (1.0 + b.abs())
    });
    let fact: f64 = (1..=k + 1).map(f64::from).product();
    let h_norm = 2f64.powi(k as i32);
    let report = BoundReport::assemble(
        TheoremId::MomentMatched,
        &TaylorInputs { w, z, k, coupling_moment, h_class },
        &[("taylor_term", cm / fact * h_norm)],
        &[("moments_match", matched)],
    );
    Ok(report.with_diagnostic("coupling_moment", cm).with_diagnostic("h_norm", h_norm))
}

/// `min{1, beta^{-1}(1/(4 beta) + log+ 2 beta)}` with `beta = c e^{-c}`.
pub fn dickman_proposition_factor(c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("Dickman scale must be positive, got {c}")));
    }
    let beta = c * (-c).exp();
    Ok((1.0f64).min((0.25 / beta + (2.0 * beta).ln().max(0.0)) / beta))
}

#[derive(Serialize)]
struct DickmanInputs {
    n: u64,
    c: f64,
    metric: Metric,
}

/// `5c^2/(2n)` times the Stein factor, bounding the distance between
/// `sum_{k <= n} B_k P_k` and `MP(c D)`.
///
/// The diagnostics carry the sharper value from the exact increment distance.
pub fn dickman_bound(n: u64, c: f64, metric: Metric) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if metric == Metric::Wasserstein {
        return Err(Error::Unsupported("the Dickman bound holds in tv and k".into()));
    }
    let factor = dickman_proposition_factor(c)?;
    let nf = n as f64;
    let z = MixingLaw::dickman(c)?;
    let nu = IncrementLaw::grid(scaled(&harmonic_increment_law(n)?, c)?)?;
    let sharp = mp_distance_bound_from_increment(c, &nu, &z, metric, 1e-12)?;
    let report = BoundReport::assemble(
        TheoremId::Dickman,
        &DickmanInputs { n, c, metric },
        &[("increment_term", 5.0 * c * c / (2.0 * nf) * factor)],
        &[],
    );
    Ok(report
        .with_diagnostic("stein_factor", factor)
        .with_diagnostic("beta", c * (-c).exp())
        .with_diagnostic("exact_increment_value", sharp.value.unwrap_or(f64::NAN))
        .with_diagnostic("d_w_increments", sharp.diagnostics["d_w_increments"])
        .with_diagnostic("computed_m1", sharp.diagnostics["m1"]))
}

fn scaled(law: &GriddedLaw, c: f64) -> Result<GriddedLaw> {
    law.scaled(c)
}

#[derive(Serialize)]
struct HarmonicInputs {
    n: u64,
}

/// `d_W((1 - B_I) I / n, U(0,1)) <= a + 2/n` with `a = 1/(2n)` computed exactly.
pub fn harmonic_bound(n: u64) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let (a, b) = harmonic_decomposition(n)?;
    let nf = n as f64;
    let a = a.to_f64().unwrap_or(f64::NAN);
    let report = BoundReport::assemble(
        TheoremId::Harmonic,
        &HarmonicInputs { n },
        &[("floor_term", a), ("harmonic_term", 2.0 / nf)],
        &[],
    );
    Ok(report
        .with_diagnostic("harmonic_term_exact", b.to_f64().unwrap_or(f64::NAN))
        .with_diagnostic("d_w_exact", overflow_harmonic_dw(n)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_laws_vanish() {
        let d = MixingLaw::dickman(1.0).unwrap();
        let r = mp_distance_bound(&d, &d, Metric::TotalVariation, 1e-10).unwrap();
        assert_eq!(r.value, Some(0.0));
    }

    #[test]
    fn gamma_pair_mean_term_only() {
        let z = MixingLaw::gamma(1.0, 4.0).unwrap();
        let w = MixingLaw::gamma(1.1, 4.0).unwrap();
        let r = mp_distance_bound(&w, &z, Metric::TotalVariation, 1e-10).unwrap();
        assert_eq!(r.component("increment_term"), 0.0);
        assert!((r.component("mean_term") - r.diagnostics["m0"] * 0.025).abs() < 1e-15);
    }

    #[test]
    fn poisson_binomial_ordering() {
        let z = MixingLaw::poisson(2.0).unwrap();
        let w = MixingLaw::binomial(10, 0.2).unwrap();
        let r = mp_ordered_bound(&w, &z, Metric::TotalVariation, 1e-12).unwrap();
        assert!(r.preconditions["increments_ordered"]);
        assert!(!r.is_applicable());
        let m1 = r.diagnostics["m1"];
        // both laws have mean 2, so either orientation gives 2 M_1 |0.8 - 1|
        assert!((r.component("increment_term") - 2.0 * m1 * 0.2).abs() < 1e-12);
    }

    #[test]
    fn taylor_uniform_vs_two_point() {
        let u = MixingLaw::grid(GriddedLaw::uniform(0.0, 2.0).unwrap(), false).unwrap();
        let t = MixingLaw::grid(GriddedLaw::from_atoms(&[0.5, 1.5], &[0.5, 0.5]).unwrap(), false).unwrap();
        let r = moment_matched_mp_bound(&u, &t, 1, None, Metric::Wasserstein).unwrap();
        assert!(r.is_applicable());
        assert!((r.diagnostics["coupling_moment"] - 1.0 / 12.0).abs() < 1e-10);
        // ||Delta^2 h|| <= 2 cancels the 1/2!
        assert!((r.value.unwrap() - 1.0 / 12.0).abs() < 1e-10);
        let r0 = moment_matched_mp_bound(&u, &u, 0, None, Metric::Wasserstein).unwrap();
        assert_eq!(r0.value, Some(0.0));
    }

    #[test]
    fn dickman_closed_form() {
        let r = dickman_bound(12, 1.0, Metric::TotalVariation).unwrap();
        assert!((r.value.unwrap() - 5.0 / 24.0).abs() < 1e-15);
        assert!(r.diagnostics["exact_increment_value"] <= r.value.unwrap());
        assert_eq!(dickman_proposition_factor(0.3).unwrap(), 1.0);
    }

    #[test]
    fn harmonic_small() {
        let r = harmonic_bound(2).unwrap();
        assert_eq!(r.value, Some(1.25));
        assert_eq!(r.component("floor_term"), 0.25);
        assert!((r.diagnostics["d_w_exact"] - 0.3125).abs() < 1e-15);
    }
}
