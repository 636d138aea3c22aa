//! Stein factors for mixed Poisson targets and for the Gaussian.
//!
//! For `Z ~ MP(xi)` with `xi^s = xi + eta`, three upper bounds on `M_0` and `M_1`
//! are available: a general bound growing like `e^lambda`, a bound valid when
//! `Y ~ MP(eta)` has a non-increasing mass function, and a bound valid when
//! `Var xi < E xi / 2`. Every applicable bound is computed and the smallest is kept.

use serde::{Deserialize, Serialize};

use crate::biasing::{is_monotone_mass, mean_reciprocal_shift, steutel_increment, IncrementLaw};
use crate::dist_core::MixingLaw;
use crate::error::{Error, Result};
use crate::metric::Metric;

/// `e^lambda` above this is flagged as a vacuous scale.
pub const VACUOUS_SCALE: f64 = 1e3;

/// `beta` at or below this makes the monotone total variation formulas unusable.
pub const BETA_FLOOR: f64 = 1e-12;

/// Largest disagreement tolerated between the two quadrature passes for `beta`.
pub const BETA_CROSS_CHECK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    General,
    Monotone,
    SmallVariance,
}

/// The pair produced by one regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeFactors {
    pub regime: Regime,
    pub m0: f64,
    pub m1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinFactorBounds {
    pub metric: Metric,
    pub m0: f64,
    pub m1: f64,
    /// Regime that produced `m1`.
    pub regime: Regime,
    /// Regime that produced `m0`.
    pub m0_regime: Regime,
    /// `E xi * E[1/(Y + 1)]`, the total compound Poisson rate.
    pub lambda_total: f64,
    pub beta: Option<f64>,
    pub preconditions_passed: Vec<String>,
    /// Every applicable regime with its own pair, in the order general, monotone, small variance.
    pub candidates: Vec<RegimeFactors>,
    pub warnings: Vec<String>,
}

impl SteinFactorBounds {
    pub fn candidate(&self, regime: Regime) -> Option<&RegimeFactors> {
        self.candidates.iter().find(|c| c.regime == regime)
    }

    pub fn passed(&self, check: &str) -> bool {
        self.preconditions_passed.iter().any(|c| c == check)
    }
}

fn log_plus(x: f64) -> f64 {
    x.ln().max(0.0)
}

/// `E e^{-eta} - E[eta e^{-eta}]`, evaluated at two quadrature tolerances that must agree.
fn beta_factor(eta: &IncrementLaw) -> Result<f64> {
    let g = |x: f64| (-x).exp() * (1.0 - x);
    let coarse = eta.expect(g, 1e-9)?;
    let fine = eta.expect(g, 1e-13)?;
    let gap = (coarse - fine).abs();
    if gap > BETA_CROSS_CHECK {
        return Err(Error::Quadrature { achieved: gap, requested: BETA_CROSS_CHECK });
    }
    Ok(fine)
}

/// Stein factors of `MP(xi)` given the first two moments of `xi` and its increment.
pub fn mp_stein_factors_from_parts(
    mean: f64,
    variance: f64,
    eta: &IncrementLaw,
    metric: Metric,
    tol: f64,
) -> Result<SteinFactorBounds> {
    if metric == Metric::Wasserstein {
        return Err(Error::Unsupported("mixed Poisson Stein factors are available for tv and k only".into()));
    }
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::domain("mixing mean must be positive"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let y = eta.mp_pmf(tol)?;
    // P(Y = 0) = E e^{-eta}
    let p0 = eta.expect(|x| (-x).exp(), 1e-13)?;
    let a = mean * p0;
    let (recip, recip_tail) = mean_reciprocal_shift(&y);
    let lambda_total = mean * recip;
    let scale = (mean * (recip + recip_tail)).exp();

    let mut passed = Vec::new();
    let mut warnings = Vec::new();
    let mut candidates = Vec::new();

    let general = (1.0f64).min(1.0 / a) * scale;
    if scale > VACUOUS_SCALE {
        warnings.push("vacuous_scale".to_string());
    }
    candidates.push(RegimeFactors { regime: Regime::General, m0: general, m1: general });

    let monotone = eta.mp_is_monotone().unwrap_or_else(|| is_monotone_mass(&y));
    let mut beta = None;
    if monotone {
        passed.push("monotone_mass".to_string());
        let b = mean * beta_factor(eta)?;
        beta = Some(b);
        let tv = if b > BETA_FLOOR {
            passed.push("beta_positive".to_string());
            let m0 = (1.0f64).min(2.0 / b.sqrt());
            let m1 = (1.0f64).min((0.25 / b + log_plus(2.0 * b)) / b);
            Some((m0, m1))
        } else {
            warnings.push("beta_degenerate".to_string());
            None
        };
        match metric {
            Metric::Kolmogorov => {
                let mut m0 = (1.0f64).min((2.0 / (std::f64::consts::E * a)).sqrt());
                let mut m1 = (0.5f64).min(1.0 / (a + 1.0));
                if let Some((t0, t1)) = tv {
                    m0 = m0.min(t0);
                    m1 = m1.min(t1);
                }
                candidates.push(RegimeFactors { regime: Regime::Monotone, m0, m1 });
            }
            _ => {
                if let Some((m0, m1)) = tv {
                    candidates.push(RegimeFactors { regime: Regime::Monotone, m0, m1 });
                }
            }
        }
    }

    if variance < 0.5 * mean {
        passed.push("small_variance".to_string());
        let gap = mean - 2.0 * variance;
        candidates.push(RegimeFactors { regime: Regime::SmallVariance, m0: mean.sqrt() / gap, m1: 1.0 / gap });
    }

    let best = |pick: fn(&RegimeFactors) -> f64| {
        candidates
            .iter()
            .fold(None::<&RegimeFactors>, |acc, c| match acc {
                Some(b) if pick(b) <= pick(c) => Some(b),
                _ => Some(c),
            })
            .expect("the general regime is always present")
    };
    let b1 = best(|c| c.m1);
    let b0 = best(|c| c.m0);
    Ok(SteinFactorBounds {
        metric,
        m0: b0.m0,
        m1: b1.m1,
        regime: b1.regime,
        m0_regime: b0.regime,
        lambda_total,
        beta,
        preconditions_passed: passed,
        candidates: candidates.clone(),
        warnings,
    })
}

/// Stein factors of `Z ~ MP(xi)` for a catalog mixing law.
pub fn mp_stein_factors(mixing: &MixingLaw, metric: Metric, tol: f64) -> Result<SteinFactorBounds> {
    let eta = steutel_increment(mixing)?;
    let mut out = mp_stein_factors_from_parts(mixing.mean(), mixing.variance(), &eta, metric, tol)?;
    if !mixing.is_infinitely_divisible() {
        out.warnings.push("not_infinitely_divisible".to_string());
    }
    Ok(out)
}

/// Bounds on derivatives of the solution to the Gaussian Stein equation with variance `sigma^2`
/// and a Lipschitz test function; `sup_f3_per_h2` multiplies `||h''||` in the unit-variance case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSteinFactors {
    pub sup_f1: f64,
    pub sup_f2: f64,
    pub sup_f3_per_h2: f64,
}

pub fn gaussian_stein_factors(sigma2: f64) -> Result<GaussianSteinFactors> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::domain(format!("variance must be positive, got {sigma2}")));
    }
    Ok(GaussianSteinFactors {
        sup_f1: (2.0 / std::f64::consts::PI).sqrt() / sigma2.sqrt(),
        sup_f2: 2.0 / sigma2,
        sup_f3_per_h2: 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn dickman_unit_scale() {
        let s = mp_stein_factors(&MixingLaw::dickman(1.0).unwrap(), Metric::TotalVariation, 1e-12).unwrap();
        assert!((s.beta.unwrap() - 1.0 / E).abs() < 1e-12);
        assert_eq!(s.m1, 1.0);
        assert_eq!(s.regime, Regime::Monotone);
    }

    #[test]
    fn gamma_small_variance() {
        let s = mp_stein_factors(&MixingLaw::gamma(1.0, 4.0).unwrap(), Metric::TotalVariation, 1e-12).unwrap();
        let sv = s.candidate(Regime::SmallVariance).unwrap();
        assert!((sv.m1 - 8.0).abs() < 1e-12);
        assert!((sv.m0 - 4.0).abs() < 1e-12);
        // beta = 0.25 (4/5 - 4/25) = 0.16, so the monotone pair is (1, 1)
        assert!((s.beta.unwrap() - 0.16).abs() < 1e-12);
        assert_eq!((s.m0, s.m1), (1.0, 1.0));
    }

    #[test]
    fn poisson_degenerate_beta() {
        let m = MixingLaw::poisson(2.0).unwrap();
        let tv = mp_stein_factors(&m, Metric::TotalVariation, 1e-13).unwrap();
        assert!(tv.beta.unwrap().abs() < 1e-15);
        assert_eq!(tv.regime, Regime::General);
        let lam = 2.0 * (1.0 - (-1.0f64).exp());
        assert!((tv.lambda_total - lam).abs() < 1e-12);
        assert!((tv.m1 - lam.exp()).abs() < 1e-9);
        let k = mp_stein_factors(&m, Metric::Kolmogorov, 1e-13).unwrap();
        assert_eq!(k.regime, Regime::Monotone);
        assert_eq!(k.m1, 0.5);
    }

    #[test]
    fn gaussian_factors() {
        let g = gaussian_stein_factors(1.0).unwrap();
        assert!((g.sup_f1 - 0.797_884_560_802_865_4).abs() < 1e-15);
        let g = gaussian_stein_factors(4.0).unwrap();
        assert!((g.sup_f1 - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(g.sup_f2, 0.5);
        assert_eq!(g.sup_f3_per_h2, 2.0);
        assert!(gaussian_stein_factors(0.0).is_err());
    }
}
