use serde::{Deserialize, Serialize};

use super::steutel_increment;
use crate::dist_core::{MixingLaw, TruncatedPmf, MAX_PMF_INDEX};
use crate::error::{Error, Result};
use crate::numeric::{ln_factorial, ln_gamma, stable_sum};

/// `Z^s = Z + Y + G + 1` for `Z ~ MNB(xi, p)`, with `Y ~ MNB(eta, p)` and
/// `G` geometric on `{0, 1, ...}` with success probability `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegBinDecomposition {
    pub increment_mp: TruncatedPmf,
    pub geometric_p: f64,
    pub shift: usize,
}

impl NegBinDecomposition {
    pub fn total_mean(&self) -> f64 {
        self.increment_mp.mean() + (1.0 - self.geometric_p) / self.geometric_p + self.shift as f64
    }

    /// `s_i = sum_{m < i} (1 - p)^{i - m} P(Y = m)` for `i = 1..=count`, the
    /// rate sequence whose monotonicity plays the role of the mixed Poisson
    /// monotone-mass condition.
    pub fn inner_sums(&self, count: usize) -> Vec<f64> {
        let q = 1.0 - self.geometric_p;
        (1..=count)
            .map(|i| stable_sum((0..i).map(|m| q.powi((i - m) as i32) * self.increment_mp.get(m))))
            .collect()
    }

    pub fn inner_sum_decreasing(&self, count: usize) -> bool {
        self.inner_sums(count).windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
    }
}

/// `Gamma(j + x) / (j! Gamma(x)) (1 - p)^j p^x`, the NB(`x`, `p`) mass at `j`.
fn nb_mass(x: f64, p: f64, j: u64) -> f64 {
    if x == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    let jf = j as f64;
    let mut ln = ln_gamma(jf + x) - ln_gamma(x) - ln_factorial(j) + x * p.ln();
    if j > 0 {
        ln += jf * (1.0 - p).ln();
    }
    ln.exp()
}

/// `P(NB(x, p) > j)`.
fn nb_tail(x: f64, p: f64, j: u64) -> f64 {
    if x == 0.0 || p == 1.0 {
        return 0.0;
    }
    statrs::function::beta::beta_reg(j as f64 + 1.0, x, 1.0 - p)
}

fn mnb_pmf<E>(expect: E, p: f64, tol: f64) -> Result<TruncatedPmf>
where
    E: Fn(&dyn Fn(f64) -> f64) -> Result<f64>,
{
    let mut probs = Vec::new();
    for j in 0..MAX_PMF_INDEX as u64 {
        probs.push(expect(&|x| nb_mass(x, p, j))?);
        let tail = expect(&|x| nb_tail(x, p, j))?;
        if tail < tol {
            let sum = stable_sum(probs.iter().copied());
            return TruncatedPmf::new(probs, tail.max(1.0 - sum).max(0.0));
        }
    }
    Err(Error::Truncation { tol, max_index: MAX_PMF_INDEX, tail: f64::NAN })
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("negative binomial parameter must lie in (0, 1), got {p}")))
    }
}

/// Law of `Z ~ MNB(xi, p)`.
pub fn mixed_negbin_pmf(mixing: &MixingLaw, p: f64, tol: f64) -> Result<TruncatedPmf> {
    check_p(p)?;
    let qtol = tol * 1e-3;
    mnb_pmf(|f| mixing.expect(f, qtol), p, tol)
}

/// Size-bias decomposition of a mixed negative binomial law with catalog mixing.
pub fn negbin_sizebias_decomposition(mixing: &MixingLaw, p: f64, tol: f64) -> Result<NegBinDecomposition> {
    check_p(p)?;
    let eta = steutel_increment(mixing)?;
    let qtol = tol * 1e-3;
    let y = mnb_pmf(|f| eta.expect(f, qtol), p, tol)?;
    Ok(NegBinDecomposition { increment_mp: y, geometric_p: p, shift: 1 })
}
