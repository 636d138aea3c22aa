use serde::{Deserialize, Serialize};

use super::mixing::MixingLaw;
use super::pmf::TruncatedPmf;
use crate::biasing::IncrementLaw;
use crate::error::{Error, Result};
use crate::numeric::{stable_sum, NeumaierSum, EPS_NORM};

/// Compound Poisson parameters `lambda_1, lambda_2, ...` (stored from index 1 at position 0).
///
/// `remainder` bounds the rate mass `sum_{i > K} lambda_i` dropped by truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonParams {
    rates: Vec<f64>,
    total_rate: f64,
    remainder: f64,
}

impl CompoundPoissonParams {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        Self::with_remainder(rates, 0.0)
    }

    pub fn with_remainder(rates: Vec<f64>, remainder: f64) -> Result<Self> {
        if rates.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(Error::domain("compound Poisson rates must be finite and non-negative"));
        }
        let total_rate = stable_sum(rates.iter().copied());
        if !(total_rate > 0.0) {
            return Err(Error::domain("compound Poisson total rate must be positive"));
        }
        Ok(Self { rates, total_rate, remainder })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// `lambda_i` for `i >= 1`; zero beyond the truncation.
    pub fn rate(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.rates.get(i - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn remainder(&self) -> f64 {
        self.remainder
    }

    /// `sum_i i lambda_i`, the mean of the compound Poisson law.
    pub fn mean(&self) -> f64 {
        stable_sum(self.rates.iter().enumerate().map(|(k, &r)| (k + 1) as f64 * r))
    }

    /// `sum_i i^2 lambda_i`, the variance of the compound Poisson law.
    pub fn variance(&self) -> f64 {
        stable_sum(self.rates.iter().enumerate().map(|(k, &r)| ((k + 1) * (k + 1)) as f64 * r))
    }
}

/// Compound Poisson pmf by Panjer's recursion:
/// `p_0 = e^{-lambda}`, `p_k = (1/k) sum_{j=1}^{k} j lambda_j p_{k-j}`.
pub fn compound_poisson_pmf(params: &CompoundPoissonParams, max_k: usize, tol: f64) -> Result<TruncatedPmf> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let lam = params.total_rate();
    let weighted: Vec<f64> = params.rates().iter().enumerate().map(|(k, &r)| (k + 1) as f64 * r).collect();
    let mut probs = vec![(-lam).exp()];
    let mut mass = NeumaierSum::default();
    mass.add(probs[0]);
    for k in 1..=max_k {
        let tail = 1.0 - mass.total();
        if tail < tol {
            return TruncatedPmf::new(probs, tail.max(0.0));
        }
        let mut acc = NeumaierSum::default();
        for j in 1..=k.min(weighted.len()) {
            acc.add(weighted[j - 1] * probs[k - j]);
        }
        let p = acc.total() / k as f64;
        probs.push(p);
        mass.add(p);
    }
    let tail = 1.0 - mass.total();
    if tail < tol {
        return TruncatedPmf::new(probs, tail.max(0.0));
    }
    Err(Error::Truncation { tol, max_index: max_k, tail })
}

/// Rates `lambda_i = E xi P(Y = i - 1) / i` (`Y ~ MP(eta)`) for `i = 1..=max_i`,
/// with remainder bound `E xi P(Y >= max_i)`.
pub fn mp_cp_params(mixing: &MixingLaw, increment: &IncrementLaw, max_i: usize) -> Result<CompoundPoissonParams> {
    if max_i == 0 {
        return Err(Error::domain("need at least one rate"));
    }
    let y = increment.mp_pmf(EPS_NORM * 1e-3)?;
    let exi = mixing.mean();
    let rates: Vec<f64> = (1..=max_i).map(|i| exi * y.get(i - 1) / i as f64).collect();
    let covered = stable_sum((0..max_i).map(|j| y.get(j)));
    let remainder = exi * (1.0 - covered).max(0.0);
    CompoundPoissonParams::with_remainder(rates, remainder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biasing::steutel_increment;
    use crate::numeric::poisson_pmf;

    #[test]
    fn unit_severity_is_poisson() {
        let p = CompoundPoissonParams::new(vec![2.0]).unwrap();
        let pmf = compound_poisson_pmf(&p, 500, 1e-14).unwrap();
        assert!(pmf.max_index() > 15);
        for j in 0..=pmf.max_index() {
            assert!((pmf.get(j) - poisson_pmf(2.0, j as u64)).abs() < 1e-15);
        }
    }

    #[test]
    fn two_point_severity_by_hand() {
        let p = CompoundPoissonParams::new(vec![0.5, 0.5]).unwrap();
        let pmf = compound_poisson_pmf(&p, 500, 1e-14).unwrap();
        assert!((pmf.get(2) - 0.625 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn poisson_mixing_rates() {
        let m = MixingLaw::poisson(2.0).unwrap();
        let inc = steutel_increment(&m).unwrap();
        let p = mp_cp_params(&m, &inc, 40).unwrap();
        assert!((p.rate(1) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((p.total_rate() - 2.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!((p.mean() - 2.0).abs() < 1e-13);
    }
}
