use rand_distr::{Distribution, Poisson};

use super::parallel_draws;
use crate::dist_core::{GriddedLaw, TruncatedPmf, MAX_PMF_INDEX};
use crate::error::{Error, Result};
use crate::numeric::{poisson_pmf, poisson_sf, NeumaierSum};

/// Largest `n` handled by the exact enumerator.
pub const BPS_EXACT_MAX_N: u64 = 200;

fn check(n: u64, c: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("c must be positive, got {c}")));
    }
    Ok(())
}

/// Law of `S = sum_k k B_k`, indexed by `s = 0..=n(n+1)/2`.
fn weighted_count_law(n: u64) -> Vec<f64> {
    let top = (n * (n + 1) / 2) as usize;
    let mut law = vec![0.0; top + 1];
    law[0] = 1.0;
    let mut reach = 0usize;
    for k in 1..=n as usize {
        let p = 1.0 / k as f64;
        for s in (0..=reach).rev() {
            let w = law[s];
            law[s + k] += p * w;
            law[s] = (1.0 - p) * w;
        }
        reach += k;
    }
    law
}

/// Law of the mixing `mu = (c/n) sum_k k B_k`.
pub fn bps_mixing_law(n: u64, c: f64) -> Result<GriddedLaw> {
    check(n, c)?;
    if n > BPS_EXACT_MAX_N {
        return Err(Error::TooLarge(format!("n = {n} exceeds {BPS_EXACT_MAX_N}; sample instead")));
    }
    let law = weighted_count_law(n);
    let (pts, ps): (Vec<f64>, Vec<f64>) = law
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(s, &p)| (c * s as f64 / n as f64, p))
        .unzip();
    let total: f64 = ps.iter().sum();
    GriddedLaw::from_atoms(&pts, &ps.iter().map(|p| p / total).collect::<Vec<_>>())
}

/// Exact pmf of `W = sum_{k <= n} B_k P_k`, a Poisson mixture over `S = sum_k k B_k`.
pub fn bps_exact_pmf(n: u64, c: f64, tol: f64) -> Result<TruncatedPmf> {
    check(n, c)?;
    if n > BPS_EXACT_MAX_N {
        return Err(Error::TooLarge(format!("n = {n} exceeds {BPS_EXACT_MAX_N}; use bps_samples")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let law = weighted_count_law(n);
    let atoms: Vec<(f64, f64)> =
        law.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(s, &p)| (c * s as f64 / n as f64, p)).collect();
    let tail_at = |j: u64| {
        let mut t = NeumaierSum::default();
        for &(mu, w) in &atoms {
            t.add(w * poisson_sf(mu, j));
        }
        t.total()
    };
    let mut top = (c * (n as f64 + 1.0)).ceil() as u64 + 10;
    while tail_at(top) >= tol {
        top *= 2;
        if top as usize > MAX_PMF_INDEX {
            return Err(Error::Truncation { tol, max_index: MAX_PMF_INDEX, tail: tail_at(top) });
        }
    }
    let probs: Vec<f64> = (0..=top)
        .map(|j| {
            let mut s = NeumaierSum::default();
            for &(mu, w) in &atoms {
                s.add(w * poisson_pmf(mu, j));
            }
            s.total()
        })
        .collect();
    Ok(TruncatedPmf::new(probs, tail_at(top))?.trimmed())
}

/// `count` draws of `W`; given the Bernoulli draws, `sum_k B_k P_k` is Poisson with mean `(c/n) sum_k k B_k`.
pub fn bps_samples(n: u64, c: f64, seed: u64, count: usize) -> Result<Vec<u64>> {
    check(n, c)?;
    Ok(parallel_draws(seed, 0xb95, count, |rng| {
        let mut s = 0u64;
        for k in 1..=n {
            if rand::Rng::random_bool(rng, 1.0 / k as f64) {
                s += k;
            }
        }
        let mu = c * s as f64 / n as f64;
        if mu > 0.0 {
            Poisson::new(mu).expect("positive mean").sample(rng) as u64
        } else {
            0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let p = bps_exact_pmf(1, 2.0, 1e-15).unwrap();
        for j in 0..10 {
            assert!((p.get(j) - poisson_pmf(2.0, j as u64)).abs() < 1e-16);
        }
        let p = bps_exact_pmf(2, 1.0, 1e-15).unwrap();
        let want = 0.5 * ((-0.5f64).exp() + (-1.5f64).exp());
        assert!((p.get(0) - want).abs() < 1e-16);
        for n in [3, 7, 20, 60] {
            let p = bps_exact_pmf(n, 1.5, 1e-15).unwrap();
            assert!((p.mean() - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn mixing_mean() {
        let g = bps_mixing_law(12, 2.0).unwrap();
        assert!((g.mean() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn sampler_mean() {
        let xs = bps_samples(1, 3.0, 11, 20_000).unwrap();
        let mean = xs.iter().sum::<u64>() as f64 / xs.len() as f64;
        assert!((mean - 3.0).abs() < 3.0 * (3.0f64 / 20_000.0).sqrt() * 1.5);
    }
}
