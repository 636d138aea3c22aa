use super::{parallel_draws, CountMode};
use crate::dist_core::{GriddedLaw, TruncatedPmf};
use crate::error::{Error, Result};
use crate::numeric::ln_factorial;

/// Cap on `m * n^3`, the work of the exact recursion over urns.
pub const URN_MAX_WORK: u128 = 2_000_000_000;

fn check(m: u64, n: u64, k: u64) -> Result<()> {
    if m < 2 {
        return Err(Error::domain("need at least two urns"));
    }
    if k < 1 {
        return Err(Error::domain("capacity threshold k must be at least 1"));
    }
    if n < k {
        return Err(Error::Degenerate(format!("k = {k} > n = {n}: no urn can overflow")));
    }
    Ok(())
}

fn overflow(mode: CountMode, k: u64, s: u64) -> u64 {
    match mode {
        _ if s < k => 0,
        CountMode::Excess => s - k + 1,
        CountMode::Urns => 1,
    }
}

fn binom_pmf(r: u64, s: u64, p: f64) -> f64 {
    if p >= 1.0 {
        return if s == r { 1.0 } else { 0.0 };
    }
    let lc = ln_factorial(r) - ln_factorial(s) - ln_factorial(r - s);
    (lc + s as f64 * p.ln() + (r - s) as f64 * (1.0 - p).ln()).exp()
}

/// Exact pmf of the overflow statistic for `n` balls in `m` equally likely urns.
///
/// Urns are filled one at a time: given `r` balls left for the last `m - j + 1` urns,
/// urn `j` receives `Bin(r, 1/(m - j + 1))` of them.
pub fn urn_exact_pmf(m: u64, n: u64, k: u64, mode: CountMode) -> Result<TruncatedPmf> {
    check(m, n, k)?;
    let work = m as u128 * (n as u128 + 1).pow(3);
    if work > URN_MAX_WORK {
        return Err(Error::TooLarge(format!("urn recursion needs {work} steps; use urn_samples")));
    }
    let (nu, wmax) = (n as usize, n as usize);
    // state[r][w]: r balls still unplaced, statistic w so far
    let mut state = vec![vec![0.0; wmax + 1]; nu + 1];
    state[nu][0] = 1.0;
    for j in 1..m {
        let p = 1.0 / (m - j + 1) as f64;
        let mut next = vec![vec![0.0; wmax + 1]; nu + 1];
        for r in 0..=nu {
            for w in 0..=wmax {
                let mass = state[r][w];
                if mass == 0.0 {
                    continue;
                }
                for s in 0..=r {
                    let y = overflow(mode, k, s as u64) as usize;
                    next[r - s][w + y] += mass * binom_pmf(r as u64, s as u64, p);
                }
            }
        }
        state = next;
    }
    let mut law = vec![0.0; wmax + 1];
    for (r, row) in state.iter().enumerate() {
        let y = overflow(mode, k, r as u64) as usize;
        for (w, &mass) in row.iter().enumerate() {
            if mass > 0.0 {
                law[w + y] += mass;
            }
        }
    }
    Ok(TruncatedPmf::from_weights(law)?.trimmed())
}

/// The same law as atoms.
pub fn urn_exact_law(m: u64, n: u64, k: u64, mode: CountMode) -> Result<GriddedLaw> {
    let pmf = urn_exact_pmf(m, n, k, mode)?;
    let (pts, ps): (Vec<f64>, Vec<f64>) =
        pmf.probs().iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(w, &p)| (w as f64, p)).unzip();
    let total: f64 = ps.iter().sum();
    GriddedLaw::from_atoms(&pts, &ps.iter().map(|p| p / total).collect::<Vec<_>>())
}

/// `count` draws of the statistic, throwing each ball into a uniform urn.
pub fn urn_samples(m: u64, n: u64, k: u64, mode: CountMode, seed: u64, count: usize) -> Result<Vec<u64>> {
    check(m, n, k)?;
    Ok(parallel_draws(seed, 0x0a2, count, |rng| {
        let mut occ = vec![0u64; m as usize];
        for _ in 0..n {
            occ[rand::Rng::random_range(rng, 0..m as usize)] += 1;
        }
        occ.iter().map(|&s| overflow(mode, k, s)).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::urn_summand_law;

    #[test]
    fn two_urns_three_balls() {
        let p = urn_exact_pmf(2, 3, 2, CountMode::Excess).unwrap();
        assert!((p.get(1) - 0.75).abs() < 1e-15);
        assert!((p.get(2) - 0.25).abs() < 1e-15);
        let q = urn_exact_pmf(2, 1, 1, CountMode::Urns).unwrap();
        assert_eq!(q.get(1), 1.0);
    }

    #[test]
    fn mean_and_variance_match_summands() {
        for (m, n, k) in [(3, 7, 2), (4, 8, 3), (5, 6, 1)] {
            for mode in [CountMode::Excess, CountMode::Urns] {
                let p = urn_exact_pmf(m, n, k, mode).unwrap();
                let y = urn_summand_law(m, n, k, mode).unwrap();
                assert!((p.mean() - m as f64 * y.mean).abs() < 1e-12);
                assert!((p.variance() - y.sigma2).abs() < 1e-9);
            }
        }
    }
}
