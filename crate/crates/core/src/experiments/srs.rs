use std::collections::BTreeMap;

use rand::seq::index::sample;

use super::parallel_draws;
use crate::bounds::{srs_moment_summary, MomentSummary};
use crate::dist_core::{GriddedLaw, TruncatedPmf};
use crate::error::{Error, Result};

/// Cap on the (sample size, partial sum) states of the subset-sum recursion.
pub const SRS_MAX_STATES: usize = 10_000_000;

fn check(values: &[u64], n: usize) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::domain("need at least two population values"));
    }
    if n == values.len() {
        return Err(Error::Degenerate("n = m takes the whole population: W is a point mass".into()));
    }
    if n == 0 || n > values.len() {
        return Err(Error::domain(format!("sample size must satisfy 1 <= n < {}, got {n}", values.len())));
    }
    Ok(())
}

/// Exact counts of size-`n` subsets by their total, and the number of subsets.
fn subset_sum_counts(values: &[u64], n: usize) -> Result<(BTreeMap<u64, u128>, u128)> {
    let mut layers: Vec<BTreeMap<u64, u128>> = vec![BTreeMap::new(); n + 1];
    layers[0].insert(0, 1);
    for (i, &c) in values.iter().enumerate() {
        for j in (1..=n.min(i + 1)).rev() {
            let (lo, hi) = layers.split_at_mut(j);
            for (&s, &cnt) in &lo[j - 1] {
                *hi[0].entry(s + c).or_insert(0) += cnt;
            }
        }
        let states: usize = layers.iter().map(BTreeMap::len).sum();
        if states > SRS_MAX_STATES {
            return Err(Error::TooLarge(format!("{states} subset-sum states; use srs_samples")));
        }
    }
    let counts = layers.pop().expect("n + 1 layers");
    let total = counts.values().sum();
    Ok((counts, total))
}

/// Exact atom law of the sample total, with its moment sums.
pub fn srs_exact_law(values: &[u64], n: usize) -> Result<(GriddedLaw, MomentSummary)> {
    check(values, n)?;
    let (counts, total) = subset_sum_counts(values, n)?;
    let pts: Vec<f64> = counts.keys().map(|&s| s as f64).collect();
    let ps: Vec<f64> = counts.values().map(|&k| k as f64 / total as f64).collect();
    let norm: f64 = ps.iter().sum();
    let law = GriddedLaw::from_atoms(&pts, &ps.iter().map(|p| p / norm).collect::<Vec<_>>())?;
    Ok((law, srs_moment_summary(values, n)?))
}

/// The same law as a pmf on `0..=max total`.
pub fn srs_exact_pmf(values: &[u64], n: usize) -> Result<TruncatedPmf> {
    check(values, n)?;
    let (counts, total) = subset_sum_counts(values, n)?;
    let top = *counts.keys().next_back().expect("at least one subset") as usize;
    let mut w = vec![0.0; top + 1];
    for (&s, &k) in &counts {
        w[s as usize] = k as f64 / total as f64;
    }
    TruncatedPmf::from_weights(w)
}

/// `count` sample totals; each draw picks `n` distinct indices uniformly.
pub fn srs_samples(values: &[u64], n: usize, seed: u64, count: usize) -> Result<Vec<u64>> {
    check(values, n)?;
    Ok(parallel_draws(seed, 0x535, count, |rng| sample(rng, values.len(), n).iter().map(|i| values[i]).sum()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_values_pairs() {
        let (law, m) = srs_exact_law(&[1, 2, 3, 4], 2).unwrap();
        let (pts, ps) = law.atoms().unwrap();
        assert_eq!(pts, vec![3.0, 4.0, 5.0, 6.0, 7.0]);
        let want = [1.0, 1.0, 2.0, 1.0, 1.0].map(|x| x / 6.0);
        for (p, w) in ps.iter().zip(want) {
            assert!((p - w).abs() < 1e-15);
        }
        assert!((law.mean() - 5.0).abs() < 1e-14);
        assert!((law.variance() - m.sigma2).abs() < 1e-13);
        assert!(matches!(srs_exact_law(&[1, 2], 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn pmf_matches_law() {
        let p = srs_exact_pmf(&[0, 5, 5, 9], 2).unwrap();
        assert!((p.get(10) - 1.0 / 6.0).abs() < 1e-15);
        assert!((p.get(14) - 2.0 / 6.0).abs() < 1e-15);
    }
}
