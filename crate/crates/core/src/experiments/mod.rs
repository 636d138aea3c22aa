//! Exact enumerators and seeded samplers for the application laws, so that every
//! bound can be held against the true distance.

mod bps;
mod dickman;
mod srs;
mod student;
mod urn;

pub use bps::{bps_exact_pmf, bps_mixing_law, bps_samples, BPS_EXACT_MAX_N};
pub use dickman::{
    dickman_mp_samples, harmonic_decomposition, harmonic_increment_law, overflow_harmonic_dw, DickmanSampler,
};
pub use srs::{srs_exact_law, srs_exact_pmf, srs_samples, SRS_MAX_STATES};
pub use student::{student_t_density, student_t_expectation, student_t_samples};
pub use urn::{urn_exact_law, urn_exact_pmf, urn_samples, URN_MAX_WORK};

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;

/// Draws per random stream; stream `r` produces draws `r * CHUNK ..`.
pub const CHUNK: usize = 4096;

/// What the urn statistic counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Number of urns holding at least `k` balls.
    Urns,
    /// Balls in excess of `k - 1`, summed over urns.
    Excess,
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMode::Urns => "urns",
            CountMode::Excess => "excess",
        })
    }
}

impl FromStr for CountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "urns" => Ok(CountMode::Urns),
            "excess" => Ok(CountMode::Excess),
            _ => Err(Error::Parse(format!("unknown count mode '{s}' (expected urns or excess)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    /// `sum_{k <= n} B_k P_k` with `B_k ~ Bern(1/k)`, `P_k ~ Pois(ck/n)`.
    BernoulliPoissonSum { n: u64, c: f64 },
    /// Total of a sample of size `n` drawn without replacement from `values`.
    Srs { values: Vec<u64>, n: usize },
    UrnOverflow { m: u64, n: u64, k: u64, count_mode: CountMode },
    /// `MP(c D)` with `D` standard Dickman.
    DickmanMp { c: f64 },
    /// Student's t on `m` degrees of freedom scaled to unit variance.
    StudentT { m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub kind: ExperimentKind,
    pub seed: u64,
    pub replicates: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::domain(msg));
        match &self.kind {
            ExperimentKind::BernoulliPoissonSum { n, c } if *n == 0 || !(*c > 0.0 && c.is_finite()) => {
                bad(format!("need n >= 1 and c > 0, got n = {n}, c = {c}"))
            }
            ExperimentKind::Srs { values, n } if *n == 0 || *n >= values.len() => {
                bad(format!("need 1 <= n < {} for sampling without replacement, got {n}", values.len()))
            }
            ExperimentKind::UrnOverflow { m, n, k, .. } if *m < 2 || *k < 1 || *n < *k => {
                bad(format!("need m >= 2 and 1 <= k <= n, got m = {m}, n = {n}, k = {k}"))
            }
            ExperimentKind::DickmanMp { c } if !(*c > 0.0 && c.is_finite()) => bad(format!("need c > 0, got {c}")),
            ExperimentKind::StudentT { m } if !(*m > 4.0 && m.is_finite()) => {
                bad(format!("need more than 4 degrees of freedom, got {m}"))
            }
            _ => Ok(()),
        }
    }

    /// `replicates` draws of the experiment's statistic, as reals.
    pub fn draws(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let (seed, count) = (self.seed, self.replicates);
        let ints = |v: Vec<u64>| v.into_iter().map(|x| x as f64).collect();
        Ok(match &self.kind {
            ExperimentKind::BernoulliPoissonSum { n, c } => ints(bps_samples(*n, *c, seed, count)?),
            ExperimentKind::Srs { values, n } => ints(srs_samples(values, *n, seed, count)?),
            ExperimentKind::UrnOverflow { m, n, k, count_mode } => ints(urn_samples(*m, *n, *k, *count_mode, seed, count)?),
            ExperimentKind::DickmanMp { c } => ints(dickman_mp_samples(*c, seed, count)?),
            ExperimentKind::StudentT { m } => student_t_samples(*m, seed, count)?,
        })
    }
}

/// `count` draws from `draw`, stream `r` feeding chunk `r`; the result does not depend
/// on the thread count.
pub(crate) fn parallel_draws<T, F>(seed: u64, component: u64, count: usize, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64, component);
            let len = CHUNK.min(count - r * CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}
