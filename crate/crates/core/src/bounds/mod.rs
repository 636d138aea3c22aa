//! One calculator per approximation result. Each returns a [`BoundReport`]
//! carrying the additive components, the precondition checks and a canonical
//! digest of its inputs.

mod gaussian;
mod mixed_poisson;
mod third_moment;

pub use gaussian::{
    clt_assoc_bound, clt_neg_assoc_bound, gauss_generic_bound, srs_bound, srs_moment_summary, urn_moment_summary,
    urn_overflow_bound, urn_summand_law, UrnSummandLaw, RATIONAL_URN_MAX_N,
};
pub use mixed_poisson::{
    comonotone_moment, dickman_bound, dickman_proposition_factor, harmonic_bound, increments_ordering,
    moment_matched_mp_bound, mp_distance_bound, mp_distance_bound_from_increment, mp_ordered_bound, HClass,
};
pub use third_moment::{student_t_bound, student_t_fourth_moment, third_moment_bound};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{stable_sum, EPS_NORM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremId {
    /// Mixed Poisson against mixed Poisson through the increment distance.
    Mp,
    /// Same, with stochastically ordered increments.
    MpOrdered,
    /// Taylor bound for mixings with matching moments.
    MomentMatched,
    /// Sum of Bernoulli-thinned Poisson variables against a mixed Poisson–Dickman law.
    Dickman,
    /// Wasserstein distance of the overflow index law to the uniform law.
    Harmonic,
    GaussGeneric,
    CltNa,
    CltA,
    Srs,
    Urn,
    ThirdMoment,
    T,
}

impl TheoremId {
    pub const ALL: [TheoremId; 12] = [
        TheoremId::Mp,
        TheoremId::MpOrdered,
        TheoremId::MomentMatched,
        TheoremId::Dickman,
        TheoremId::Harmonic,
        TheoremId::GaussGeneric,
        TheoremId::CltNa,
        TheoremId::CltA,
        TheoremId::Srs,
        TheoremId::Urn,
        TheoremId::ThirdMoment,
        TheoremId::T,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::Mp => "mp",
            TheoremId::MpOrdered => "mp-ordered",
            TheoremId::MomentMatched => "moment-matched",
            TheoremId::Dickman => "dickman",
            TheoremId::Harmonic => "harmonic",
            TheoremId::GaussGeneric => "gauss-generic",
            TheoremId::CltNa => "clt-na",
            TheoremId::CltA => "clt-a",
            TheoremId::Srs => "srs",
            TheoremId::Urn => "urn",
            TheoremId::ThirdMoment => "third-moment",
            TheoremId::T => "t",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown target '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Ok,
    Inapplicable,
}

/// A certified bound with its parts.
///
/// `value` is the sum of `components` and is absent when any precondition failed;
/// the components are still reported in that case. `diagnostics` holds related
/// quantities that are not part of the sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem_id: TheoremId,
    pub status: BoundStatus,
    pub value: Option<f64>,
    pub components: BTreeMap<String, f64>,
    pub preconditions: BTreeMap<String, bool>,
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub inputs_digest: String,
}

impl BoundReport {
    pub(crate) fn assemble<I: Serialize>(
        theorem_id: TheoremId,
        inputs: &I,
        components: &[(&str, f64)],
        preconditions: &[(&str, bool)],
    ) -> Self {
        let components: BTreeMap<String, f64> = components.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let preconditions: BTreeMap<String, bool> = preconditions.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let ok = preconditions.values().all(|&p| p);
        let value = ok.then(|| stable_sum(components.values().copied()));
        Self {
            theorem_id,
            status: if ok { BoundStatus::Ok } else { BoundStatus::Inapplicable },
            value,
            components,
            preconditions,
            diagnostics: BTreeMap::new(),
            warnings: Vec::new(),
            inputs_digest: serde_json::to_string(inputs).expect("inputs serialize"),
        }
    }

    pub(crate) fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub(crate) fn with_warning(mut self, w: impl Into<String>) -> Self {
        self.warnings.push(w.into());
        self
    }

    pub fn is_applicable(&self) -> bool {
        self.status == BoundStatus::Ok
    }

    pub fn component(&self, key: &str) -> f64 {
        self.components.get(key).copied().unwrap_or(f64::NAN)
    }

    /// The value, or an error naming the failed preconditions.
    pub fn require_value(&self) -> Result<f64> {
        self.value.ok_or_else(|| {
            let failed: Vec<&str> = self.preconditions.iter().filter(|(_, &v)| !v).map(|(k, _)| k.as_str()).collect();
            Error::Unsupported(format!("{} is inapplicable: failed {}", self.theorem_id, failed.join(", ")))
        })
    }
}

/// Moment sums of `W = Y_1 + ... + Y_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    /// `E W`.
    pub theta: f64,
    /// `Var W`.
    pub sigma2: f64,
    pub sum_m1: f64,
    pub sum_m2: f64,
    pub sum_m3: f64,
    /// `sum_k (E Y_k)^2`.
    pub sum_sq_means: f64,
    /// `sum_{i != j} Cov(Y_i, Y_j)`.
    pub cov_cross: f64,
}

impl MomentSummary {
    /// Summary with `sigma2 = sum_m2 - sum_sq_means + cov_cross`.
    pub fn new(sum_m1: f64, sum_m2: f64, sum_m3: f64, sum_sq_means: f64, cov_cross: f64) -> Result<Self> {
        let all = [sum_m1, sum_m2, sum_m3, sum_sq_means, cov_cross];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("moment sums must be finite"));
        }
        if sum_m2 < 0.0 || sum_sq_means < 0.0 {
            return Err(Error::domain("second moment sums must be non-negative"));
        }
        Ok(Self { theta: sum_m1, sigma2: sum_m2 - sum_sq_means + cov_cross, sum_m1, sum_m2, sum_m3, sum_sq_means, cov_cross })
    }

    /// Summary of independent summands given `(E Y, E Y^2, E Y^3)` per summand.
    pub fn independent(moments: &[(f64, f64, f64)]) -> Result<Self> {
        Self::new(
            stable_sum(moments.iter().map(|m| m.0)),
            stable_sum(moments.iter().map(|m| m.1)),
            stable_sum(moments.iter().map(|m| m.2)),
            stable_sum(moments.iter().map(|m| m.0 * m.0)),
            0.0,
        )
    }

    /// Whether `sigma2` matches the defining identity within `1e-8` (relative to the sums).
    pub fn is_consistent(&self) -> bool {
        let rebuilt = self.sum_m2 - self.sum_sq_means + self.cov_cross;
        (rebuilt - self.sigma2).abs() <= 1e-8 * (1.0 + self.sum_m2.abs() + self.cov_cross.abs())
    }

    pub(crate) fn require_spread(&self) -> Result<()> {
        if !(self.sigma2 > EPS_NORM * (1.0 + self.sum_m2)) {
            return Err(Error::Degenerate(format!("Var W = {} leaves the standardized sum undefined", self.sigma2)));
        }
        Ok(())
    }
}
