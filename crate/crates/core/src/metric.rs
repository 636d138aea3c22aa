use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Probability metric selected by its class of test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "tv")]
    TotalVariation,
    #[serde(rename = "k")]
    Kolmogorov,
    #[serde(rename = "w")]
    Wasserstein,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::TotalVariation => "tv",
            Metric::Kolmogorov => "k",
            Metric::Wasserstein => "w",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "tv" => Ok(Metric::TotalVariation),
            "k" | "kolmogorov" => Ok(Metric::Kolmogorov),
            "w" | "wasserstein" => Ok(Metric::Wasserstein),
            other => Err(Error::Parse(format!("unknown metric '{other}', expected tv, k or w"))),
        }
    }
}
