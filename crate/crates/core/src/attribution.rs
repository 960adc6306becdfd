use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "shear")]
    Shear,
    #[serde(rename = "ks")]
    KernelShap,
    #[serde(rename = "ks-wf", alias = "ks_wf")]
    KsWelford,
    #[serde(rename = "ks-pair", alias = "ks_pair")]
    KsPair,
    #[serde(rename = "ps")]
    Permutation,
    #[serde(rename = "aps")]
    AntitheticPermutation,
}

impl Method {
    pub const ESTIMATORS: [Method; 6] = [
        Method::Shear,
        Method::KernelShap,
        Method::KsWelford,
        Method::KsPair,
        Method::Permutation,
        Method::AntitheticPermutation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Shear => "shear",
            Method::KernelShap => "ks",
            Method::KsWelford => "ks-wf",
            Method::KsPair => "ks-pair",
            Method::Permutation => "ps",
            Method::AntitheticPermutation => "aps",
        }
    }

    pub fn is_kernel(self) -> bool {
        matches!(self, Method::KernelShap | Method::KsWelford | Method::KsPair)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "exact" => Method::Exact,
            "shear" => Method::Shear,
            "ks" => Method::KernelShap,
            "ks-wf" | "ks_wf" => Method::KsWelford,
            "ks-pair" | "ks_pair" => Method::KsPair,
            "ps" => Method::Permutation,
            "aps" => Method::AntitheticPermutation,
            other => return Err(Error::Argument(format!("unknown method '{other}'"))),
        })
    }
}

/// Per-feature contributions plus how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub phi: Vec<f64>,
    pub method: Method,
    /// Per-feature evaluation budget `N`; `2^M` for exact attributions.
    pub budget_n: u64,
    pub seed: Option<u64>,
    /// Value-function calls actually made.
    pub eval_count: u64,
    /// Cross-Hessian extractions (SHEAR only).
    pub backward_count: u64,
    /// A ridge term was needed to solve the regression.
    pub regularized: bool,
}

impl Attribution {
    pub(crate) fn new(phi: Vec<f64>, method: Method, budget_n: u64, seed: Option<u64>, eval_count: u64) -> Self {
        debug_assert!(phi.iter().all(|v| v.is_finite()));
        Self { phi, method, budget_n, seed, eval_count, backward_count: 0, regularized: false }
    }

    pub fn sum(&self) -> f64 {
        self.phi.iter().sum()
    }
}
