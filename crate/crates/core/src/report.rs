use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of a bound calculator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub method: String,
    /// Raw bound value; may exceed 1 or be +∞.
    pub bound: f64,
    /// `min(bound, 1)`, floored at 0.
    pub clipped: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_opt: Option<u64>,
    /// Set when the clipped bound is at least the blind-guess level 1/2.
    pub vacuous: bool,
    pub inputs: BTreeMap<String, f64>,
    /// Secondary quantities (linear relaxations, penalties, ...).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
}

impl BoundReport {
    pub fn new(method: &str, bound: f64) -> Self {
        let clipped = if bound.is_nan() { 1.0 } else { bound.clamp(0.0, 1.0) };
        Self {
            method: method.to_string(),
            bound,
            clipped,
            lambda_opt: None,
            k_opt: None,
            vacuous: clipped >= 0.5,
            inputs: BTreeMap::new(),
            extras: BTreeMap::new(),
        }
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda_opt = Some(lambda);
        self
    }

    pub fn k(mut self, k: u64) -> Self {
        self.k_opt = Some(k);
        self
    }

    pub fn input(mut self, name: &str, value: f64) -> Self {
        self.inputs.insert(name.to_string(), value);
        self
    }

    pub fn extra(mut self, name: &str, value: f64) -> Self {
        self.extras.insert(name.to_string(), value);
        self
    }
}

/// Confidence level ε ∈ (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Confidence(f64);

impl Confidence {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon < 1.0 {
            Ok(Self(epsilon))
        } else {
            Err(Error::Validation(format!("confidence {epsilon} must lie in (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// −log ε.
    pub fn neg_log(self) -> f64 {
        -self.0.ln()
    }
}

impl TryFrom<f64> for Confidence {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Confidence> for f64 {
    fn from(c: Confidence) -> f64 {
        c.0
    }
}

pub(crate) fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::Validation("sample size must be positive".into()))
    } else {
        Ok(())
    }
}

pub(crate) fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} = {v} must be finite and non-negative")))
    }
}
