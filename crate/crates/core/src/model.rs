//! Per-pair interaction math: the sigmoid cutoff and the signed coupling term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Parameters of the extended trust/distrust model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Attenuation rate per unit time.
    pub alpha: f64,
    /// Steepness of the cutoff sigmoid.
    pub beta: f64,
    /// Confidence bound: distance at which the cutoff equals one half.
    pub b: f64,
    /// Time step.
    pub dt: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, b: f64, dt: f64) -> Result<Self> {
        let p = Self { alpha, beta, b, dt };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations("params");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Violations(v))
        }
    }

    pub(crate) fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |name: &str, value: f64, positive: bool| {
            let path = format!("{prefix}.{name}");
            if !value.is_finite() {
                out.push(Violation::new(path, "must be finite"));
            } else if positive && value <= 0.0 {
                out.push(Violation::new(path, format!("must be > 0, got {value}")));
            } else if !positive && value < 0.0 {
                out.push(Violation::new(path, format!("must be >= 0, got {value}")));
            }
        };
        check("alpha", self.alpha, false);
        check("beta", self.beta, true);
        check("b", self.b, true);
        check("dt", self.dt, true);
        out
    }
}

/// Opinions of all agents at one point on the step grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionState {
    pub opinions: Vec<f64>,
    pub step_index: u64,
}

impl OpinionState {
    pub fn new(opinions: Vec<f64>) -> Result<Self> {
        Self::at_step(opinions, 0)
    }

    pub fn at_step(opinions: Vec<f64>, step_index: u64) -> Result<Self> {
        if opinions.is_empty() {
            return Err(Error::InputDomain("opinion state needs at least one agent".into()));
        }
        if let Some(i) = opinions.iter().position(|x| !x.is_finite()) {
            return Err(Error::InputDomain(format!(
                "opinion of agent {i} is not finite ({})",
                opinions[i]
            )));
        }
        Ok(Self {
            opinions,
            step_index,
        })
    }

    pub fn len(&self) -> usize {
        self.opinions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opinions.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.opinions.iter().sum::<f64>() / self.opinions.len() as f64
    }
}

/// Smooth cutoff `1 / (1 + exp(beta * (distance - b)))`.
///
/// Evaluated in the overflow-free form: for a positive exponent the
/// equivalent `exp(-x) / (1 + exp(-x))` is used, so large distances
/// underflow to 0.0 instead of producing NaN.
pub fn phi(distance: f64, params: &ModelParams) -> Result<f64> {
    if !distance.is_finite() || distance < 0.0 {
        return Err(Error::InputDomain(format!(
            "cutoff distance must be finite and non-negative, got {distance}"
        )));
    }
    Ok(phi_unchecked(distance, params.beta, params.b))
}

#[inline]
pub(crate) fn phi_unchecked(distance: f64, beta: f64, b: f64) -> f64 {
    let x = beta * (distance - b);
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Signed influence of agent `j` on agent `i`:
/// `d_ij * phi(|i - j|) * (opinion_j - opinion_i)`.
pub fn coupling_term(opinion_i: f64, opinion_j: f64, d_ij: f64, params: &ModelParams) -> Result<f64> {
    if !(opinion_i.is_finite() && opinion_j.is_finite() && d_ij.is_finite()) {
        return Err(Error::InputDomain(format!(
            "coupling inputs must be finite (I_i={opinion_i}, I_j={opinion_j}, D={d_ij})"
        )));
    }
    Ok(coupling_unchecked(opinion_i, opinion_j, d_ij, params.beta, params.b))
}

#[inline]
pub(crate) fn coupling_unchecked(opinion_i: f64, opinion_j: f64, d_ij: f64, beta: f64, b: f64) -> f64 {
    let diff = opinion_j - opinion_i;
    d_ij * phi_unchecked(diff.abs(), beta, b) * diff
}
