//! External pressure `A(t)` on the step grid and per-agent response coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start_step: u64,
    pub level: f64,
}

/// Media pressure as a function of the step index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MediaSignal {
    #[default]
    Zero,
    Constant { level: f64 },
    /// `level` on the half-open step interval `[start_step, end_step)`, zero elsewhere.
    Pulse {
        level: f64,
        start_step: u64,
        end_step: u64,
    },
    /// Level of the last segment whose start is at or before the step; zero
    /// before the first segment.
    Piecewise { segments: Vec<Segment> },
}

impl MediaSignal {
    pub fn evaluate(&self, step_index: u64) -> f64 {
        match self {
            MediaSignal::Zero => 0.0,
            MediaSignal::Constant { level } => *level,
            MediaSignal::Pulse {
                level,
                start_step,
                end_step,
            } => {
                if (*start_step..*end_step).contains(&step_index) {
                    *level
                } else {
                    0.0
                }
            }
            MediaSignal::Piecewise { segments } => {
                // segments are strictly increasing in start_step
                let idx = segments.partition_point(|s| s.start_step <= step_index);
                if idx == 0 {
                    0.0
                } else {
                    segments[idx - 1].level
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations("media.signal");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Violations(v))
        }
    }

    pub(crate) fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            MediaSignal::Zero => {}
            MediaSignal::Constant { level } => {
                if !level.is_finite() {
                    out.push(Violation::new(format!("{prefix}.level"), "must be finite"));
                }
            }
            MediaSignal::Pulse {
                level,
                start_step,
                end_step,
            } => {
                if !level.is_finite() {
                    out.push(Violation::new(format!("{prefix}.level"), "must be finite"));
                }
                if start_step > end_step {
                    out.push(Violation::new(
                        format!("{prefix}.end_step"),
                        format!("must be >= start_step ({start_step}), got {end_step}"),
                    ));
                }
            }
            MediaSignal::Piecewise { segments } => {
                for (k, s) in segments.iter().enumerate() {
                    if !s.level.is_finite() {
                        out.push(Violation::new(
                            format!("{prefix}.segments[{k}].level"),
                            "must be finite",
                        ));
                    }
                    if k > 0 && s.start_step <= segments[k - 1].start_step {
                        out.push(Violation::new(
                            format!("{prefix}.segments[{k}].start_step"),
                            "segment starts must be strictly increasing",
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Per-agent response `c_i` to the media signal. Positive values move an
/// agent toward the media direction, negative values against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaCoupling {
    pub c: Vec<f64>,
}

impl MediaCoupling {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if let Some(i) = c.iter().position(|x| !x.is_finite()) {
            return Err(Error::InputDomain(format!("coupling c[{i}] is not finite")));
        }
        Ok(Self { c })
    }

    pub fn zeros(n: usize) -> Self {
        Self { c: vec![0.0; n] }
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}
