//! Synchronous time stepping of the classic bounded-confidence model and the
//! extended trust/distrust model with attenuation and media forcing.
//!
//! Every step reads only the previous state. Per-agent updates may run on a
//! rayon pool, but each agent's sum over `j` is accumulated serially in
//! ascending `j`, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::media::{MediaCoupling, MediaSignal};
use crate::model::{coupling_unchecked, ModelParams, OpinionState};
use crate::trust::TrustMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicHkParams {
    /// Confidence bound; agents closer than or exactly at this distance are neighbours.
    pub epsilon: f64,
}

impl ClassicHkParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        let p = Self { epsilon };
        let v = p.violations("params");
        if v.is_empty() {
            Ok(p)
        } else {
            Err(Error::Violations(v))
        }
    }

    pub(crate) fn violations(&self, prefix: &str) -> Vec<Violation> {
        if self.epsilon.is_finite() && self.epsilon > 0.0 {
            Vec::new()
        } else {
            vec![Violation::new(
                format!("{prefix}.epsilon"),
                format!("must be finite and > 0, got {}", self.epsilon),
            )]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    #[default]
    Serial,
    /// Agents are updated on the current rayon pool.
    Rayon,
}

fn map_agents<F>(n: usize, par: Parallelism, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    match par {
        Parallelism::Serial => (0..n).map(f).collect(),
        Parallelism::Rayon => (0..n).into_par_iter().map(f).collect(),
    }
}

fn classic_agent(old: &[f64], i: usize, epsilon: f64) -> f64 {
    let xi = old[i];
    let mut sum = 0.0;
    let mut count = 0usize;
    let (mut lo, mut hi) = (xi, xi);
    for &xj in old {
        if (xi - xj).abs() <= epsilon {
            sum += xj;
            count += 1;
            lo = lo.min(xj);
            hi = hi.max(xj);
        }
    }
    // count >= 1: agent i is always its own neighbour. The clamp only undoes
    // rounding that would put the mean an ulp outside its neighbours.
    (sum / count as f64).clamp(lo, hi)
}

/// One classic Hegselmann-Krause step: every agent moves to the mean of all
/// opinions within `epsilon` of its own (itself included).
pub fn hk_classic_step(state: &OpinionState, hk: &ClassicHkParams) -> OpinionState {
    hk_classic_step_with(state, hk, Parallelism::Serial)
}

pub fn hk_classic_step_with(state: &OpinionState, hk: &ClassicHkParams, par: Parallelism) -> OpinionState {
    let old = &state.opinions;
    let opinions = map_agents(old.len(), par, |i| classic_agent(old, i, hk.epsilon));
    OpinionState {
        opinions,
        step_index: state.step_index + 1,
    }
}

#[inline]
fn extended_agent(
    old: &[f64],
    i: usize,
    trust: &TrustMatrix,
    params: &ModelParams,
    c_i: f64,
    media: f64,
) -> f64 {
    let xi = old[i];
    let mut interaction = 0.0;
    for (j, (&xj, &d)) in old.iter().zip(trust.row(i)).enumerate() {
        if j != i {
            interaction += coupling_unchecked(xi, xj, d, params.beta, params.b);
        }
    }
    xi + params.dt * (-params.alpha * xi + c_i * media + interaction)
}

fn check_extended_dims(state: &OpinionState, trust: &TrustMatrix, coupling: &MediaCoupling) -> Result<()> {
    let n = state.len();
    if trust.dim() != n {
        return Err(Error::Config(format!(
            "trust matrix dimension {} does not match {n} agents",
            trust.dim()
        )));
    }
    if coupling.len() != n {
        return Err(Error::Config(format!(
            "media coupling has {} entries for {n} agents",
            coupling.len()
        )));
    }
    Ok(())
}

/// One forward-Euler step of the extended model:
///
/// `I_i += dt * (-alpha I_i + c_i A + sum_{j != i} D_ij phi(|I_i - I_j|) (I_j - I_i))`.
///
/// With `alpha = 0` this is the model without attenuation.
pub fn extended_step(
    state: &OpinionState,
    trust: &TrustMatrix,
    params: &ModelParams,
    coupling: &MediaCoupling,
    media: f64,
) -> Result<OpinionState> {
    extended_step_with(state, trust, params, coupling, media, Parallelism::Serial)
}

pub fn extended_step_with(
    state: &OpinionState,
    trust: &TrustMatrix,
    params: &ModelParams,
    coupling: &MediaCoupling,
    media: f64,
    par: Parallelism,
) -> Result<OpinionState> {
    check_extended_dims(state, trust, coupling)?;
    if !media.is_finite() {
        return Err(Error::InputDomain(format!("media pressure is not finite ({media})")));
    }
    let old = &state.opinions;
    let opinions = map_agents(old.len(), par, |i| {
        extended_agent(old, i, trust, params, coupling.c[i], media)
    });
    let step = state.step_index + 1;
    if let Some(agent) = opinions.iter().position(|x| !x.is_finite()) {
        return Err(Error::Divergence {
            step,
            agent,
            last_state: Box::new(state.clone()),
        });
    }
    Ok(OpinionState {
        opinions,
        step_index: step,
    })
}

/// Which update rule a run uses, with everything that rule needs.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Classic(ClassicHkParams),
    Extended {
        params: ModelParams,
        trust: TrustMatrix,
        coupling: MediaCoupling,
    },
}

impl ModelSpec {
    /// Time step length; the classic model advances one unit per step.
    pub fn dt(&self) -> f64 {
        match self {
            ModelSpec::Classic(_) => 1.0,
            ModelSpec::Extended { params, .. } => params.dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSchedule {
    pub max_steps: u64,
    /// A completed step with `max_i |dI_i| < tolerance` ends the run as converged.
    pub tolerance: f64,
    /// Snapshot every this many steps (step 0 and the final state are always kept).
    pub record_every: u64,
    /// Ignored by the classic model.
    pub media: MediaSignal,
    pub parallelism: Parallelism,
}

impl RunSchedule {
    pub fn new(max_steps: u64, tolerance: f64, record_every: u64) -> Self {
        Self {
            max_steps,
            tolerance,
            record_every,
            media: MediaSignal::Zero,
            parallelism: Parallelism::Serial,
        }
    }

    pub fn with_media(mut self, media: MediaSignal) -> Self {
        self.media = media;
        self
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub trajectory: Vec<OpinionState>,
    pub final_state: OpinionState,
    pub converged: bool,
    pub steps_taken: u64,
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn run_simulation(initial: &OpinionState, model: &ModelSpec, schedule: &RunSchedule) -> Result<SimulationResult> {
    if !(schedule.tolerance.is_finite() && schedule.tolerance >= 0.0) {
        return Err(Error::Config(format!(
            "tolerance must be finite and >= 0, got {}",
            schedule.tolerance
        )));
    }
    if schedule.record_every == 0 {
        return Err(Error::Config("record_every must be >= 1".into()));
    }
    match model {
        ModelSpec::Classic(hk) => {
            let v = hk.violations("model");
            if !v.is_empty() {
                return Err(Error::Violations(v));
            }
        }
        ModelSpec::Extended {
            params,
            trust,
            coupling,
        } => {
            params.validate()?;
            check_extended_dims(initial, trust, coupling)?;
            schedule.media.validate()?;
        }
    }

    let mut state = initial.clone();
    let mut trajectory = vec![state.clone()];
    let mut converged = false;
    let mut steps_taken = 0;
    while steps_taken < schedule.max_steps {
        let next = match model {
            ModelSpec::Classic(hk) => hk_classic_step_with(&state, hk, schedule.parallelism),
            ModelSpec::Extended {
                params,
                trust,
                coupling,
            } => {
                let a_t = schedule.media.evaluate(state.step_index);
                extended_step_with(&state, trust, params, coupling, a_t, schedule.parallelism)?
            }
        };
        steps_taken += 1;
        let change = max_change(&next.opinions, &state.opinions);
        state = next;
        if steps_taken % schedule.record_every == 0 {
            trajectory.push(state.clone());
        }
        if change < schedule.tolerance {
            converged = true;
            break;
        }
    }
    if trajectory.last().map(|s| s.step_index) != Some(state.step_index) {
        trajectory.push(state.clone());
    }
    Ok(SimulationResult {
        trajectory,
        final_state: state,
        converged,
        steps_taken,
    })
}
