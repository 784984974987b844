//! JSON experiment configuration and its validation.
//!
//! Physics parameters (`alpha`, `beta`, `b`, `dt`, `epsilon`) have no
//! defaults; a config that omits one fails to parse.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::ClassicHkParams;
use crate::error::{Error, Result, Violation};
use crate::media::MediaSignal;
use crate::model::ModelParams;
use crate::trust::TrustGenSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Classic { epsilon: f64 },
    Extended { alpha: f64, beta: f64, b: f64, dt: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialOpinions {
    Uniform {
        lo: f64,
        hi: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Explicit {
        values: Vec<f64>,
    },
    /// `n1` agents around `center1` followed by `n2` around `center2`, each
    /// offset uniformly in `[-jitter, jitter)`.
    TwoCamps {
        n1: usize,
        center1: f64,
        n2: usize,
        center2: f64,
        jitter: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    pub count: usize,
    pub initial_opinions: InitialOpinions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TrustConfig {
    Generate(TrustGenSpec),
    /// Path to a trust CSV, relative to the config file.
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingConfig {
    Constant { value: f64 },
    PerAgent { values: Vec<f64> },
    /// The first `round(negative_fraction * N)` agents get `-magnitude`,
    /// the rest `+magnitude`.
    SignedSplit { magnitude: f64, negative_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediaConfig {
    pub signal: MediaSignal,
    pub coupling: CouplingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub max_steps: u64,
    pub tolerance: f64,
    pub record_every: u64,
    /// Worker threads for per-agent updates; absent or 1 runs serially.
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramConfig {
    pub lo: f64,
    pub hi: f64,
    pub n_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default)]
    pub trajectory_path: Option<String>,
    pub histogram: HistogramConfig,
    #[serde(default)]
    pub histogram_path: Option<String>,
    #[serde(default)]
    pub clusters_path: Option<String>,
    /// Full JSON report (metrics, histogram, clusters, comparison).
    #[serde(default)]
    pub report_path: Option<String>,
    /// Defaults to `b / 2` for the extended model; required for the classic one.
    #[serde(default)]
    pub cluster_gap_threshold: Option<f64>,
    /// Sentiment CSV to compare the quantized final opinions against.
    #[serde(default)]
    pub compare_against: Option<String>,
    /// Grid CSV of the quantized simulated opinions, written when comparing.
    #[serde(default)]
    pub comparison_histogram_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub agents: AgentsConfig,
    #[serde(default)]
    pub trust: Option<TrustConfig>,
    #[serde(default)]
    pub media: Option<MediaConfig>,
    pub run: RunConfig,
    pub outputs: OutputsConfig,
    /// Seed for stochastic fields that carry none of their own. Initial
    /// opinions draw from `seed`, generated trust from `seed + 1`.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config JSON: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn model_params(&self) -> Option<ModelParams> {
        match self.model {
            ModelConfig::Extended { alpha, beta, b, dt } => Some(ModelParams { alpha, beta, b, dt }),
            ModelConfig::Classic { .. } => None,
        }
    }

    pub fn gap_threshold(&self) -> Option<f64> {
        self.outputs
            .cluster_gap_threshold
            .or_else(|| self.model_params().map(|p| p.b / 2.0))
    }

    /// All violations found, each addressed by its field path.
    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Violations(v))
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.agents.count;
        let extended = matches!(self.model, ModelConfig::Extended { .. });

        match &self.model {
            ModelConfig::Classic { epsilon } => {
                out.extend(ClassicHkParams { epsilon: *epsilon }.violations("model"));
            }
            ModelConfig::Extended { .. } => {
                out.extend(self.model_params().unwrap().violations("model"));
            }
        }

        if n == 0 {
            out.push(Violation::new("agents.count", "must be >= 1"));
        }
        let init = "agents.initial_opinions";
        match &self.agents.initial_opinions {
            InitialOpinions::Uniform { lo, hi, seed } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    out.push(Violation::new(init, format!("need finite lo <= hi, got [{lo}, {hi}]")));
                }
                if seed.is_none() && self.seed.is_none() {
                    out.push(Violation::new(format!("{init}.seed"), "no seed here and no global seed"));
                }
            }
            InitialOpinions::Explicit { values } => {
                if values.len() != n {
                    out.push(Violation::new(
                        format!("{init}.values"),
                        format!("has {} entries for {n} agents", values.len()),
                    ));
                }
                if let Some(i) = values.iter().position(|x| !x.is_finite()) {
                    out.push(Violation::new(format!("{init}.values[{i}]"), "must be finite"));
                }
            }
            InitialOpinions::TwoCamps {
                n1,
                center1,
                n2,
                center2,
                jitter,
                seed,
            } => {
                if n1 + n2 != n {
                    out.push(Violation::new(
                        init,
                        format!("n1 + n2 = {} does not match agents.count = {n}", n1 + n2),
                    ));
                }
                if !(center1.is_finite() && center2.is_finite()) {
                    out.push(Violation::new(init, "camp centers must be finite"));
                }
                if !(jitter.is_finite() && *jitter >= 0.0) {
                    out.push(Violation::new(format!("{init}.jitter"), "must be finite and >= 0"));
                }
                if seed.is_none() && self.seed.is_none() {
                    out.push(Violation::new(format!("{init}.seed"), "no seed here and no global seed"));
                }
            }
        }

        match (&self.trust, extended) {
            (Some(_), false) => out.push(Violation::new("trust", "only valid for the extended model")),
            (None, true) => out.push(Violation::new("trust", "required for the extended model")),
            (Some(TrustConfig::Generate(spec)), true) => {
                out.extend(spec.violations("trust.generate"));
                if spec.n_agents != n {
                    out.push(Violation::new(
                        "trust.generate.n_agents",
                        format!("{} does not match agents.count = {n}", spec.n_agents),
                    ));
                }
            }
            (Some(TrustConfig::Csv(path)), true) => {
                if path.is_empty() {
                    out.push(Violation::new("trust.csv", "path must be non-empty"));
                }
            }
            (None, false) => {}
        }

        if let Some(media) = &self.media {
            if !extended {
                out.push(Violation::new("media", "only valid for the extended model"));
            }
            out.extend(media.signal.violations("media.signal"));
            match &media.coupling {
                CouplingConfig::Constant { value } => {
                    if !value.is_finite() {
                        out.push(Violation::new("media.coupling.value", "must be finite"));
                    }
                }
                CouplingConfig::PerAgent { values } => {
                    if values.len() != n {
                        out.push(Violation::new(
                            "media.coupling.values",
                            format!("has {} entries for {n} agents", values.len()),
                        ));
                    }
                    if let Some(i) = values.iter().position(|x| !x.is_finite()) {
                        out.push(Violation::new(format!("media.coupling.values[{i}]"), "must be finite"));
                    }
                }
                CouplingConfig::SignedSplit {
                    magnitude,
                    negative_fraction,
                } => {
                    if !magnitude.is_finite() {
                        out.push(Violation::new("media.coupling.magnitude", "must be finite"));
                    }
                    if !(negative_fraction.is_finite() && (0.0..=1.0).contains(negative_fraction)) {
                        out.push(Violation::new("media.coupling.negative_fraction", "must lie in [0, 1]"));
                    }
                }
            }
        }

        if !(self.run.tolerance.is_finite() && self.run.tolerance >= 0.0) {
            out.push(Violation::new("run.tolerance", "must be finite and >= 0"));
        }
        if self.run.record_every == 0 {
            out.push(Violation::new("run.record_every", "must be >= 1"));
        }
        if self.run.threads == Some(0) {
            out.push(Violation::new("run.threads", "must be >= 1"));
        }

        let h = &self.outputs.histogram;
        if !(h.lo.is_finite() && h.hi.is_finite() && h.lo < h.hi) {
            out.push(Violation::new("outputs.histogram", format!("need finite lo < hi, got [{}, {}]", h.lo, h.hi)));
        }
        if h.n_bins == 0 {
            out.push(Violation::new("outputs.histogram.n_bins", "must be >= 1"));
        }
        match self.gap_threshold() {
            None => out.push(Violation::new(
                "outputs.cluster_gap_threshold",
                "required for the classic model",
            )),
            Some(g) if !(g.is_finite() && g > 0.0) => {
                out.push(Violation::new("outputs.cluster_gap_threshold", "must be finite and > 0"))
            }
            Some(_) => {}
        }
        let o = &self.outputs;
        for (name, p) in [
            ("trajectory_path", &o.trajectory_path),
            ("histogram_path", &o.histogram_path),
            ("clusters_path", &o.clusters_path),
            ("report_path", &o.report_path),
            ("compare_against", &o.compare_against),
            ("comparison_histogram_path", &o.comparison_histogram_path),
        ] {
            if matches!(p, Some(s) if s.is_empty()) {
                out.push(Violation::new(format!("outputs.{name}"), "path must be non-empty"));
            }
        }
        if o.comparison_histogram_path.is_some() && o.compare_against.is_none() {
            out.push(Violation::new(
                "outputs.comparison_histogram_path",
                "needs outputs.compare_against",
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLASSIC: &str = r#"{
        "model": {"kind": "classic", "epsilon": 1.0},
        "agents": {"count": 2, "initial_opinions": {"kind": "explicit", "values": [0.0, 1.0]}},
        "run": {"max_steps": 100, "tolerance": 1e-9, "record_every": 1},
        "outputs": {"histogram": {"lo": 0.0, "hi": 1.0, "n_bins": 10}, "cluster_gap_threshold": 0.1}
    }"#;

    #[test]
    fn classic_config_parses_and_validates() {
        let c = ExperimentConfig::from_json(CLASSIC).unwrap();
        c.validate().unwrap();
        assert_eq!(c.gap_threshold(), Some(0.1));
    }

    #[test]
    fn missing_physics_parameter_is_rejected() {
        let text = CLASSIC.replace(r#""epsilon": 1.0"#, r#""eps": 1.0"#);
        let err = ExperimentConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("epsilon") || err.to_string().contains("eps"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn negative_dt_names_the_field() {
        let text = r#"{
            "model": {"kind": "extended", "alpha": 0.0, "beta": 10.0, "b": 1.0, "dt": -0.1},
            "agents": {"count": 2, "initial_opinions": {"kind": "explicit", "values": [0.0, 1.0]}},
            "trust": {"generate": {"n_agents": 3, "topology": {"kind": "complete"},
                      "weight_law": {"kind": "constant", "value": 0.1}}},
            "run": {"max_steps": 10, "tolerance": 0.0, "record_every": 0},
            "outputs": {"histogram": {"lo": 0.0, "hi": 1.0, "n_bins": 10}}
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        let paths: Vec<String> = c.violations().into_iter().map(|v| v.path).collect();
        assert_eq!(paths, ["model.dt", "trust.generate.n_agents", "run.record_every"]);
        // b/2 default applies
        assert_eq!(c.gap_threshold(), Some(0.5));
    }

    #[test]
    fn classic_needs_threshold_and_rejects_trust() {
        let mut c = ExperimentConfig::from_json(CLASSIC).unwrap();
        c.outputs.cluster_gap_threshold = None;
        c.trust = Some(TrustConfig::Csv("t.csv".into()));
        let paths: Vec<String> = c.violations().into_iter().map(|v| v.path).collect();
        assert_eq!(paths, ["trust", "outputs.cluster_gap_threshold"]);
    }

    #[test]
    fn unseeded_uniform_needs_global_seed() {
        let mut c = ExperimentConfig::from_json(CLASSIC).unwrap();
        c.agents.initial_opinions = InitialOpinions::Uniform {
            lo: 0.0,
            hi: 1.0,
            seed: None,
        };
        assert_eq!(c.violations()[0].path, "agents.initial_opinions.seed");
        c.seed = Some(3);
        assert!(c.violations().is_empty());
    }
}
