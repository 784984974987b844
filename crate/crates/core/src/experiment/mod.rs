//! Config-driven experiment runner: build the initial state, trust network
//! and media forcing from a JSON config, run the simulation, then summarize
//! and optionally compare against a sentiment CSV.

mod config;
mod runner;

pub use config::{
    AgentsConfig, CouplingConfig, ExperimentConfig, HistogramConfig, InitialOpinions, MediaConfig, ModelConfig,
    OutputsConfig, RunConfig, TrustConfig,
};
pub use runner::{
    execute, quantized_opinion_histogram, run_experiment, summary, write_outputs, write_trajectory_csv, Comparison,
    ExperimentOutcome, ExperimentReport, RunOptions,
};
