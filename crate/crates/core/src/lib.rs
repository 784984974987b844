//! Bounded-confidence opinion dynamics with signed, asymmetric trust,
//! exponential attenuation and external media pressure, plus tools to
//! compare simulated opinion distributions with quantized comment
//! sentiment.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiment;
mod lines;
pub mod media;
pub mod model;
pub mod rng;
pub mod sentiment;
pub mod trust;

pub use analysis::{
    detect_clusters, histogram, histogram_distance, summary_metrics, ClusterReport, HistogramDistance,
    OpinionHistogram, SummaryMetrics,
};
pub use dynamics::{
    extended_step, hk_classic_step, run_simulation, ClassicHkParams, ModelSpec, Parallelism, RunSchedule,
    SimulationResult,
};
pub use error::{Error, Result, Violation};
pub use media::{MediaCoupling, MediaSignal};
pub use model::{coupling_term, phi, ModelParams, OpinionState};
pub use sentiment::{empirical_distribution, parse_records, quantize, QuantizedOpinion, SentimentRecord};
pub use trust::{generate_trust, TrustGenSpec, TrustMatrix};
