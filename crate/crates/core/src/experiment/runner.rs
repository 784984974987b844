use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{CouplingConfig, ExperimentConfig, InitialOpinions, ModelConfig, TrustConfig};
use crate::analysis::{
    detect_clusters, histogram, histogram_distance, summary_metrics, ClusterReport, HistogramDistance,
    OpinionHistogram, SummaryMetrics,
};
use crate::dynamics::{run_simulation, ClassicHkParams, ModelSpec, Parallelism, RunSchedule, SimulationResult};
use crate::error::{Error, Result};
use crate::media::{MediaCoupling, MediaSignal};
use crate::model::OpinionState;
use crate::rng::SeededRng;
use crate::sentiment::{self, ParseOptions};
use crate::trust::{generate_trust, TrustMatrix};

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces the config's global seed.
    pub seed: Option<u64>,
    /// Replaces `run.threads`.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub source: String,
    pub distance: HistogramDistance,
    /// Final opinions outside `[-1, 1]` that were clamped before snapping.
    pub clamped: usize,
    pub rejected_rows: usize,
    pub simulated: OpinionHistogram,
    pub empirical: OpinionHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub converged: bool,
    pub steps_taken: u64,
    pub max_steps: u64,
    pub final_opinions: Vec<f64>,
    pub metrics: SummaryMetrics,
    pub clusters: ClusterReport,
    pub histogram: OpinionHistogram,
    pub comparison: Option<Comparison>,
}

pub struct ExperimentOutcome {
    pub result: SimulationResult,
    pub report: ExperimentReport,
    pub dt: f64,
}

fn initial_state(config: &ExperimentConfig, global_seed: u64) -> Result<OpinionState> {
    let opinions = match &config.agents.initial_opinions {
        InitialOpinions::Explicit { values } => values.clone(),
        InitialOpinions::Uniform { lo, hi, seed } => {
            let mut rng = SeededRng::new(seed.unwrap_or(global_seed));
            (0..config.agents.count).map(|_| rng.uniform(*lo, *hi)).collect()
        }
        InitialOpinions::TwoCamps {
            n1,
            center1,
            n2,
            center2,
            jitter,
            seed,
        } => {
            let mut rng = SeededRng::new(seed.unwrap_or(global_seed));
            let mut v = Vec::with_capacity(n1 + n2);
            for (count, center) in [(*n1, *center1), (*n2, *center2)] {
                for _ in 0..count {
                    v.push(center + rng.uniform(-jitter, *jitter));
                }
            }
            v
        }
    };
    OpinionState::new(opinions)
}

fn coupling(config: &ExperimentConfig) -> Result<MediaCoupling> {
    let n = config.agents.count;
    match config.media.as_ref().map(|m| &m.coupling) {
        None => Ok(MediaCoupling::zeros(n)),
        Some(CouplingConfig::Constant { value }) => MediaCoupling::constant(n, *value),
        Some(CouplingConfig::PerAgent { values }) => MediaCoupling::new(values.clone()),
        Some(CouplingConfig::SignedSplit {
            magnitude,
            negative_fraction,
        }) => {
            let negatives = (negative_fraction * n as f64).round() as usize;
            MediaCoupling::new(
                (0..n)
                    .map(|i| if i < negatives { -magnitude } else { *magnitude })
                    .collect(),
            )
        }
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    base.join(p)
}

fn build_model(config: &ExperimentConfig, base: &Path, global_seed: u64) -> Result<ModelSpec> {
    Ok(match config.model {
        ModelConfig::Classic { epsilon } => ModelSpec::Classic(ClassicHkParams::new(epsilon)?),
        ModelConfig::Extended { .. } => {
            let params = config.model_params().expect("extended model has params");
            let trust = match config.trust.as_ref().expect("validated") {
                TrustConfig::Generate(spec) => {
                    let mut spec = spec.clone();
                    spec.seed = Some(spec.seed.unwrap_or(global_seed.wrapping_add(1)));
                    generate_trust(&spec)?
                }
                TrustConfig::Csv(path) => {
                    let path = resolve(base, path);
                    let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
                    let m = TrustMatrix::read_csv(f)?;
                    if m.dim() != config.agents.count {
                        return Err(Error::Config(format!(
                            "trust CSV {} has dimension {}, expected {}",
                            path.display(),
                            m.dim(),
                            config.agents.count
                        )));
                    }
                    m
                }
            };
            ModelSpec::Extended {
                params,
                trust,
                coupling: coupling(config)?,
            }
        }
    })
}

/// Clamps opinions to `[-1, 1]`, snaps them to the sentiment grid and bins
/// the integrated scores. Returns the histogram and the clamp count.
pub fn quantized_opinion_histogram(opinions: &[f64]) -> Result<(OpinionHistogram, usize)> {
    let mut h = sentiment::integrated_histogram();
    let mut clamped = 0;
    for &x in opinions {
        if !(-1.0..=1.0).contains(&x) {
            clamped += 1;
        }
        h.add(sentiment::quantize_score(x.clamp(-1.0, 1.0)).integrated_score)?;
    }
    Ok((h, clamped))
}

fn compare(final_opinions: &[f64], source: &str, path: &Path) -> Result<Comparison> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let parsed = sentiment::parse_records(f, ParseOptions::default())?;
    let empirical = sentiment::empirical_distribution(&parsed.records)?;
    let (simulated, clamped) = quantized_opinion_histogram(final_opinions)?;
    Ok(Comparison {
        source: source.to_string(),
        distance: histogram_distance(&simulated, &empirical)?,
        clamped,
        rejected_rows: parsed.diagnostics.len(),
        simulated,
        empirical,
    })
}

/// Runs the experiment without touching the filesystem except to read the
/// trust CSV and the comparison file. Relative paths resolve against `base`.
pub fn execute(config: &ExperimentConfig, base: &Path, opts: &RunOptions) -> Result<ExperimentOutcome> {
    let mut config = config.clone();
    if opts.seed.is_some() {
        config.seed = opts.seed;
    }
    if opts.threads.is_some() {
        config.run.threads = opts.threads;
    }
    config.validate()?;
    let global_seed = config.seed.unwrap_or(0);

    let initial = initial_state(&config, global_seed)?;
    let model = build_model(&config, base, global_seed)?;
    let threads = config.run.threads.unwrap_or(1);
    let schedule = RunSchedule {
        max_steps: config.run.max_steps,
        tolerance: config.run.tolerance,
        record_every: config.run.record_every,
        media: config
            .media
            .as_ref()
            .map_or(MediaSignal::Zero, |m| m.signal.clone()),
        parallelism: if threads > 1 {
            Parallelism::Rayon
        } else {
            Parallelism::Serial
        },
    };
    let result = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
        pool.install(|| run_simulation(&initial, &model, &schedule))?
    } else {
        run_simulation(&initial, &model, &schedule)?
    };

    let finals = &result.final_state.opinions;
    let h = &config.outputs.histogram;
    let comparison = match &config.outputs.compare_against {
        Some(p) => Some(compare(finals, p, &resolve(base, p))?),
        None => None,
    };
    let report = ExperimentReport {
        converged: result.converged,
        steps_taken: result.steps_taken,
        max_steps: config.run.max_steps,
        final_opinions: finals.clone(),
        metrics: summary_metrics(finals)?,
        clusters: detect_clusters(finals, config.gap_threshold().expect("validated"))?,
        histogram: histogram(finals, h.lo, h.hi, h.n_bins)?,
        comparison,
    };
    Ok(ExperimentOutcome {
        dt: model.dt(),
        result,
        report,
    })
}

/// Trajectory CSV: `step,t,agent_0,...,agent_{N-1}` with `t = step * dt`.
pub fn write_trajectory_csv<W: Write>(result: &SimulationResult, dt: f64, out: W) -> Result<()> {
    let n = result.final_state.len();
    let mut w = csv::Writer::from_writer(out);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    let mut header = vec!["step".to_string(), "t".to_string()];
    header.extend((0..n).map(|i| format!("agent_{i}")));
    w.write_record(&header).map_err(fmt)?;
    for s in &result.trajectory {
        let mut row = vec![s.step_index.to_string(), (s.step_index as f64 * dt).to_string()];
        row.extend(s.opinions.iter().map(|x| x.to_string()));
        w.write_record(&row).map_err(fmt)?;
    }
    w.flush().map_err(|e| Error::io("<trajectory csv>", e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes every output requested in `config.outputs`; returns the paths written.
pub fn write_outputs(config: &ExperimentConfig, base: &Path, outcome: &ExperimentOutcome) -> Result<Vec<PathBuf>> {
    let o = &config.outputs;
    let mut written = Vec::new();
    if let Some(p) = &o.trajectory_path {
        let path = resolve(base, p);
        write_file(&path, |w| write_trajectory_csv(&outcome.result, outcome.dt, w))?;
        written.push(path);
    }
    if let Some(p) = &o.histogram_path {
        let path = resolve(base, p);
        write_file(&path, |w| outcome.report.histogram.write_csv(w))?;
        written.push(path);
    }
    if let Some(p) = &o.clusters_path {
        let path = resolve(base, p);
        write_file(&path, |w| outcome.report.clusters.write_csv(w))?;
        written.push(path);
    }
    if let (Some(p), Some(cmp)) = (&o.comparison_histogram_path, &outcome.report.comparison) {
        let path = resolve(base, p);
        write_file(&path, |w| sentiment::write_grid_csv(&cmp.simulated, w))?;
        written.push(path);
    }
    if let Some(p) = &o.report_path {
        let path = resolve(base, p);
        write_file(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &outcome.report)
                .map_err(|e| Error::Format(e.to_string()))?;
            w.write_all(b"\n").map_err(|e| Error::io("<report>", e))
        })?;
        written.push(path);
    }
    Ok(written)
}

/// Loads, runs and writes one experiment. Relative paths inside the config
/// resolve against the config file's directory.
pub fn run_experiment(config_path: &Path, opts: &RunOptions) -> Result<ExperimentOutcome> {
    let config = ExperimentConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("")).to_path_buf();
    let outcome = execute(&config, &base, opts)?;
    write_outputs(&config, &base, &outcome)?;
    Ok(outcome)
}

pub fn summary(config: &ExperimentConfig, outcome: &ExperimentOutcome) -> String {
    let r = &outcome.report;
    let mut s = String::new();
    match config.model {
        ModelConfig::Classic { epsilon } => {
            let _ = writeln!(s, "model       classic bounded confidence, epsilon={epsilon}");
        }
        ModelConfig::Extended { alpha, beta, b, dt } => {
            let _ = writeln!(s, "model       extended trust/distrust, alpha={alpha} beta={beta} b={b} dt={dt}");
        }
    }
    let _ = writeln!(s, "agents      {}", r.final_opinions.len());
    if r.converged {
        let _ = writeln!(s, "converged   yes, after {} steps", r.steps_taken);
    } else {
        let _ = writeln!(s, "converged   no, stopped after {} of {} steps", r.steps_taken, r.max_steps);
    }
    let m = &r.metrics;
    let _ = writeln!(
        s,
        "metrics     mean={} variance={} min={} max={} spread={}",
        m.mean, m.variance, m.min, m.max, m.spread
    );
    let c = &r.clusters;
    match c.clusters.as_slice() {
        [one] => {
            let _ = writeln!(
                s,
                "clusters    1 (gap threshold {}): consensus at {}",
                c.gap_threshold, one.centroid
            );
        }
        many => {
            let _ = writeln!(s, "clusters    {} (gap threshold {})", many.len(), c.gap_threshold);
            for (k, cl) in many.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "  [{k}] size={} centroid={} width={}",
                    cl.member_indices.len(),
                    cl.centroid,
                    cl.width
                );
            }
        }
    }
    if let Some(cmp) = &r.comparison {
        let _ = writeln!(
            s,
            "comparison  vs {}: l1={} emd={} (clamped {} of {} opinions, {} rows rejected)",
            cmp.source,
            cmp.distance.l1,
            cmp.distance.emd,
            cmp.clamped,
            r.final_opinions.len(),
            cmp.rejected_rows
        );
    }
    s
}
