//! Signed, asymmetric trust matrices and seeded generators for them.
//!
//! Entry `(i, j)` is the weight of agent `j`'s opinion on agent `i`.
//! Positive weights attract, negative weights repel. `D_ij` and `D_ji` are
//! independent and the diagonal is always zero.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrustMatrix {
    n: usize,
    /// Row-major, `weights[i * n + j]`.
    weights: Vec<f64>,
}

impl TrustMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            weights: vec![0.0; n * n],
        }
    }

    /// Builds a matrix from row-major weights. Diagonal entries are set to zero.
    pub fn from_row_major(n: usize, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n * n {
            return Err(Error::Config(format!(
                "trust matrix of dimension {n} needs {} weights, got {}",
                n * n,
                weights.len()
            )));
        }
        if let Some(k) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InputDomain(format!(
                "trust weight ({}, {}) is not finite",
                k / n,
                k % n
            )));
        }
        for i in 0..n {
            weights[i * n + i] = 0.0;
        }
        Ok(Self { n, weights })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Config(format!(
                "trust row {i} has {} entries, expected {n}",
                rows[i].len()
            )));
        }
        Self::from_row_major(n, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    /// Sets `(i, j)`; writes to the diagonal are ignored.
    pub fn set(&mut self, i: usize, j: usize, w: f64) {
        if i != j {
            self.weights[i * self.n + j] = w;
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Copies the lower triangle onto the upper one, `D_ji = D_ij` for `i > j`.
    pub fn symmetrized_from_lower(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for j in 0..i {
                out.weights[j * self.n + i] = self.get(i, j);
            }
        }
        out
    }

    /// Writes the matrix as CSV: a header of agent indices `0,1,...,N-1`
    /// followed by one row per influenced agent.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (0..self.n).map(|j| j.to_string()).collect();
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.n {
            w.write_record(self.row(i).iter().map(|x| x.to_string()))
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<trust csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let text = crate::lines::read_lf(input, "<trust csv>")?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(&text[..]);
        let mut records = rdr.records();
        let header = records
            .next()
            .ok_or_else(|| Error::Format("trust CSV is empty".into()))?
            .map_err(csv_err)?;
        let n = header.len();
        for (j, field) in header.iter().enumerate() {
            if field.trim() != j.to_string() {
                return Err(Error::Format(format!(
                    "trust CSV header column {j} should be '{j}', found '{field}'"
                )));
            }
        }
        let mut weights = Vec::with_capacity(n * n);
        let mut rows = 0;
        for rec in records {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != n {
                return Err(Error::Format(format!(
                    "trust CSV line {line}: expected {n} fields, found {}",
                    rec.len()
                )));
            }
            for field in rec.iter() {
                let w: f64 = field.trim().parse().map_err(|_| {
                    Error::Format(format!("trust CSV line {line}: '{field}' is not a number"))
                })?;
                weights.push(w);
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Format(format!(
                "trust CSV has {rows} data rows but {n} columns"
            )));
        }
        Self::from_row_major(n, weights)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    Complete,
    /// Each directed off-diagonal link is present with this probability.
    RandomSparse { connection_probability: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightLaw {
    Constant { value: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Magnitude uniform in `[magnitude_lo, magnitude_hi)`, negated with
    /// probability `distrust_fraction`.
    SignedMix {
        magnitude_lo: f64,
        magnitude_hi: f64,
        distrust_fraction: f64,
    },
}

/// Two hostile (or friendly) camps: agents `0..sizes.0` form the first
/// block, the rest the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factions {
    pub sizes: (usize, usize),
    pub intra_weight: f64,
    pub inter_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustGenSpec {
    pub n_agents: usize,
    pub topology: Topology,
    pub weight_law: WeightLaw,
    /// When present, block weights replace the weight law; the topology
    /// still decides which links exist.
    #[serde(default)]
    pub factions: Option<Factions>,
    /// `None` defers to the experiment's global seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl TrustGenSpec {
    pub(crate) fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        let unit = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
        if self.n_agents == 0 {
            out.push(Violation::new(format!("{prefix}.n_agents"), "must be >= 1"));
        }
        if let Topology::RandomSparse {
            connection_probability,
        } = self.topology
        {
            if !unit(connection_probability) {
                out.push(Violation::new(
                    format!("{prefix}.topology.connection_probability"),
                    format!("must lie in [0, 1], got {connection_probability}"),
                ));
            }
        }
        match self.weight_law {
            WeightLaw::Constant { value } => {
                if !value.is_finite() {
                    out.push(Violation::new(format!("{prefix}.weight_law.value"), "must be finite"));
                }
            }
            WeightLaw::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    out.push(Violation::new(
                        format!("{prefix}.weight_law"),
                        format!("need finite lo <= hi, got [{lo}, {hi}]"),
                    ));
                }
            }
            WeightLaw::SignedMix {
                magnitude_lo,
                magnitude_hi,
                distrust_fraction,
            } => {
                if !(magnitude_lo.is_finite()
                    && magnitude_hi.is_finite()
                    && 0.0 <= magnitude_lo
                    && magnitude_lo <= magnitude_hi)
                {
                    out.push(Violation::new(
                        format!("{prefix}.weight_law"),
                        format!(
                            "need finite 0 <= magnitude_lo <= magnitude_hi, got [{magnitude_lo}, {magnitude_hi}]"
                        ),
                    ));
                }
                if !unit(distrust_fraction) {
                    out.push(Violation::new(
                        format!("{prefix}.weight_law.distrust_fraction"),
                        format!("must lie in [0, 1], got {distrust_fraction}"),
                    ));
                }
            }
        }
        if let Some(f) = &self.factions {
            if f.sizes.0 + f.sizes.1 != self.n_agents {
                out.push(Violation::new(
                    format!("{prefix}.factions.sizes"),
                    format!(
                        "faction sizes {} + {} must sum to n_agents = {}",
                        f.sizes.0, f.sizes.1, self.n_agents
                    ),
                ));
            }
            if !(f.intra_weight.is_finite() && f.inter_weight.is_finite()) {
                out.push(Violation::new(
                    format!("{prefix}.factions"),
                    "block weights must be finite",
                ));
            }
        }
        out
    }
}

/// Draws a trust matrix from `spec`, using `spec.seed` (or 0 when unset).
///
/// Entries are visited row-major over off-diagonal `(i, j)`. For each entry
/// a sparse topology first draws the link indicator; a present link then
/// draws its weight (uniform: one draw; signed mix: magnitude draw, then
/// sign draw). Constant and faction weights consume no draws.
pub fn generate_trust(spec: &TrustGenSpec) -> Result<TrustMatrix> {
    let v = spec.violations("trust");
    if !v.is_empty() {
        return Err(Error::Violations(v));
    }
    let n = spec.n_agents;
    let mut rng = SeededRng::new(spec.seed.unwrap_or(0));
    let mut m = TrustMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let linked = match spec.topology {
                Topology::Complete => true,
                Topology::RandomSparse {
                    connection_probability,
                } => rng.bernoulli(connection_probability),
            };
            if !linked {
                continue;
            }
            let w = match (&spec.factions, spec.weight_law) {
                (Some(f), _) => {
                    if (i < f.sizes.0) == (j < f.sizes.0) {
                        f.intra_weight
                    } else {
                        f.inter_weight
                    }
                }
                (None, WeightLaw::Constant { value }) => value,
                (None, WeightLaw::Uniform { lo, hi }) => rng.uniform(lo, hi),
                (
                    None,
                    WeightLaw::SignedMix {
                        magnitude_lo,
                        magnitude_hi,
                        distrust_fraction,
                    },
                ) => {
                    let mag = rng.uniform(magnitude_lo, magnitude_hi);
                    if rng.bernoulli(distrust_fraction) {
                        -mag
                    } else {
                        mag
                    }
                }
            };
            m.set(i, j, w);
        }
    }
    Ok(m)
}
