//! Per-comment sentiment triplets: CSV ingestion, quantization to the
//! quarter-step grid on `[-1, 1]`, and empirical distributions on the
//! integrated `[0, 2]` scale.
//!
//! The composite score of a comment is `pos - neg`. It is snapped to the
//! nearest multiple of 0.25 (ties toward zero) and shifted by +1, so a pure
//! negative comment lands at 0, a neutral one at 1 and a pure positive one
//! at 2.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::OpinionHistogram;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 4] = ["comment_id", "neg", "neu", "pos"];
pub const GRID_CSV_HEADER: [&str; 3] = ["grid_score", "integrated_score", "count"];

/// Grid step on the signed composite scale.
pub const GRID_STEP: f64 = 0.25;
/// Number of grid points on `[-1, 1]`.
pub const GRID_POINTS: usize = 9;

pub const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentRecord {
    pub comment_id: String,
    pub neg: f64,
    pub neu: f64,
    pub pos: f64,
}

impl SentimentRecord {
    pub fn new(comment_id: impl Into<String>, neg: f64, neu: f64, pos: f64) -> Result<Self> {
        let r = Self {
            comment_id: comment_id.into(),
            neg,
            neu,
            pos,
        };
        match r.check() {
            None => Ok(r),
            Some(reason) => Err(Error::InputDomain(reason)),
        }
    }

    fn check(&self) -> Option<String> {
        for (name, v) in [("neg", self.neg), ("neu", self.neu), ("pos", self.pos)] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Some(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        let sum = self.neg + self.neu + self.pos;
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Some(format!("components sum to {sum}, expected 1"));
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizedOpinion {
    /// `pos - neg`, in `[-1, 1]`.
    pub raw_score: f64,
    pub grid_score: f64,
    /// `grid_score + 1`, in `[0, 2]`.
    pub integrated_score: f64,
}

/// Nearest multiple of 0.25 within `[-1, 1]`; exact midpoints go toward zero.
/// Values outside `[-1, 1]` are clamped first.
pub fn snap_to_grid(raw: f64) -> f64 {
    let q = raw.clamp(-1.0, 1.0) / GRID_STEP;
    let whole = q.trunc();
    let frac = q - whole;
    let k = if frac.abs() > 0.5 { whole + frac.signum() } else { whole };
    // + 0.0 turns -0.0 into 0.0
    k * GRID_STEP + 0.0
}

pub fn quantize_score(raw_score: f64) -> QuantizedOpinion {
    let grid_score = snap_to_grid(raw_score);
    QuantizedOpinion {
        raw_score,
        grid_score,
        integrated_score: grid_score + 1.0,
    }
}

pub fn quantize(record: &SentimentRecord) -> QuantizedOpinion {
    quantize_score(record.pos - record.neg)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Rescale triplets whose sum is off by more than the tolerance instead
    /// of rejecting them.
    pub renormalize: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutcome {
    pub records: Vec<SentimentRecord>,
    pub diagnostics: Vec<RowDiagnostic>,
}

/// Reads `comment_id,neg,neu,pos` rows. Invalid rows are skipped and
/// reported with their line number; a missing or wrong header is an error.
pub fn parse_records<R: Read>(input: R, opts: ParseOptions) -> Result<ParseOutcome> {
    let text = crate::lines::read_lf(input, "<sentiment csv>")?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(&text[..]);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => return Err(Error::Format("sentiment CSV is empty; header required".into())),
        Some(h) => h.map_err(|e| Error::Format(format!("sentiment CSV header: {e}")))?,
    };
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Format(format!(
            "sentiment CSV header must be '{}', found '{}'",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut out = ParseOutcome::default();
    for row in rows {
        let rec = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(Error::Format(e.to_string()));
                }
                out.diagnostics.push(RowDiagnostic {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        match parse_row(&rec, opts) {
            Ok(r) => out.records.push(r),
            Err(reason) => out.diagnostics.push(RowDiagnostic { line, reason }),
        }
    }
    Ok(out)
}

fn parse_row(rec: &csv::StringRecord, opts: ParseOptions) -> std::result::Result<SentimentRecord, String> {
    if rec.len() != 4 {
        return Err(format!("expected 4 fields, found {}", rec.len()));
    }
    let num = |k: usize| -> std::result::Result<f64, String> {
        let v: f64 = rec[k]
            .parse()
            .map_err(|_| format!("{} = '{}' is not a number", CSV_HEADER[k], &rec[k]))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{} is not finite", CSV_HEADER[k]))
        }
    };
    let mut r = SentimentRecord {
        comment_id: rec[0].to_string(),
        neg: num(1)?,
        neu: num(2)?,
        pos: num(3)?,
    };
    if opts.renormalize {
        let sum = r.neg + r.neu + r.pos;
        let in_range = [r.neg, r.neu, r.pos].iter().all(|v| (0.0..=1.0).contains(v));
        if in_range && sum > 0.0 && (sum - 1.0).abs() > SUM_TOLERANCE {
            r.neg /= sum;
            r.neu /= sum;
            r.pos /= sum;
        }
    }
    match r.check() {
        None => Ok(r),
        Some(reason) => Err(reason),
    }
}

/// Empty histogram with one bin per grid point on the integrated scale:
/// 9 bins of width 0.25 over `[-0.125, 2.125]`.
pub fn integrated_histogram() -> OpinionHistogram {
    OpinionHistogram::empty(-0.125, 2.125, GRID_POINTS).expect("static binning is valid")
}

pub fn empirical_distribution(records: &[SentimentRecord]) -> Result<OpinionHistogram> {
    if records.is_empty() {
        return Err(Error::InputDomain("empirical distribution needs at least one record".into()));
    }
    let mut h = integrated_histogram();
    for r in records {
        h.add(quantize(r).integrated_score)?;
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseBias {
    pub negative: u64,
    pub neutral: u64,
    pub positive: u64,
}

/// Collapses a 9-bin grid histogram into negative / zero / positive counts.
pub fn coarse_bias(h: &OpinionHistogram) -> Result<CoarseBias> {
    if !is_grid_histogram(h) {
        return Err(Error::Config("coarse bias needs the 9-point grid histogram".into()));
    }
    let mid = GRID_POINTS / 2;
    Ok(CoarseBias {
        negative: h.counts[..mid].iter().sum(),
        neutral: h.counts[mid],
        positive: h.counts[mid + 1..].iter().sum(),
    })
}

/// Per-component histograms (`neg`, `neu`, `pos`) on `[0, 1]`.
pub fn component_histograms(records: &[SentimentRecord], n_bins: usize) -> Result<[OpinionHistogram; 3]> {
    let mut hs = [
        OpinionHistogram::empty(0.0, 1.0, n_bins)?,
        OpinionHistogram::empty(0.0, 1.0, n_bins)?,
        OpinionHistogram::empty(0.0, 1.0, n_bins)?,
    ];
    for r in records {
        hs[0].add(r.neg)?;
        hs[1].add(r.neu)?;
        hs[2].add(r.pos)?;
    }
    Ok(hs)
}

pub fn is_grid_histogram(h: &OpinionHistogram) -> bool {
    let g = integrated_histogram();
    h.n_bins == g.n_bins && h.lo == g.lo && h.hi == g.hi
}

fn grid_score(k: usize) -> f64 {
    (k as f64 - (GRID_POINTS / 2) as f64) * GRID_STEP + 0.0
}

/// Writes a grid histogram as `grid_score,integrated_score,count`.
pub fn write_grid_csv<W: Write>(h: &OpinionHistogram, out: W) -> Result<()> {
    if !is_grid_histogram(h) {
        return Err(Error::Config("grid CSV needs the 9-point grid histogram".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(GRID_CSV_HEADER).map_err(fmt)?;
    for k in 0..GRID_POINTS {
        let g = grid_score(k);
        w.write_record([g.to_string(), (g + 1.0).to_string(), h.counts[k].to_string()])
            .map_err(fmt)?;
    }
    w.flush().map_err(|e| Error::io("<grid csv>", e))
}

pub fn read_grid_csv<R: Read>(input: R) -> Result<OpinionHistogram> {
    let mut rdr = csv::Reader::from_reader(input);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    let header = rdr.headers().map_err(fmt)?.clone();
    if header.iter().collect::<Vec<_>>() != GRID_CSV_HEADER {
        return Err(Error::Format(format!(
            "grid histogram header must be '{}'",
            GRID_CSV_HEADER.join(",")
        )));
    }
    let mut h = integrated_histogram();
    let mut seen = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(fmt)?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |why: &str| Error::Format(format!("grid histogram line {line}: {why}"));
        if rec.len() != 3 {
            return Err(bad("expected 3 fields"));
        }
        if seen >= GRID_POINTS {
            return Err(bad("more than 9 grid rows"));
        }
        let g: f64 = rec[0].trim().parse().map_err(|_| bad("bad grid_score"))?;
        let i: f64 = rec[1].trim().parse().map_err(|_| bad("bad integrated_score"))?;
        let c: u64 = rec[2].trim().parse().map_err(|_| bad("bad count"))?;
        if g != grid_score(seen) || i != g + 1.0 {
            return Err(bad("grid values out of order"));
        }
        h.counts[seen] = c;
        seen += 1;
    }
    if seen != GRID_POINTS {
        return Err(Error::Format(format!("grid histogram has {seen} rows, expected 9")));
    }
    h.total = h.binned();
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(neg: f64, neu: f64, pos: f64) -> SentimentRecord {
        SentimentRecord::new("c", neg, neu, pos).unwrap()
    }

    #[test]
    fn quantize_examples() {
        let q = quantize(&rec(1.0, 0.0, 0.0));
        assert_eq!((q.raw_score, q.grid_score, q.integrated_score), (-1.0, -1.0, 0.0));
        let q = quantize(&rec(0.0, 1.0, 0.0));
        assert_eq!((q.raw_score, q.grid_score, q.integrated_score), (0.0, 0.0, 1.0));
        let q = quantize(&rec(0.2, 0.3, 0.5));
        assert!((q.raw_score - 0.3).abs() < 1e-15);
        assert_eq!((q.grid_score, q.integrated_score), (0.25, 1.25));
    }

    #[test]
    fn ties_go_toward_zero() {
        assert_eq!(snap_to_grid(0.125), 0.0);
        assert_eq!(snap_to_grid(-0.125), 0.0);
        assert_eq!(snap_to_grid(0.375), 0.25);
        assert_eq!(snap_to_grid(-0.875), -0.75);
        assert_eq!(snap_to_grid(0.126), 0.25);
        assert_eq!(snap_to_grid(-0.1).to_bits(), 0.0f64.to_bits());
        assert_eq!(snap_to_grid(7.0), 1.0);
    }

    #[test]
    fn grid_values_are_fixed_points() {
        for k in 0..GRID_POINTS {
            let g = grid_score(k);
            assert_eq!(snap_to_grid(g), g);
            assert_eq!(quantize_score(g).integrated_score - 1.0, g);
        }
    }

    #[test]
    fn parse_accepts_and_rejects() {
        let text = "comment_id,neg,neu,pos\nc1,0.0,1.0,0.0\nc2,0.5,0.5,0.5\nc3,-0.1,1.0,0.1\nc4,x,1,0\nc5,0.1,0.9\n";
        let out = parse_records(text.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(out.records, vec![rec(0.0, 1.0, 0.0)].into_iter().map(|mut r| {
            r.comment_id = "c1".into();
            r
        }).collect::<Vec<_>>());
        let lines: Vec<u64> = out.diagnostics.iter().map(|d| d.line).collect();
        assert_eq!(lines, [3, 4, 5, 6]);
        assert!(out.diagnostics[0].reason.contains("sum"));
    }

    #[test]
    fn parse_crlf_and_renormalize() {
        let text = "comment_id,neg,neu,pos\r\nc1,0.2,0.2,0.2\r\nc2,0.25,0.5,0.25\r\n";
        let strict = parse_records(text.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(strict.records.len(), 1);
        assert_eq!(strict.records[0].comment_id, "c2");
        assert_eq!(strict.diagnostics[0].line, 2);
        let lenient = parse_records(text.as_bytes(), ParseOptions { renormalize: true }).unwrap();
        assert_eq!(lenient.records.len(), 2);
        assert!((lenient.records[0].neu - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn parse_requires_header() {
        assert!(matches!(
            parse_records("c1,0,1,0\n".as_bytes(), ParseOptions::default()),
            Err(Error::Format(_))
        ));
        assert!(parse_records("".as_bytes(), ParseOptions::default()).is_err());
    }

    #[test]
    fn empirical_examples() {
        let h = empirical_distribution(&vec![rec(0.0, 1.0, 0.0); 10]).unwrap();
        assert_eq!(h.counts, [0, 0, 0, 0, 10, 0, 0, 0, 0]);
        let mut mix = vec![rec(0.0, 0.0, 1.0); 5];
        mix.extend(vec![rec(1.0, 0.0, 0.0); 5]);
        let h = empirical_distribution(&mix).unwrap();
        assert_eq!(h.counts, [5, 0, 0, 0, 0, 0, 0, 0, 5]);
        assert_eq!(h.total, 10);
        let bias = coarse_bias(&h).unwrap();
        assert_eq!((bias.negative, bias.neutral, bias.positive), (5, 0, 5));
        assert!(empirical_distribution(&[]).is_err());
    }

    #[test]
    fn component_histograms_on_unit_interval() {
        let hs = component_histograms(&[rec(0.0, 1.0, 0.0), rec(0.5, 0.25, 0.25)], 4).unwrap();
        assert_eq!(hs[0].counts, [1, 0, 1, 0]);
        assert_eq!(hs[1].counts, [0, 1, 0, 1]);
        assert_eq!(hs[2].counts, [1, 1, 0, 0]);
    }

    #[test]
    fn grid_csv_round_trip() {
        let h = empirical_distribution(&[rec(0.0, 1.0, 0.0), rec(0.6, 0.4, 0.0)]).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&h, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "grid_score,integrated_score,count\n-1,0,0\n-0.75,0.25,0\n-0.5,0.5,1\n-0.25,0.75,0\n0,1,1\n0.25,1.25,0\n0.5,1.5,0\n0.75,1.75,0\n1,2,0\n"
        );
        assert_eq!(read_grid_csv(&buf[..]).unwrap(), h);
    }
}
