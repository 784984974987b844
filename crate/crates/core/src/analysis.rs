//! Post-run summaries: binned distributions, gap clustering, moments and
//! distances between distributions.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-width histogram over `[lo, hi]`. Samples outside the range are
/// counted in the overflow counters, so `sum(counts) + out_of_range_low +
/// out_of_range_high == total`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionHistogram {
    pub lo: f64,
    pub hi: f64,
    pub n_bins: usize,
    pub counts: Vec<u64>,
    pub total: u64,
    pub out_of_range_low: u64,
    pub out_of_range_high: u64,
}

impl OpinionHistogram {
    pub fn empty(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InputDomain(format!("histogram needs finite lo < hi, got [{lo}, {hi}]")));
        }
        if n_bins == 0 {
            return Err(Error::InputDomain("histogram needs at least one bin".into()));
        }
        Ok(Self {
            lo,
            hi,
            n_bins,
            counts: vec![0; n_bins],
            total: 0,
            out_of_range_low: 0,
            out_of_range_high: 0,
        })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.n_bins as f64
    }

    /// Lower edge of bin `k`.
    pub fn bin_lo(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.bin_width()
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.bin_width()
    }

    pub fn add(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::InputDomain(format!("histogram sample is not finite ({x})")));
        }
        self.total += 1;
        if x < self.lo {
            self.out_of_range_low += 1;
        } else if x > self.hi {
            self.out_of_range_high += 1;
        } else {
            let k = ((x - self.lo) * self.n_bins as f64 / (self.hi - self.lo)).floor() as usize;
            self.counts[k.min(self.n_bins - 1)] += 1;
        }
        Ok(())
    }

    pub fn binned(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin counts divided by the binned total.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        let binned = self.binned();
        if binned == 0 {
            return Err(Error::InputDomain("histogram has no binned samples".into()));
        }
        Ok(self.counts.iter().map(|&c| c as f64 / binned as f64).collect())
    }

    fn same_binning(&self, other: &Self) -> bool {
        self.n_bins == other.n_bins && self.lo == other.lo && self.hi == other.hi
    }

    /// CSV with header `bin_lo,bin_hi,count`, one row per bin.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_lo", "bin_hi", "count"]).map_err(csv_err)?;
        for k in 0..self.n_bins {
            let hi = if k + 1 == self.n_bins { self.hi } else { self.bin_lo(k + 1) };
            w.write_record([self.bin_lo(k).to_string(), hi.to_string(), self.counts[k].to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<histogram csv>", e))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers().map_err(csv_err)?.clone();
        if header.iter().collect::<Vec<_>>() != ["bin_lo", "bin_hi", "count"] {
            return Err(Error::Format(format!(
                "histogram CSV header must be 'bin_lo,bin_hi,count', found '{}'",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows: Vec<(f64, f64, u64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = || Error::Format(format!("histogram CSV line {line}: malformed row"));
            rows.push((
                rec[0].trim().parse().map_err(|_| bad())?,
                rec[1].trim().parse().map_err(|_| bad())?,
                rec[2].trim().parse().map_err(|_| bad())?,
            ));
        }
        if rows.is_empty() {
            return Err(Error::Format("histogram CSV has no bins".into()));
        }
        let mut h = Self::empty(rows[0].0, rows[rows.len() - 1].1, rows.len())
            .map_err(|e| Error::Format(e.to_string()))?;
        let tol = 1e-9 * h.bin_width();
        for (k, &(lo, hi, count)) in rows.iter().enumerate() {
            let expect_hi = if k + 1 == h.n_bins { h.hi } else { h.bin_lo(k + 1) };
            if (lo - h.bin_lo(k)).abs() > tol || (hi - expect_hi).abs() > tol {
                return Err(Error::Format(format!("histogram CSV bin {k} is not on a uniform grid")));
            }
            h.counts[k] = count;
        }
        h.total = h.binned();
        Ok(h)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Bins `opinions` into `n_bins` equal bins on `[lo, hi]`. Sample `x` goes
/// to bin `floor((x - lo) * n_bins / (hi - lo))`; `x == hi` lands in the last bin.
pub fn histogram(opinions: &[f64], lo: f64, hi: f64, n_bins: usize) -> Result<OpinionHistogram> {
    let mut h = OpinionHistogram::empty(lo, hi, n_bins)?;
    for &x in opinions {
        h.add(x)?;
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub member_indices: Vec<usize>,
    pub centroid: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub clusters: Vec<Cluster>,
    pub gap_threshold: f64,
}

impl ClusterReport {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// CSV with header `cluster,size,centroid,width,members`; members are
    /// agent indices joined by `;`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cluster", "size", "centroid", "width", "members"])
            .map_err(csv_err)?;
        for (k, c) in self.clusters.iter().enumerate() {
            let members = c
                .member_indices
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                k.to_string(),
                c.member_indices.len().to_string(),
                c.centroid.to_string(),
                c.width.to_string(),
                members,
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<cluster csv>", e))
    }
}

/// Splits the sorted opinions wherever consecutive values are more than
/// `gap_threshold` apart. Ties in opinion keep ascending agent order.
pub fn detect_clusters(opinions: &[f64], gap_threshold: f64) -> Result<ClusterReport> {
    if !(gap_threshold.is_finite() && gap_threshold > 0.0) {
        return Err(Error::InputDomain(format!(
            "gap threshold must be finite and > 0, got {gap_threshold}"
        )));
    }
    if let Some(i) = opinions.iter().position(|x| !x.is_finite()) {
        return Err(Error::InputDomain(format!("opinion {i} is not finite")));
    }
    let mut order: Vec<usize> = (0..opinions.len()).collect();
    order.sort_by(|&a, &b| opinions[a].total_cmp(&opinions[b]).then(a.cmp(&b)));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<f64> = None;
    for &i in &order {
        let x = opinions[i];
        match (prev, groups.last_mut()) {
            (Some(p), Some(g)) if x - p <= gap_threshold => g.push(i),
            _ => groups.push(vec![i]),
        }
        prev = Some(x);
    }
    let clusters = groups
        .into_iter()
        .map(|members| {
            let vals = members.iter().map(|&i| opinions[i]);
            let centroid = vals.clone().sum::<f64>() / members.len() as f64;
            let first = opinions[members[0]];
            let last = opinions[members[members.len() - 1]];
            Cluster {
                member_indices: members,
                centroid,
                width: last - first,
            }
        })
        .collect();
    Ok(ClusterReport {
        clusters,
        gap_threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryMetrics {
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
}

pub fn summary_metrics(opinions: &[f64]) -> Result<SummaryMetrics> {
    if opinions.is_empty() {
        return Err(Error::InputDomain("summary metrics need at least one opinion".into()));
    }
    let n = opinions.len() as f64;
    let mean = opinions.iter().sum::<f64>() / n;
    let variance = opinions.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let min = opinions.iter().copied().fold(f64::INFINITY, f64::min);
    let max = opinions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SummaryMetrics {
        mean,
        variance,
        min,
        max,
        spread: max - min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramDistance {
    pub l1: f64,
    pub emd: f64,
}

/// L1 distance and 1-D earth mover's distance between two normalized
/// histograms on the same bin grid.
pub fn histogram_distance(a: &OpinionHistogram, b: &OpinionHistogram) -> Result<HistogramDistance> {
    if !a.same_binning(b) {
        return Err(Error::Config(format!(
            "histograms differ in binning: [{}, {}]x{} vs [{}, {}]x{}",
            a.lo, a.hi, a.n_bins, b.lo, b.hi, b.n_bins
        )));
    }
    let p = a.normalized()?;
    let q = b.normalized()?;
    let mut l1 = 0.0;
    let mut cdf_gap = 0.0;
    let mut emd = 0.0;
    for (x, y) in p.iter().zip(&q) {
        l1 += (x - y).abs();
        cdf_gap += x - y;
        emd += cdf_gap.abs();
    }
    Ok(HistogramDistance {
        l1,
        emd: emd * a.bin_width(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_boundary_rule() {
        let h = histogram(&[0.0, 0.5, 1.0], 0.0, 1.0, 2).unwrap();
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!((h.out_of_range_low, h.out_of_range_high, h.total), (0, 0, 3));
    }

    #[test]
    fn histogram_empty_and_point_mass() {
        let h = histogram(&[], 0.0, 1.0, 4).unwrap();
        assert_eq!(h.counts, vec![0; 4]);
        assert_eq!(h.total, 0);
        let h = histogram(&vec![0.3; 1000], 0.0, 1.0, 10).unwrap();
        assert_eq!(h.counts[3], 1000);
        assert_eq!(h.binned(), 1000);
    }

    #[test]
    fn histogram_overflow_and_errors() {
        let h = histogram(&[-0.1, 0.2, 1.5, 2.0], 0.0, 1.0, 5).unwrap();
        assert_eq!((h.out_of_range_low, h.out_of_range_high), (1, 2));
        assert_eq!(h.binned() + 3, h.total);
        assert!(histogram(&[f64::NAN], 0.0, 1.0, 2).is_err());
        assert!(histogram(&[], 1.0, 1.0, 2).is_err());
        assert!(histogram(&[], 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn clusters_examples() {
        let r = detect_clusters(&[0.10, 0.11, 0.90], 0.2).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r.clusters[0].centroid - 0.105).abs() < 1e-15);
        assert_eq!(r.clusters[1].centroid, 0.90);
        assert_eq!(r.clusters[0].member_indices, vec![0, 1]);

        let r = detect_clusters(&[0.4; 5], 0.1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.clusters[0].width, 0.0);

        let r = detect_clusters(&[2.0, 0.0, 1.0], 0.5).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.clusters[0].member_indices, vec![1]);
        assert_eq!(r.clusters[2].member_indices, vec![0]);

        assert!(detect_clusters(&[], 0.5).unwrap().is_empty());
        assert!(detect_clusters(&[1.0], 0.0).is_err());
    }

    #[test]
    fn metrics_examples() {
        let m = summary_metrics(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((m.mean, m.variance, m.spread), (1.0, 0.0, 0.0));
        let m = summary_metrics(&[0.0, 1.0]).unwrap();
        assert_eq!((m.mean, m.variance, m.spread), (0.5, 0.25, 1.0));
        let m = summary_metrics(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(m.mean, 0.5);
        assert!((m.variance - 1.0 / 6.0).abs() < 1e-15);
        assert!(summary_metrics(&[]).is_err());
    }

    #[test]
    fn distance_examples() {
        let a = histogram(&[0.1, 0.2], 0.0, 1.0, 2).unwrap();
        let b = histogram(&[0.7, 0.9], 0.0, 1.0, 2).unwrap();
        let d = histogram_distance(&a, &a).unwrap();
        assert_eq!((d.l1, d.emd), (0.0, 0.0));
        let d = histogram_distance(&a, &b).unwrap();
        assert_eq!((d.l1, d.emd), (2.0, 0.5));

        let u = histogram(&[0.1, 0.3, 0.6, 0.8], 0.0, 1.0, 4).unwrap();
        let d = histogram_distance(&u, &u).unwrap();
        assert_eq!((d.l1, d.emd), (0.0, 0.0));
    }

    #[test]
    fn distance_errors() {
        let a = histogram(&[0.1], 0.0, 1.0, 2).unwrap();
        let b = histogram(&[0.1], 0.0, 1.0, 3).unwrap();
        assert!(matches!(histogram_distance(&a, &b), Err(Error::Config(_))));
        let empty = histogram(&[], 0.0, 1.0, 2).unwrap();
        assert!(matches!(histogram_distance(&a, &empty), Err(Error::InputDomain(_))));
    }

    #[test]
    fn histogram_csv_round_trip() {
        let h = histogram(&[0.1, 0.2, 0.55, 0.95, 0.95], 0.0, 1.0, 4).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"bin_lo,bin_hi,count\n0,0.25,2\n"));
        assert_eq!(OpinionHistogram::read_csv(&buf[..]).unwrap(), h);
        assert!(OpinionHistogram::read_csv("a,b,c\n".as_bytes()).is_err());
    }

    #[test]
    fn cluster_csv() {
        let r = detect_clusters(&[0.0, 0.05, 1.0], 0.1).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "cluster,size,centroid,width,members\n0,2,0.025,0.05,0;1\n1,1,1,0,2\n"
        );
    }
}
