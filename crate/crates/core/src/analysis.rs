//! Dataset quality analysis: anomaly ratio, metric collinearity, per-trace
//! distribution summaries, and normal-vs-anomalous histogram overlap.
//!
//! The report answers three questions about a generated dataset: is the
//! anomalous fraction in the intended band, do the structurally redundant
//! metric groups show up as near-perfect correlations (so a feature
//! shortlist can stand in for the full set), and are labeled windows
//! statistically overlapping enough with normal ones that detection is a
//! real problem rather than a threshold check.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{read_trace, DatasetError, DatasetHandle, TraceEntry};
use crate::perfmodel::TelemetryRecord;
use crate::stats::{five_number, overlap_coefficient, pearson, FiveNumber, DEFAULT_OVERLAP_BINS};
use crate::Real;

/// Absolute Pearson correlation above which two metrics are treated as
/// redundant.
pub const COLLINEARITY_THRESHOLD: Real = 0.9;

/// Metrics entering the correlation analysis, in CSV column order.
/// `errors_per_ns` is excluded: it is identically zero by design.
pub const CORRELATION_METRICS: [&str; 11] = [
    "total_disk_read_throughput",
    "total_disk_write_throughput",
    "rss",
    "vsize",
    "cpu_usage",
    "rx_bytes_per_ns",
    "tx_bytes_per_ns",
    "latency_p50",
    "latency_p90",
    "latency_p99",
    "request_throughput",
];

/// Preference order for picking one representative per redundant group.
/// Cheap, directly interpretable host metrics come first.
pub const SHORTLIST_PRIORITY: [&str; 11] = [
    "cpu_usage",
    "rss",
    "rx_bytes_per_ns",
    "vsize",
    "request_throughput",
    "latency_p50",
    "total_disk_read_throughput",
    "total_disk_write_throughput",
    "tx_bytes_per_ns",
    "latency_p90",
    "latency_p99",
];

/// Fraction of labeled windows required to overlap normal windows for an
/// anomaly to count as non-trivial.
pub const MIN_OVERLAP: Real = 0.10;

/// Errors from dataset analysis.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("dataset contains no records")]
    Empty,
}

/// One trace with its records in memory.
#[derive(Debug, Clone)]
pub struct LoadedTrace {
    pub entry: TraceEntry,
    pub records: Vec<TelemetryRecord>,
}

/// A fully loaded dataset.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub traces: Vec<LoadedTrace>,
}

impl LoadedDataset {
    pub fn total_records(&self) -> u64 {
        self.traces.iter().map(|t| t.records.len() as u64).sum()
    }

    pub fn anomalous_records(&self) -> u64 {
        self.traces
            .iter()
            .flat_map(|t| t.records.iter())
            .filter(|r| r.label == 1)
            .count() as u64
    }
}

/// Reads every trace listed in the manifest into memory, in parallel,
/// verifying record counts against the manifest.
pub fn load_records(handle: &DatasetHandle) -> Result<LoadedDataset, AnalysisError> {
    let entries: Vec<&TraceEntry> = handle.manifest.traces().collect();
    let traces = entries
        .par_iter()
        .map(|entry| {
            let path = handle.trace_path(entry);
            let records = read_trace(&path)?;
            if records.len() as u64 != entry.records {
                return Err(DatasetError::RecordCountMismatch {
                    path,
                    expected: entry.records,
                    found: records.len() as u64,
                });
            }
            Ok(LoadedTrace {
                entry: (*entry).clone(),
                records,
            })
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    Ok(LoadedDataset { traces })
}

/// Value of a named metric column on one record.
pub fn metric_value(rec: &TelemetryRecord, metric: &str) -> Real {
    match metric {
        "time" => rec.time,
        "total_disk_read_throughput" => rec.total_disk_read_throughput,
        "total_disk_write_throughput" => rec.total_disk_write_throughput,
        "rss" => rec.rss,
        "vsize" => rec.vsize,
        "cpu_usage" => rec.cpu_usage,
        "rx_bytes_per_ns" => rec.rx_bytes_per_ns,
        "tx_bytes_per_ns" => rec.tx_bytes_per_ns,
        "latency_p50" => rec.latency_p50,
        "latency_p90" => rec.latency_p90,
        "latency_p99" => rec.latency_p99,
        "request_throughput" => rec.request_throughput,
        "errors_per_ns" => rec.errors_per_ns,
        other => panic!("unknown metric `{other}`"),
    }
}

/// Fraction of records labeled anomalous.
pub fn anomaly_ratio(ds: &LoadedDataset) -> Result<Real, AnalysisError> {
    let total = ds.total_records();
    if total == 0 {
        return Err(AnalysisError::Empty);
    }
    Ok(ds.anomalous_records() as Real / total as Real)
}

/// Pearson correlation matrix over [`CORRELATION_METRICS`], pooled across
/// every record of every trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub metrics: Vec<String>,
    /// Row-major; `values[i][j]` is r(metrics\[i\], metrics\[j\]).
    pub values: Vec<Vec<Real>>,
    /// Metrics with zero pooled variance; their correlations are reported
    /// as 0 and flagged here instead of being dropped silently.
    pub degenerate: Vec<String>,
}

impl CorrelationMatrix {
    /// Correlation between two metrics by name.
    pub fn r(&self, a: &str, b: &str) -> Real {
        let ia = self.index_of(a);
        let ib = self.index_of(b);
        self.values[ia][ib]
    }

    fn index_of(&self, metric: &str) -> usize {
        self.metrics
            .iter()
            .position(|m| m == metric)
            .unwrap_or_else(|| panic!("metric `{metric}` not in correlation matrix"))
    }
}

/// Computes the pooled correlation matrix and the redundancy shortlist.
///
/// Metrics whose absolute pairwise correlation exceeds
/// [`COLLINEARITY_THRESHOLD`] are grouped transitively (union-find); each
/// group contributes its highest-priority member per
/// [`SHORTLIST_PRIORITY`], and the shortlist lists representatives in
/// priority order.
#[allow(clippy::needless_range_loop)]
pub fn correlation_matrix(
    ds: &LoadedDataset,
) -> Result<(CorrelationMatrix, Vec<String>), AnalysisError> {
    if ds.total_records() == 0 {
        return Err(AnalysisError::Empty);
    }
    let n_metrics = CORRELATION_METRICS.len();
    let columns: Vec<Vec<Real>> = CORRELATION_METRICS
        .par_iter()
        .map(|metric| {
            ds.traces
                .iter()
                .flat_map(|t| t.records.iter())
                .map(|r| metric_value(r, metric))
                .collect()
        })
        .collect();
    let mut values = vec![vec![0.0 as Real; n_metrics]; n_metrics];
    let mut degenerate = Vec::new();
    for (i, column) in columns.iter().enumerate() {
        values[i][i] = 1.0;
        if pearson(column, column).is_none() {
            degenerate.push(CORRELATION_METRICS[i].to_owned());
        }
    }
    for i in 0..n_metrics {
        for j in (i + 1)..n_metrics {
            let r = pearson(&columns[i], &columns[j]).unwrap_or(0.0);
            values[i][j] = r;
            values[j][i] = r;
        }
    }

    let mut parent: Vec<usize> = (0..n_metrics).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for i in 0..n_metrics {
        for j in (i + 1)..n_metrics {
            if values[i][j].abs() > COLLINEARITY_THRESHOLD {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let priority = |metric: &str| {
        SHORTLIST_PRIORITY
            .iter()
            .position(|m| *m == metric)
            .expect("priority covers all correlation metrics")
    };
    let mut representatives: Vec<Option<usize>> = vec![None; n_metrics];
    for i in 0..n_metrics {
        let root = find(&mut parent, i);
        let better = match representatives[root] {
            None => true,
            Some(best) => priority(CORRELATION_METRICS[i]) < priority(CORRELATION_METRICS[best]),
        };
        if better {
            representatives[root] = Some(i);
        }
    }
    let mut shortlist: Vec<String> = representatives
        .into_iter()
        .flatten()
        .map(|i| CORRELATION_METRICS[i].to_owned())
        .collect();
    shortlist.sort_by_key(|m| priority(m));

    Ok((
        CorrelationMatrix {
            metrics: CORRELATION_METRICS.iter().map(|&m| m.to_owned()).collect(),
            values,
            degenerate,
        },
        shortlist,
    ))
}

/// Five-number summary of one metric on the normal windows of one trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionEntry {
    pub app: String,
    pub microservice: String,
    pub metric: String,
    pub summary: FiveNumber<Real>,
}

/// Five-number summaries per (trace, metric) over normal (label 0) windows.
pub fn distribution_stats(ds: &LoadedDataset) -> Vec<DistributionEntry> {
    ds.traces
        .par_iter()
        .flat_map_iter(|trace| {
            CORRELATION_METRICS.iter().filter_map(move |metric| {
                let values: Vec<Real> = trace
                    .records
                    .iter()
                    .filter(|r| r.label == 0)
                    .map(|r| metric_value(r, metric))
                    .collect();
                five_number(&values).map(|summary| DistributionEntry {
                    app: trace.entry.app.clone(),
                    microservice: trace.entry.microservice.clone(),
                    metric: (*metric).to_owned(),
                    summary,
                })
            })
        })
        .collect()
}

/// Histogram overlap between normal and anomalous windows of one metric on
/// one trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapEntry {
    pub app: String,
    pub microservice: String,
    pub metric: String,
    pub labeled_windows: u64,
    pub overlap: Real,
}

/// Normal-vs-anomalous overlap per (trace, metric), for traces that have
/// at least one labeled window.
pub fn overlap_by_microservice(ds: &LoadedDataset, bins: usize) -> Vec<OverlapEntry> {
    ds.traces
        .par_iter()
        .flat_map_iter(move |trace| {
            let normal: Vec<&TelemetryRecord> =
                trace.records.iter().filter(|r| r.label == 0).collect();
            let anomalous: Vec<&TelemetryRecord> =
                trace.records.iter().filter(|r| r.label == 1).collect();
            let labeled = anomalous.len() as u64;
            CORRELATION_METRICS.iter().filter_map(move |metric| {
                if normal.is_empty() || anomalous.is_empty() {
                    return None;
                }
                let a: Vec<Real> = normal.iter().map(|r| metric_value(r, metric)).collect();
                let b: Vec<Real> = anomalous.iter().map(|r| metric_value(r, metric)).collect();
                overlap_coefficient(&a, &b, bins).map(|overlap| OverlapEntry {
                    app: trace.entry.app.clone(),
                    microservice: trace.entry.microservice.clone(),
                    metric: (*metric).to_owned(),
                    labeled_windows: labeled,
                    overlap,
                })
            })
        })
        .collect()
}

/// Pass/fail summary of the dataset-quality checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdicts {
    /// Anomalous fraction lies in [0.04, 0.06].
    pub ratio_in_band: bool,
    /// Every structurally redundant pair correlates above the threshold:
    /// p50–p90, p90–p99, throughput–tx, disk read–write, disk write–rx.
    pub collinearity_groups_present: bool,
    /// Every trace with labeled windows keeps some metric overlap above
    /// [`MIN_OVERLAP`] — anomalies are not trivially separable.
    pub non_trivial_anomalies: bool,
}

impl Verdicts {
    pub fn all_pass(&self) -> bool {
        self.ratio_in_band && self.collinearity_groups_present && self.non_trivial_anomalies
    }
}

/// The full quality report written by `analyze`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityReport {
    pub records_total: u64,
    pub records_anomalous: u64,
    pub anomaly_ratio: Real,
    pub collinearity_threshold: Real,
    pub overlap_bins: usize,
    pub correlation: CorrelationMatrix,
    pub shortlist: Vec<String>,
    pub distributions: Vec<DistributionEntry>,
    pub overlaps: Vec<OverlapEntry>,
    pub verdicts: Verdicts,
}

/// Structurally redundant metric pairs expected to correlate above the
/// threshold in any generated dataset.
pub const EXPECTED_REDUNDANT_PAIRS: [(&str, &str); 5] = [
    ("latency_p50", "latency_p90"),
    ("latency_p90", "latency_p99"),
    ("request_throughput", "tx_bytes_per_ns"),
    ("total_disk_read_throughput", "total_disk_write_throughput"),
    ("total_disk_write_throughput", "rx_bytes_per_ns"),
];

/// Runs the full analysis over a dataset.
pub fn analyze(handle: &DatasetHandle) -> Result<QualityReport, AnalysisError> {
    let ds = load_records(handle)?;
    let ratio = anomaly_ratio(&ds)?;
    let (correlation, shortlist) = correlation_matrix(&ds)?;
    let distributions = distribution_stats(&ds);
    let overlaps = overlap_by_microservice(&ds, DEFAULT_OVERLAP_BINS);

    let collinearity_groups_present = EXPECTED_REDUNDANT_PAIRS
        .iter()
        .all(|(a, b)| correlation.r(a, b) > COLLINEARITY_THRESHOLD);
    let mut non_trivial = true;
    for trace in &ds.traces {
        if !trace.records.iter().any(|r| r.label == 1) {
            continue;
        }
        let best = overlaps
            .iter()
            .filter(|o| o.app == trace.entry.app && o.microservice == trace.entry.microservice)
            .map(|o| o.overlap)
            .fold(0.0 as Real, Real::max);
        if best <= MIN_OVERLAP {
            non_trivial = false;
        }
    }
    let verdicts = Verdicts {
        ratio_in_band: (0.04..=0.06).contains(&ratio),
        collinearity_groups_present,
        non_trivial_anomalies: non_trivial,
    };
    Ok(QualityReport {
        records_total: ds.total_records(),
        records_anomalous: ds.anomalous_records(),
        anomaly_ratio: ratio,
        collinearity_threshold: COLLINEARITY_THRESHOLD,
        overlap_bins: DEFAULT_OVERLAP_BINS,
        correlation,
        shortlist,
        distributions,
        overlaps,
        verdicts,
    })
}

impl fmt::Display for QualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn mark(ok: bool) -> &'static str {
            if ok {
                "pass"
            } else {
                "FAIL"
            }
        }
        writeln!(
            f,
            "records: {} total, {} anomalous (ratio {:.4})",
            self.records_total, self.records_anomalous, self.anomaly_ratio
        )?;
        writeln!(f, "shortlist: {}", self.shortlist.join(", "))?;
        if !self.correlation.degenerate.is_empty() {
            writeln!(
                f,
                "degenerate (constant) metrics: {}",
                self.correlation.degenerate.join(", ")
            )?;
        }
        writeln!(
            f,
            "verdict ratio_in_band:               {}",
            mark(self.verdicts.ratio_in_band)
        )?;
        writeln!(
            f,
            "verdict collinearity_groups_present: {}",
            mark(self.verdicts.collinearity_groups_present)
        )?;
        write!(
            f,
            "verdict non_trivial_anomalies:       {}",
            mark(self.verdicts.non_trivial_anomalies)
        )
    }
}
