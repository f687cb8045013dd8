//! On-disk dataset layout: CSV trace files plus a JSON manifest.
//!
//! A dataset root contains one directory per application, one CSV per
//! microservice (`<root>/<app>/<microservice>.csv`), and a `manifest.json`
//! recording tool version, units, per-run configuration, placement,
//! schedule, and the trace list. Floats are written with six significant
//! digits in a canonical form, so re-serializing a parsed file reproduces
//! it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chaos::{AnomalyEvent, AnomalyKind};
use crate::config::GenerationConfig;
use crate::perfmodel::TelemetryRecord;
use crate::topology::Placement;
use crate::{Real, TOOL_NAME, VERSION};

/// The exact trace header, in column order.
pub const CSV_HEADER: &str = "time,total_disk_read_throughput,total_disk_write_throughput,\
rss,vsize,cpu_usage,rx_bytes_per_ns,tx_bytes_per_ns,latency_p50,latency_p90,latency_p99,\
request_throughput,errors_per_ns,label,anomaly_kind";

/// Manifest file name inside a dataset root.
pub const MANIFEST_NAME: &str = "manifest.json";

/// Errors from reading or writing dataset files.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: header mismatch: expected the canonical {expected_columns}-column header, found `{found}`")]
    HeaderMismatch {
        path: PathBuf,
        found: String,
        expected_columns: usize,
    },
    #[error("{path}:{line}: malformed row: {message}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("records are not time-ordered with equal spacing (record {index})")]
    UnorderedRecords { index: usize },
    #[error("no manifest at {0}; is this a dataset root?")]
    ManifestMissing(PathBuf),
    #[error("{path}: manifest does not parse: {message}")]
    ManifestInvalid { path: PathBuf, message: String },
    #[error("manifest lists a missing trace file: {0}")]
    MissingTrace(PathBuf),
    #[error("{path}: manifest promises {expected} records, file holds {found}")]
    RecordCountMismatch {
        path: PathBuf,
        expected: u64,
        found: u64,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Formats a metric value with six significant digits.
///
/// Fixed notation while the decimal exponent lies in [-4, 6), scientific
/// otherwise (`6.28534e8`); trailing fractional zeros are trimmed, so the
/// format is canonical: parsing a formatted value and formatting it again
/// yields the same text.
pub fn format_metric(x: Real) -> String {
    assert!(x.is_finite(), "metrics must be finite, got {x}");
    if x == 0.0 {
        return "0".to_owned();
    }
    let sci = format!("{x:.5e}");
    let (_, exp) = sci.split_once('e').expect("exponent in scientific form");
    let exp: i32 = exp.parse().expect("numeric exponent");
    if !(-4..6).contains(&exp) {
        let (mantissa, _) = sci.split_once('e').unwrap();
        format!("{}e{exp}", trim_fraction(mantissa))
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn format_row(out: &mut String, rec: &TelemetryRecord) {
    let metrics = [
        rec.time,
        rec.total_disk_read_throughput,
        rec.total_disk_write_throughput,
        rec.rss,
        rec.vsize,
        rec.cpu_usage,
        rec.rx_bytes_per_ns,
        rec.tx_bytes_per_ns,
        rec.latency_p50,
        rec.latency_p90,
        rec.latency_p99,
        rec.request_throughput,
        rec.errors_per_ns,
    ];
    for value in metrics {
        out.push_str(&format_metric(value));
        out.push(',');
    }
    let _ = write!(out, "{},", rec.label);
    if let Some(kind) = rec.anomaly_kind {
        out.push_str(kind.as_str());
    }
    out.push('\n');
}

/// Serializes records to canonical CSV text.
///
/// Records must be time-ordered with equal spacing; a violation is an
/// [`DatasetError::UnorderedRecords`] error naming the first bad record.
pub fn render_trace(records: &[TelemetryRecord]) -> Result<String, DatasetError> {
    if records.len() >= 2 {
        let step = records[1].time - records[0].time;
        if !(step > 0.0 && step.is_finite()) {
            return Err(DatasetError::UnorderedRecords { index: 1 });
        }
        for (i, pair) in records.windows(2).enumerate().skip(1) {
            if pair[1].time - pair[0].time != step {
                return Err(DatasetError::UnorderedRecords { index: i + 1 });
            }
        }
    }
    let mut out = String::with_capacity(records.len() * 128 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for rec in records {
        format_row(&mut out, rec);
    }
    Ok(out)
}

/// Writes one trace file, creating parent directories as needed.
pub fn write_trace(path: &Path, records: &[TelemetryRecord]) -> Result<(), DatasetError> {
    let text = render_trace(records)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = BufWriter::new(file);
    writer
        .write_all(text.as_bytes())
        .and_then(|()| writer.flush())
        .map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Reads one trace file back into records.
///
/// Parsing is strict: the header must match [`CSV_HEADER`] exactly, every
/// row must carry 15 fields, metrics must be finite and non-negative, the
/// label must be 0 or 1, and the kind tag must be empty or a known kind.
pub fn read_trace(path: &Path) -> Result<Vec<TelemetryRecord>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != CSV_HEADER {
        return Err(DatasetError::HeaderMismatch {
            path: path.to_owned(),
            found: header.to_owned(),
            expected_columns: CSV_HEADER.split(',').count(),
        });
    }
    let malformed = |line: usize, message: String| DatasetError::MalformedRow {
        path: path.to_owned(),
        line,
        message,
    };
    let mut records = Vec::new();
    for (i, row) in lines.enumerate() {
        let line = i + 2;
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 15 {
            return Err(malformed(
                line,
                format!("expected 15 fields, found {}", fields.len()),
            ));
        }
        let mut metrics = [0.0 as Real; 13];
        for (slot, (field, name)) in metrics
            .iter_mut()
            .zip(fields.iter().zip(CSV_HEADER.split(',')))
        {
            let value: Real = field
                .parse()
                .map_err(|_| malformed(line, format!("{name}: not a number: `{field}`")))?;
            if !value.is_finite() || value < 0.0 {
                return Err(malformed(
                    line,
                    format!("{name}: must be finite and non-negative, got {field}"),
                ));
            }
            *slot = value;
        }
        let label = match fields[13] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(malformed(
                    line,
                    format!("label: must be 0 or 1, got `{other}`"),
                ))
            }
        };
        let anomaly_kind = if fields[14].is_empty() {
            None
        } else {
            Some(
                AnomalyKind::from_str(fields[14])
                    .map_err(|e| malformed(line, format!("anomaly_kind: {e}")))?,
            )
        };
        records.push(TelemetryRecord {
            time: metrics[0],
            total_disk_read_throughput: metrics[1],
            total_disk_write_throughput: metrics[2],
            rss: metrics[3],
            vsize: metrics[4],
            cpu_usage: metrics[5],
            rx_bytes_per_ns: metrics[6],
            tx_bytes_per_ns: metrics[7],
            latency_p50: metrics[8],
            latency_p90: metrics[9],
            latency_p99: metrics[10],
            request_throughput: metrics[11],
            errors_per_ns: metrics[12],
            label,
            anomaly_kind,
        });
    }
    Ok(records)
}

/// One trace file listed in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub app: String,
    pub microservice: String,
    /// Path relative to the dataset root, with forward slashes.
    pub path: String,
    pub records: u64,
}

/// One generation run recorded in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub app: String,
    pub seed: u64,
    pub granularity_s: u64,
    pub config: GenerationConfig,
    pub placement: Placement,
    pub schedule: Vec<AnomalyEvent>,
    pub traces: Vec<TraceEntry>,
}

/// The dataset manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Unit of each emitted column.
    pub units: BTreeMap<String, String>,
    pub runs: Vec<RunRecord>,
}

impl Manifest {
    /// An empty manifest stamped with this build's tool name and version.
    pub fn new() -> Self {
        Manifest {
            tool: TOOL_NAME.to_owned(),
            version: VERSION.to_owned(),
            units: metric_units(),
            runs: Vec::new(),
        }
    }

    /// All trace entries across runs, in manifest order.
    pub fn traces(&self) -> impl Iterator<Item = &TraceEntry> {
        self.runs.iter().flat_map(|run| run.traces.iter())
    }
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest::new()
    }
}

/// Unit of every emitted column.
pub fn metric_units() -> BTreeMap<String, String> {
    [
        ("time", "s since run start, window-aligned"),
        ("total_disk_read_throughput", "bytes/s"),
        ("total_disk_write_throughput", "bytes/s"),
        ("rss", "bytes"),
        ("vsize", "bytes"),
        ("cpu_usage", "vCPUs (0..allocated)"),
        ("rx_bytes_per_ns", "bytes/ns"),
        ("tx_bytes_per_ns", "bytes/ns"),
        ("latency_p50", "ms"),
        ("latency_p90", "ms"),
        ("latency_p99", "ms"),
        ("request_throughput", "requests/s"),
        ("errors_per_ns", "errors/ns"),
        ("label", "0 normal, 1 anomalous"),
        ("anomaly_kind", "kind tag, empty when normal"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v.to_owned()))
    .collect()
}

/// Writes `manifest.json` under the dataset root and returns its path.
pub fn write_manifest(root: &Path, manifest: &Manifest) -> Result<PathBuf, DatasetError> {
    fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
    let path = root.join(MANIFEST_NAME);
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serialization");
    text.push('\n');
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// A located dataset: root directory, parsed manifest, and manifest path.
#[derive(Debug, Clone)]
pub struct DatasetHandle {
    pub root: PathBuf,
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

impl DatasetHandle {
    /// Absolute path of one trace file.
    pub fn trace_path(&self, entry: &TraceEntry) -> PathBuf {
        self.root.join(&entry.path)
    }
}

/// Opens a dataset root: parses the manifest and checks that every listed
/// trace file exists.
pub fn load_dataset(root: &Path) -> Result<DatasetHandle, DatasetError> {
    let manifest_path = root.join(MANIFEST_NAME);
    if !manifest_path.is_file() {
        return Err(DatasetError::ManifestMissing(root.to_owned()));
    }
    let text = fs::read_to_string(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| DatasetError::ManifestInvalid {
            path: manifest_path.clone(),
            message: e.to_string(),
        })?;
    for entry in manifest.traces() {
        let path = root.join(&entry.path);
        if !path.is_file() {
            return Err(DatasetError::MissingTrace(path));
        }
    }
    Ok(DatasetHandle {
        root: root.to_owned(),
        manifest,
        manifest_path,
    })
}
