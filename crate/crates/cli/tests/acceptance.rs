//! Acceptance gate: every release criterion as one test, each printing a
//! `criterion N (...): PASS` line on success.
//!
//! The default corpus is generated once through the real CLI binary (twice,
//! at different thread counts, for the determinism criterion) and shared by
//! the data-quality criteria; queueing fidelity gets its own simulation
//! pass. Tolerances live next to each criterion.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use eaf_core::analysis::{analyze, load_records, metric_value, LoadedDataset, QualityReport};
use eaf_core::chaos::Side;
use eaf_core::dataset::{load_dataset, read_trace, DatasetHandle, CSV_HEADER};
use eaf_core::perfmodel::des_oracle;
use eaf_core::queueing::sojourn_quantile_s;
use eaf_core::rng::derive_stream;
use eaf_core::stats::quantile_sorted;
use eaf_core::Real;

fn eaf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eaf"))
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const CORPUS_CONFIGS: [&str; 5] = [
    "face_detection_recognition.yaml",
    "predictive_maintenance.yaml",
    "location_retrieval_r1.yaml",
    "location_retrieval_r2.yaml",
    "location_retrieval_r3.yaml",
];

struct Fixture {
    _dir: tempfile::TempDir,
    root_single: PathBuf,
    root_multi: PathBuf,
    handle: DatasetHandle,
    dataset: LoadedDataset,
    report: QualityReport,
    corpus_elapsed: Duration,
}

fn generate_corpus(out: &Path, threads: u32) -> Duration {
    let mut cmd = eaf();
    cmd.arg("generate");
    for name in CORPUS_CONFIGS {
        cmd.arg("--config").arg(configs_dir().join(name));
    }
    cmd.arg("--out").arg(out);
    cmd.arg("--seed").arg("42");
    cmd.arg("--threads").arg(threads.to_string());
    let started = Instant::now();
    let output = cmd.output().expect("eaf binary runs");
    let elapsed = started.elapsed();
    assert!(
        output.status.success(),
        "generate failed (threads={threads}): {}",
        String::from_utf8_lossy(&output.stderr)
    );
    elapsed
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let root_single = dir.path().join("corpus-t1");
        let root_multi = dir.path().join("corpus-t4");
        let single_elapsed = generate_corpus(&root_single, 1);
        generate_corpus(&root_multi, 4);
        let analysis_started = Instant::now();
        let handle = load_dataset(&root_single).expect("generated corpus loads");
        let dataset = load_records(&handle).expect("traces parse");
        let report = analyze(&handle).expect("analysis succeeds");
        let corpus_elapsed = single_elapsed + analysis_started.elapsed();
        Fixture {
            _dir: dir,
            root_single,
            root_multi,
            handle,
            dataset,
            report,
            corpus_elapsed,
        }
    })
}

fn median(mut values: Vec<Real>) -> Real {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile_sorted(&values, 0.5)
}

fn trace_metric(ds: &LoadedDataset, app: &str, ms: &str, metric: &str, label: u8) -> Vec<Real> {
    let trace = ds
        .traces
        .iter()
        .find(|t| t.entry.app == app && t.entry.microservice == ms)
        .unwrap_or_else(|| panic!("trace {app}/{ms} missing"));
    trace
        .records
        .iter()
        .filter(|r| r.label == label)
        .map(|r| metric_value(r, metric))
        .collect()
}

#[test]
fn criterion_1_single_run_cli_generation() {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let output = eaf()
        .arg("generate")
        .arg("--config")
        .arg(configs_dir().join("location_retrieval.yaml"))
        .arg("--out")
        .arg(dir.path().join("ds"))
        .arg("--seed")
        .arg("42")
        .output()
        .expect("eaf binary runs");
    let elapsed = started.elapsed();
    assert!(
        output.status.success(),
        "generate failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let root = PathBuf::from(String::from_utf8(output.stdout).unwrap().trim());
    assert!(
        root.join("manifest.json").is_file(),
        "stdout must print the dataset root"
    );
    let trace = root.join("location_retrieval/location_service.csv");
    let records = read_trace(&trace).expect("trace parses strictly");
    assert_eq!(records.len(), 1_800, "3 h + 2 h at 10 s windows");
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    assert!(
        elapsed < Duration::from_secs(5),
        "single run took {elapsed:?}, budget 5 s"
    );
    println!(
        "criterion 1 (single-run CLI generation, 1800 windows in {:.2}s): PASS",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_2_corpus_anomaly_ratio() {
    let fx = fixture();
    assert_eq!(fx.report.records_total, 30_600, "corpus window count");
    let ratio = fx.report.anomaly_ratio;
    assert!(
        (0.04..=0.06).contains(&ratio),
        "anomaly ratio {ratio:.4} outside [0.04, 0.06]"
    );
    assert!(
        fx.corpus_elapsed < Duration::from_secs(60),
        "corpus generation + analysis took {:?}, budget 60 s",
        fx.corpus_elapsed
    );
    println!(
        "criterion 2 (corpus anomaly ratio {ratio:.4} in [0.04, 0.06], {:.1}s): PASS",
        fx.corpus_elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_3_collinearity_structure() {
    let fx = fixture();
    let corr = &fx.report.correlation;
    for (a, b) in [
        ("latency_p50", "latency_p90"),
        ("latency_p90", "latency_p99"),
        ("request_throughput", "tx_bytes_per_ns"),
        ("total_disk_read_throughput", "total_disk_write_throughput"),
        ("total_disk_write_throughput", "rx_bytes_per_ns"),
    ] {
        let r = corr.r(a, b);
        assert!(r > 0.9, "r({a}, {b}) = {r:.4} not above 0.9");
    }
    assert!(
        corr.degenerate.is_empty(),
        "degenerate: {:?}",
        corr.degenerate
    );
    let expected = [
        "cpu_usage",
        "rss",
        "rx_bytes_per_ns",
        "vsize",
        "request_throughput",
        "latency_p50",
    ];
    assert_eq!(
        fx.report.shortlist, expected,
        "shortlist must be exactly the six group representatives"
    );
    println!("criterion 3 (collinear groups present, 11 metrics -> 6 representatives): PASS");
}

#[test]
fn criterion_4_workload_class_separation() {
    let fx = fixture();
    let hci = ["preprocessor", "face_detector", "face_recognizer"];
    let mci = ["emergency_event_detection", "missing_data_imputation"];
    let mut p50 = Vec::new();
    let mut cpu = Vec::new();
    let mut rx = Vec::new();
    let mut rss = Vec::new();
    for trace in &fx.dataset.traces {
        let (app, ms) = (&trace.entry.app, &trace.entry.microservice);
        let med = |metric: &str| median(trace_metric(&fx.dataset, app, ms, metric, 0));
        p50.push((ms.clone(), med("latency_p50")));
        cpu.push((ms.clone(), med("cpu_usage")));
        rx.push((ms.clone(), med("rx_bytes_per_ns")));
        rss.push((ms.clone(), med("rss")));
    }
    let min_over = |rows: &[(String, Real)], set: &[&str], inside: bool| {
        rows.iter()
            .filter(|(ms, _)| set.contains(&ms.as_str()) == inside)
            .map(|&(_, v)| v)
            .fold(Real::INFINITY, Real::min)
    };
    let max_over = |rows: &[(String, Real)], set: &[&str], inside: bool| {
        rows.iter()
            .filter(|(ms, _)| set.contains(&ms.as_str()) == inside)
            .map(|&(_, v)| v)
            .fold(Real::NEG_INFINITY, Real::max)
    };

    let hci_min_p50 = min_over(&p50, &hci, true);
    let rest_max_p50 = max_over(&p50, &hci, false);
    assert!(
        hci_min_p50 > rest_max_p50,
        "compute-heavy p50 {hci_min_p50:.1} must exceed the rest's {rest_max_p50:.1}"
    );

    let top_cpu = cpu
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    let top_rx = rx
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    assert_eq!(top_cpu.0, "preprocessor", "hottest CPU median");
    assert_eq!(top_rx.0, "preprocessor", "largest ingest median");

    let ci: Vec<&str> = hci.iter().chain(mci.iter()).copied().collect();
    let ci_min_rss = min_over(&rss, &ci, true);
    let rest_max_rss = max_over(&rss, &ci, false);
    assert!(
        ci_min_rss > rest_max_rss,
        "compute-intensive rss {ci_min_rss:.3e} must exceed the rest's {rest_max_rss:.3e}"
    );
    println!("criterion 4 (QoS-class separation in latency, cpu, rx, rss medians): PASS");
}

#[test]
fn criterion_5_anomalies_overlap_yet_shift() {
    let fx = fixture();
    let app = "face_detection_recognition";
    let ms = "face_detector";
    let overlap = fx
        .report
        .overlaps
        .iter()
        .find(|o| o.app == app && o.microservice == ms && o.metric == "cpu_usage")
        .expect("overlap entry for the hog target");
    assert!(
        overlap.overlap > 0.10,
        "cpu_usage overlap {:.3} must stay above 0.10 (not trivially separable)",
        overlap.overlap
    );

    let normal_p90 = median(trace_metric(&fx.dataset, app, ms, "latency_p90", 0));
    let trace = fx
        .dataset
        .traces
        .iter()
        .find(|t| t.entry.app == app && t.entry.microservice == ms)
        .unwrap();
    let hog_windows: Vec<Real> = trace
        .records
        .iter()
        .filter(|r| r.anomaly_kind == Some(eaf_core::chaos::AnomalyKind::CpuHog))
        .map(|r| r.latency_p90)
        .collect();
    assert!(
        hog_windows.len() >= 50,
        "too few hog windows: {}",
        hog_windows.len()
    );
    let exceed =
        hog_windows.iter().filter(|&&v| v > normal_p90).count() as Real / hog_windows.len() as Real;
    assert!(
        exceed >= 0.90,
        "latency_p90 exceeded its normal median in only {:.1}% of hog windows",
        exceed * 100.0
    );
    println!(
        "criterion 5 (cpu-hog subtle on cpu_usage, overlap {:.2}, yet p90 shifted in {:.0}% of windows): PASS",
        overlap.overlap,
        exceed * 100.0
    );
}

#[test]
fn criterion_6_queueing_fidelity() {
    let cases: [(Real, Real); 10] = [
        (10.0, 0.10),
        (10.0, 0.25),
        (10.0, 0.40),
        (10.0, 0.55),
        (10.0, 0.70),
        (10.0, 0.80),
        (25.0, 0.30),
        (25.0, 0.60),
        (50.0, 0.50),
        (50.0, 0.75),
    ];
    for (case, &(mu, rho)) in cases.iter().enumerate() {
        let lambda = mu * rho;
        // Quantile-estimator spread grows like 1/(1−ρ)²; scale samples so
        // the 3 % tolerance sits several standard errors out.
        let n = ((2e5 / ((1.0 - rho) * (1.0 - rho))) as u64).max(300_000);
        let mut rng = derive_stream(7_000 + case as u64, &["acceptance", "mm1"], case as u64);
        let sim = des_oracle(mu, lambda, n, &mut rng).unwrap();
        for (q, observed) in [(0.50, sim.p50), (0.90, sim.p90), (0.99, sim.p99)] {
            let expected = sojourn_quantile_s(mu, lambda, q);
            let relative = (observed - expected).abs() / expected;
            assert!(
                relative <= 0.03,
                "case {case} (mu={mu}, rho={rho}) q{}: {relative:.4} off",
                (q * 100.0) as u32
            );
        }
    }

    let fx = fixture();
    for trace in &fx.dataset.traces {
        for rec in &trace.records {
            assert_eq!(
                rec.errors_per_ns, 0.0,
                "errors_per_ns must be identically zero"
            );
            assert!(
                rec.latency_p50 <= rec.latency_p90 && rec.latency_p90 <= rec.latency_p99,
                "latency quantiles out of order at t={} in {}/{}",
                rec.time,
                trace.entry.app,
                trace.entry.microservice
            );
        }
    }
    println!(
        "criterion 6 (closed-form quantiles within 3% of simulation on 10 loads; \
         quantile ordering holds in all {} windows): PASS",
        fx.report.records_total
    );
}

#[test]
fn criterion_7_determinism_and_label_consistency() {
    let fx = fixture();
    for entry in fx.handle.manifest.traces() {
        let a = std::fs::read(fx.root_single.join(&entry.path)).unwrap();
        let b = std::fs::read(fx.root_multi.join(&entry.path)).unwrap();
        assert_eq!(
            a, b,
            "{} differs between --threads 1 and --threads 4",
            entry.path
        );
    }
    let manifest_single = std::fs::read(fx.root_single.join("manifest.json")).unwrap();
    let manifest_multi = std::fs::read(fx.root_multi.join("manifest.json")).unwrap();
    assert_eq!(
        manifest_single, manifest_multi,
        "manifests must be byte-identical"
    );

    for run in &fx.handle.manifest.runs {
        let entry_ms = &run.config.app.entry;
        for trace_entry in &run.traces {
            let ms = &trace_entry.microservice;
            let records = read_trace(&fx.root_single.join(&trace_entry.path)).unwrap();
            assert_eq!(records.len() as u64, trace_entry.records);
            let g = run.granularity_s as Real;
            for rec in &records {
                let (t0, t1) = (rec.time, rec.time + g);
                let intersecting: Vec<_> = run
                    .schedule
                    .iter()
                    .filter(|e| {
                        let labels_this = match e.kind.side() {
                            Side::Server => e.target == *ms,
                            Side::Client => ms == entry_ms,
                        };
                        labels_this
                            && t0 < (e.start_s + e.duration_s) as Real
                            && (e.start_s as Real) < t1
                    })
                    .collect();
                assert_eq!(
                    rec.label == 1,
                    !intersecting.is_empty(),
                    "label mismatch at t={t0} in {}",
                    trace_entry.path
                );
                match rec.anomaly_kind {
                    None => assert!(intersecting.is_empty()),
                    Some(kind) => {
                        assert!(
                            intersecting.iter().any(|e| e.kind == kind),
                            "kind tag {kind} has no matching event at t={t0} in {}",
                            trace_entry.path
                        );
                        let earliest = intersecting.iter().map(|e| e.start_s).min().unwrap();
                        let unique_earliest: Vec<_> = intersecting
                            .iter()
                            .filter(|e| e.start_s == earliest)
                            .collect();
                        if unique_earliest.len() == 1 {
                            assert_eq!(
                                kind, unique_earliest[0].kind,
                                "kind must tag the earliest event"
                            );
                        }
                    }
                }
            }
        }
    }
    println!(
        "criterion 7 (byte-identical output across thread counts; labels match the manifest schedule): PASS"
    );
}
