//! Run planning and dataset generation.
//!
//! A run takes one validated config and a seed, places the app, draws the
//! anomaly schedule, then generates every targeted microservice trace.
//! Each monitoring window derives its own named random streams from the
//! run seed, so output is byte-identical for a given (config, seed) no
//! matter how generation is parallelized; microservice traces are
//! generated concurrently and written in application order.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::appmodel::downstream_rate;
use crate::chaos::{build_schedule, client_shapes, effects_at, AnomalyEvent, ScheduleError};
use crate::config::GenerationConfig;
use crate::dataset::{
    write_manifest, write_trace, DatasetError, DatasetHandle, Manifest, RunRecord, TraceEntry,
};
use crate::perfmodel::{window_metrics, ServiceState, TelemetryRecord};
use crate::rng::derive_stream;
use crate::topology::{place, Placement, PlacementError};
use crate::workload::rate_at;
use crate::{Real, TOOL_NAME};

/// Errors from planning or running dataset generation.
#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("duplicate app id `{0}` across corpus runs; traces would overwrite each other")]
    DuplicateApp(String),
}

/// Everything a run needs beyond the config: placement, schedule, derived
/// per-microservice state, and per-unit entry-rate fan-out factors.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub seed: u64,
    pub placement: Placement,
    pub schedule: Vec<AnomalyEvent>,
    pub total_windows: u64,
    pub states: BTreeMap<String, ServiceState>,
    /// Arrival rate per microservice when the entry receives 1 request/s.
    pub rate_factors: BTreeMap<String, Real>,
}

/// Plans a run: places the application, draws the anomaly schedule from the
/// run's schedule stream, and precomputes per-microservice state.
pub fn plan(cfg: &GenerationConfig, seed: u64) -> Result<RunPlan, OrchestratorError> {
    let app = &cfg.app;
    let placement = place(app, &cfg.topology)?;
    let mut schedule_rng = derive_stream(seed, &[&app.id, "schedule"], 0);
    let schedule = build_schedule(
        &cfg.anomalies,
        cfg.normal_duration_s,
        cfg.anomaly_phase_duration_s,
        &mut schedule_rng,
    )?;
    let mut states = BTreeMap::new();
    for ms in &app.microservices {
        let network_ms = if ms.id == app.entry {
            placement.client_latency_ms(&cfg.topology, &app.entry)?
        } else {
            // Every well-formed non-entry microservice has a caller; a
            // disconnected one receives no load and the entry path is a
            // harmless stand-in.
            let callers = app.callers_of(&ms.id);
            let caller = callers.first().copied().unwrap_or(app.entry.as_str());
            placement.path_latency_ms(&cfg.topology, caller, &ms.id)?
        };
        states.insert(
            ms.id.clone(),
            ServiceState::for_microservice(ms, network_ms),
        );
    }
    Ok(RunPlan {
        seed,
        placement,
        schedule,
        total_windows: cfg.total_windows(),
        states,
        rate_factors: downstream_rate(app, 1.0),
    })
}

/// Generates the full trace of one microservice.
///
/// Window `w` covers `[w·g, (w+1)·g)`. The entry rate is sampled at the
/// window midpoint from the app-wide workload stream (shared across
/// microservices, so load comoves through the whole pipeline), anomaly
/// effects and labels come from interval intersection with the schedule,
/// and measurement noise comes from the per-microservice noise stream.
pub fn generate_trace(cfg: &GenerationConfig, plan: &RunPlan, ms_id: &str) -> Vec<TelemetryRecord> {
    let app = &cfg.app;
    let ms = app
        .microservice(ms_id)
        .expect("planned microservice exists");
    let state = &plan.states[ms_id];
    let factor = plan.rate_factors.get(ms_id).copied().unwrap_or(0.0);
    let shapes = client_shapes(&plan.schedule);
    let g = cfg.granularity_s as Real;
    (0..plan.total_windows)
        .map(|w| {
            let t0 = w as Real * g;
            let t1 = t0 + g;
            let mut workload_rng = derive_stream(plan.seed, &[&app.id, "workload"], w);
            let entry_rate = rate_at(&cfg.workload, &shapes, t0 + 0.5 * g, &mut workload_rng);
            let fx = effects_at(&plan.schedule, ms_id, &app.entry, t0, t1);
            let mut noise_rng = derive_stream(plan.seed, &[&app.id, ms_id, "noise"], w);
            let mut rec = window_metrics(
                ms,
                state,
                entry_rate * factor,
                &fx.effects,
                t0,
                &mut noise_rng,
            );
            rec.label = fx.label as u8;
            rec.anomaly_kind = fx.kind;
            rec
        })
        .collect()
}

/// Executes one run: generates all targeted traces in parallel and writes
/// them under `<root>/<app>/<microservice>.csv`.
pub fn run(cfg: &GenerationConfig, seed: u64, root: &Path) -> Result<RunRecord, OrchestratorError> {
    let run_plan = plan(cfg, seed)?;
    let targets = cfg.targeted_microservices();
    let traces: Vec<(String, Vec<TelemetryRecord>)> = targets
        .par_iter()
        .map(|ms| (ms.id.clone(), generate_trace(cfg, &run_plan, &ms.id)))
        .collect();
    let mut entries = Vec::with_capacity(traces.len());
    for (ms_id, records) in &traces {
        let rel_path = format!("{}/{ms_id}.csv", cfg.app.id);
        write_trace(&root.join(&rel_path), records)?;
        eprintln!("[{TOOL_NAME}] wrote {rel_path} ({} records)", records.len());
        entries.push(TraceEntry {
            app: cfg.app.id.clone(),
            microservice: ms_id.clone(),
            path: rel_path,
            records: records.len() as u64,
        });
    }
    Ok(RunRecord {
        app: cfg.app.id.clone(),
        seed,
        granularity_s: cfg.granularity_s,
        config: cfg.clone(),
        placement: run_plan.placement,
        schedule: run_plan.schedule,
        traces: entries,
    })
}

/// One failed run inside a corpus, kept so other runs still complete.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub app: String,
    pub error: String,
}

/// A finished corpus: the dataset handle plus any per-run failures.
#[derive(Debug)]
pub struct CorpusOutcome {
    pub handle: DatasetHandle,
    pub failures: Vec<RunFailure>,
}

/// Runs a batch of (config, seed) pairs into one dataset root and writes
/// the shared manifest.
///
/// Run failures are isolated: a failed run is recorded and skipped while
/// the remaining runs still generate. App ids must be unique across the
/// batch since traces land under per-app directories.
pub fn run_corpus(
    runs: &[(GenerationConfig, u64)],
    root: &Path,
) -> Result<CorpusOutcome, OrchestratorError> {
    let mut seen = BTreeSet::new();
    for (cfg, _) in runs {
        if !seen.insert(cfg.app.id.as_str()) {
            return Err(OrchestratorError::DuplicateApp(cfg.app.id.clone()));
        }
    }
    let mut manifest = Manifest::new();
    let mut failures = Vec::new();
    for (cfg, seed) in runs {
        match run(cfg, *seed, root) {
            Ok(record) => manifest.runs.push(record),
            Err(err) => {
                eprintln!("[{TOOL_NAME}] run `{}` failed: {err}", cfg.app.id);
                failures.push(RunFailure {
                    app: cfg.app.id.clone(),
                    error: err.to_string(),
                });
            }
        }
    }
    let manifest_path = write_manifest(root, &manifest)?;
    Ok(CorpusOutcome {
        handle: DatasetHandle {
            root: root.to_owned(),
            manifest,
            manifest_path,
        },
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::corpus::location_example;
    use crate::dataset::read_trace;

    fn short_location() -> GenerationConfig {
        let mut cfg = location_example();
        cfg.normal_duration_s = 1_200;
        cfg.anomaly_phase_duration_s = 1_200;
        for spec in &mut cfg.anomalies {
            spec.events = 2;
            spec.duration_s = 100;
        }
        cfg
    }

    #[test]
    fn run_emits_expected_window_grid() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = short_location();
        let record = run(&cfg, 42, dir.path()).unwrap();
        assert_eq!(record.traces.len(), 1);
        assert_eq!(record.traces[0].records, 240);
        let records = read_trace(&dir.path().join(&record.traces[0].path)).unwrap();
        assert_eq!(records.len(), 240);
        for (w, rec) in records.iter().enumerate() {
            assert_eq!(rec.time, w as Real * 10.0);
        }
    }

    #[test]
    fn no_anomaly_phase_means_all_normal() {
        let dir = tempfile::tempdir().unwrap();
        let doc = "\
app: location_retrieval
normal:
  duration_s: 600
  workload:
    base_rate: 20.0
";
        let cfg = parse_config(doc).unwrap();
        let record = run(&cfg, 7, dir.path()).unwrap();
        assert!(record.schedule.is_empty());
        let records = read_trace(&dir.path().join(&record.traces[0].path)).unwrap();
        assert!(records
            .iter()
            .all(|r| r.label == 0 && r.anomaly_kind.is_none()));
    }

    #[test]
    fn labels_match_schedule_intersection() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = short_location();
        let record = run(&cfg, 11, dir.path()).unwrap();
        let records = read_trace(&dir.path().join(&record.traces[0].path)).unwrap();
        assert!(
            records.iter().any(|r| r.label == 1),
            "schedule never labeled"
        );
        for rec in &records {
            let t0 = rec.time;
            let t1 = t0 + 10.0;
            let expected = record.schedule.iter().any(|e| {
                let start = e.start_s as Real;
                let end = (e.start_s + e.duration_s) as Real;
                t0 < end && start < t1
            });
            assert_eq!(rec.label == 1, expected, "window at {t0}");
        }
    }

    #[test]
    fn identical_seeds_reproduce_bytes_across_thread_counts() {
        let cfg = short_location();
        let render = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let dir = tempfile::tempdir().unwrap();
            pool.install(|| run(&cfg, 42, dir.path()).unwrap());
            std::fs::read(dir.path().join("location_retrieval/location_service.csv")).unwrap()
        };
        let single = render(1);
        let quad = render(4);
        assert_eq!(single, quad);
    }

    #[test]
    fn different_seeds_differ() {
        let cfg = short_location();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run(&cfg, 1, dir_a.path()).unwrap();
        run(&cfg, 2, dir_b.path()).unwrap();
        let a =
            std::fs::read(dir_a.path().join("location_retrieval/location_service.csv")).unwrap();
        let b =
            std::fs::read(dir_b.path().join("location_retrieval/location_service.csv")).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn target_filter_limits_traces() {
        let dir = tempfile::tempdir().unwrap();
        let doc = "\
app: face_detection_recognition
microservices: [preprocessor, database]
normal:
  duration_s: 300
  workload:
    base_rate: 18.0
";
        let cfg = parse_config(doc).unwrap();
        let record = run(&cfg, 42, dir.path()).unwrap();
        let ids: Vec<&str> = record
            .traces
            .iter()
            .map(|t| t.microservice.as_str())
            .collect();
        assert_eq!(ids, ["preprocessor", "database"]);
        assert!(!dir
            .path()
            .join("face_detection_recognition/face_detector.csv")
            .exists());
    }

    #[test]
    fn duplicate_app_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = short_location();
        let runs = vec![(cfg.clone(), 1), (cfg, 2)];
        let err = run_corpus(&runs, dir.path()).unwrap_err();
        assert!(matches!(err, OrchestratorError::DuplicateApp(_)));
    }

    #[test]
    fn corpus_writes_manifest_and_all_traces() {
        let dir = tempfile::tempdir().unwrap();
        let mut runs = Vec::new();
        for (app, base) in [
            ("face_detection_recognition", 18.0),
            ("predictive_maintenance", 2.0),
            ("location_retrieval", 20.0),
        ] {
            let doc = format!(
                "app: {app}\nnormal:\n  duration_s: 300\n  workload:\n    base_rate: {base}\n"
            );
            runs.push((parse_config(&doc).unwrap(), 42));
        }
        let outcome = run_corpus(&runs, dir.path()).unwrap();
        assert!(outcome.failures.is_empty());
        assert_eq!(outcome.handle.manifest.runs.len(), 3);
        assert_eq!(outcome.handle.manifest.traces().count(), 8);
        for entry in outcome.handle.manifest.traces() {
            assert!(outcome.handle.trace_path(entry).is_file());
        }
        let reloaded = crate::dataset::load_dataset(dir.path()).unwrap();
        assert_eq!(reloaded.manifest.traces().count(), 8);
    }
}
