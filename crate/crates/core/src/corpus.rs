//! Built-in corpus configurations.
//!
//! The default corpus covers all three built-in applications. The location
//! retriever runs as three request-rate variants (mirroring a deployment
//! replicated across regions), so one corpus pass produces ten trace files:
//! four face-pipeline microservices, three predictive-maintenance
//! microservices, and three location-retriever variants.

use crate::appmodel::builtin_app;
use crate::chaos::{AnomalyKind, AnomalySpec};
use crate::config::{GenerationConfig, DEFAULT_GRANULARITY_S};
use crate::topology::default_topology;
use crate::workload::WorkloadProfile;
use crate::Real;

/// Normal-phase length of each default-corpus run, seconds (5.4 hours).
pub const CORPUS_NORMAL_DURATION_S: u64 = 19_440;

/// Anomaly-phase length of each default-corpus run, seconds (3.1 hours).
pub const CORPUS_ANOMALY_DURATION_S: u64 = 11_160;

fn corpus_config(app_id: &str, base_rate: Real, inject: Vec<AnomalySpec>) -> GenerationConfig {
    GenerationConfig {
        app: builtin_app(app_id).expect("built-in app"),
        target_microservices: Vec::new(),
        normal_duration_s: CORPUS_NORMAL_DURATION_S,
        workload: WorkloadProfile::with_base_rate(base_rate),
        anomaly_phase_duration_s: CORPUS_ANOMALY_DURATION_S,
        anomalies: inject,
        granularity_s: DEFAULT_GRANULARITY_S,
        seed: None,
        output: None,
        topology: default_topology(),
    }
}

fn inject(kind: AnomalyKind, target: &str) -> AnomalySpec {
    AnomalySpec::with_defaults(kind, target)
}

/// One location-retriever variant: the same single-service app under a
/// different regional request rate, renamed so traces land in distinct
/// directories.
fn location_variant(suffix: &str, base_rate: Real) -> GenerationConfig {
    let mut cfg = corpus_config(
        "location_retrieval",
        base_rate,
        AnomalyKind::ALL
            .iter()
            .map(|&kind| inject(kind, "location_service"))
            .collect(),
    );
    cfg.app.id = format!("location_retrieval_{suffix}");
    cfg
}

/// The default corpus: five runs spanning the three built-in applications,
/// every anomaly kind, and three client request-rate regimes.
///
/// Server-side anomalies rotate across the pipeline microservices so each
/// run stresses CPU, memory, and the network on different services; the
/// single-service location retriever additionally takes both client-surge
/// kinds, which must land on an entry microservice.
pub fn default_corpus() -> Vec<GenerationConfig> {
    vec![
        corpus_config(
            "face_detection_recognition",
            18.0,
            vec![
                inject(AnomalyKind::CpuHog, "face_detector"),
                inject(AnomalyKind::MemoryStress, "face_recognizer"),
                inject(AnomalyKind::NetworkDelay, "database"),
            ],
        ),
        corpus_config(
            "predictive_maintenance",
            2.0,
            vec![
                inject(AnomalyKind::CpuHog, "emergency_event_detection"),
                inject(AnomalyKind::MemoryStress, "missing_data_imputation"),
                inject(AnomalyKind::NetworkDelay, "orchestrator"),
            ],
        ),
        location_variant("r1", 20.0),
        location_variant("r2", 10.0),
        location_variant("r3", 15.0),
    ]
}

/// A short single-app example: the location retriever for a three-hour
/// normal phase and a two-hour anomaly phase under every anomaly kind.
pub fn location_example() -> GenerationConfig {
    let mut cfg = corpus_config(
        "location_retrieval",
        20.0,
        AnomalyKind::ALL
            .iter()
            .map(|&kind| inject(kind, "location_service"))
            .collect(),
    );
    cfg.normal_duration_s = 10_800;
    cfg.anomaly_phase_duration_s = 7_200;
    cfg
}
