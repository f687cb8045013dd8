//! Configuration parsing, default-filling, and validation.
//!
//! Configs are a YAML-subset document (mappings, sequences, scalars — no
//! anchors or aliases) with top-level keys `app`, `microservices`, `normal`,
//! `anomalies`, `output`, `seed`, `granularity_s`, plus optional `topology`
//! and `apps` for custom infrastructure and applications. Parsing resolves
//! the application, fills every default, and validates the result; a parsed
//! [`GenerationConfig`] is always internally consistent.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appmodel::{
    builtin_app, builtin_apps, AppModelError, AppSpec, MicroserviceSpec, PatternRole, ProtocolTag,
    QosClass,
};
use crate::chaos::{AnomalyKind, AnomalySpec, Side, DEFAULT_EVENT_COUNT};
use crate::topology::{default_topology, place, Topology};
use crate::workload::WorkloadProfile;
use crate::Real;

/// Monitoring window length when a config does not specify one, seconds.
pub const DEFAULT_GRANULARITY_S: u64 = 10;

/// Seed of last resort, used when neither CLI, config, nor environment
/// provides one.
pub const DEFAULT_SEED: u64 = 42;

/// A fully resolved, validated generation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    /// The resolved application model.
    pub app: AppSpec,
    /// Microservices to emit traces for; empty means all.
    pub target_microservices: Vec<String>,
    pub normal_duration_s: u64,
    pub workload: WorkloadProfile,
    pub anomaly_phase_duration_s: u64,
    pub anomalies: Vec<AnomalySpec>,
    pub granularity_s: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub topology: Topology,
}

impl GenerationConfig {
    /// Total run length, seconds.
    pub fn total_duration_s(&self) -> u64 {
        self.normal_duration_s + self.anomaly_phase_duration_s
    }

    /// Number of monitoring windows per trace.
    pub fn total_windows(&self) -> u64 {
        self.total_duration_s() / self.granularity_s
    }

    /// The microservices a run emits traces for, in application order.
    pub fn targeted_microservices(&self) -> Vec<&MicroserviceSpec> {
        self.app
            .microservices
            .iter()
            .filter(|ms| {
                self.target_microservices.is_empty() || self.target_microservices.contains(&ms.id)
            })
            .collect()
    }
}

/// One validation finding: the offending field path and what is wrong.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join_findings(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(|f| format!("  - {f}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Errors from configuration parsing.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("configuration syntax error: {0}")]
    Syntax(#[from] serde_yaml::Error),
    #[error(transparent)]
    App(#[from] AppModelError),
    #[error("unknown app `{requested}`; available apps: {available}")]
    UnknownApp {
        requested: String,
        available: String,
    },
    #[error("invalid configuration:\n{}", join_findings(.0))]
    Invalid(Vec<Finding>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    app: String,
    #[serde(default)]
    microservices: Vec<String>,
    normal: RawNormal,
    #[serde(default)]
    anomalies: Option<RawAnomalies>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    granularity_s: Option<u64>,
    #[serde(default)]
    topology: Option<Topology>,
    #[serde(default)]
    apps: Vec<RawAppSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNormal {
    duration_s: u64,
    workload: WorkloadProfile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnomalies {
    phase_duration_s: u64,
    #[serde(default)]
    inject: Vec<RawInject>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInject {
    kind: AnomalyKind,
    target: String,
    #[serde(default)]
    events: Option<u32>,
    #[serde(default)]
    duration_s: Option<u64>,
    #[serde(default)]
    magnitude: Option<Real>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAppSpec {
    id: String,
    entry: String,
    microservices: Vec<RawMicroserviceSpec>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMicroserviceSpec {
    id: String,
    qos: QosClass,
    #[serde(default)]
    pattern_role: Option<PatternRole>,
    #[serde(default)]
    protocol_tag: Option<ProtocolTag>,
    #[serde(default)]
    base_service_rate: Option<Real>,
    #[serde(default)]
    req_size: Option<Real>,
    #[serde(default)]
    resp_size: Option<Real>,
    #[serde(default)]
    base_rss: Option<Real>,
    #[serde(default)]
    vsize_factor: Option<Real>,
    #[serde(default)]
    disk_write_per_req: Option<Real>,
    #[serde(default)]
    pass_fraction: Option<Real>,
}

impl RawMicroserviceSpec {
    /// Fills omitted cost parameters from the QoS-class defaults.
    fn resolve(self) -> MicroserviceSpec {
        let req_size = self.req_size.unwrap_or(2_048.0);
        MicroserviceSpec {
            qos: self.qos,
            pattern_role: self.pattern_role.unwrap_or(PatternRole::Chained),
            protocol_tag: self.protocol_tag.unwrap_or(ProtocolTag::Http),
            base_service_rate: self
                .base_service_rate
                .unwrap_or_else(|| self.qos.default_service_rate()),
            req_size,
            resp_size: self.resp_size.unwrap_or(1_024.0),
            base_rss: self
                .base_rss
                .unwrap_or_else(|| self.qos.default_base_rss_mib()),
            vsize_factor: self.vsize_factor.unwrap_or(2.0),
            disk_write_per_req: self.disk_write_per_req.unwrap_or(req_size / 8.0),
            pass_fraction: self.pass_fraction.unwrap_or(1.0),
            id: self.id,
        }
    }
}

impl RawAppSpec {
    fn resolve(self) -> AppSpec {
        AppSpec {
            id: self.id,
            entry: self.entry,
            microservices: self
                .microservices
                .into_iter()
                .map(RawMicroserviceSpec::resolve)
                .collect(),
            edges: self.edges,
        }
    }
}

/// Parses a configuration document into a fully defaulted, validated
/// [`GenerationConfig`].
///
/// The `app` id resolves against the document's own `apps` entries first,
/// then the built-ins. Any validation finding fails the parse with
/// [`ConfigError::Invalid`].
pub fn parse_config(text: &str) -> Result<GenerationConfig, ConfigError> {
    let raw: RawConfig = serde_yaml::from_str(text)?;
    let custom_apps: Vec<AppSpec> = raw.apps.into_iter().map(RawAppSpec::resolve).collect();
    for app in &custom_apps {
        app.validate()?;
    }
    let app = custom_apps
        .iter()
        .find(|a| a.id == raw.app)
        .cloned()
        .or_else(|| builtin_app(&raw.app))
        .ok_or_else(|| ConfigError::UnknownApp {
            requested: raw.app.clone(),
            available: builtin_apps()
                .iter()
                .map(|a| a.id.clone())
                .chain(custom_apps.iter().map(|a| a.id.clone()))
                .collect::<Vec<_>>()
                .join(", "),
        })?;
    let (anomaly_phase_duration_s, anomalies) = match raw.anomalies {
        None => (0, Vec::new()),
        Some(section) => {
            let specs = section
                .inject
                .into_iter()
                .map(|entry| AnomalySpec {
                    kind: entry.kind,
                    target: entry.target,
                    events: entry.events.unwrap_or(DEFAULT_EVENT_COUNT),
                    duration_s: entry
                        .duration_s
                        .unwrap_or_else(|| entry.kind.default_duration_s()),
                    magnitude: entry
                        .magnitude
                        .unwrap_or_else(|| entry.kind.default_magnitude()),
                })
                .collect();
            (section.phase_duration_s, specs)
        }
    };
    let cfg = GenerationConfig {
        app,
        target_microservices: raw.microservices,
        normal_duration_s: raw.normal.duration_s,
        workload: raw.normal.workload,
        anomaly_phase_duration_s,
        anomalies,
        granularity_s: raw.granularity_s.unwrap_or(DEFAULT_GRANULARITY_S),
        seed: raw.seed,
        output: raw.output,
        topology: raw.topology.unwrap_or_else(default_topology),
    };
    let findings = validate_config(&cfg, &cfg.app);
    if findings.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(findings))
    }
}

/// Checks every configuration invariant against an application model and
/// returns the findings; an empty list means the config is usable.
pub fn validate_config(cfg: &GenerationConfig, app: &AppSpec) -> Vec<Finding> {
    fn note(findings: &mut Vec<Finding>, field: &str, message: String) {
        findings.push(Finding {
            field: field.to_owned(),
            message,
        });
    }

    let mut findings = Vec::new();
    if let Err(err) = app.validate() {
        note(&mut findings, "apps", err.to_string());
    }
    let known_ids: BTreeSet<&str> = app.microservices.iter().map(|ms| ms.id.as_str()).collect();
    let available = || known_ids.iter().copied().collect::<Vec<_>>().join(", ");

    if cfg.granularity_s == 0 {
        note(
            &mut findings,
            "granularity_s",
            "must be positive".to_owned(),
        );
    }
    if cfg.normal_duration_s == 0 {
        note(
            &mut findings,
            "normal.duration_s",
            "must be positive".to_owned(),
        );
    }
    if cfg.granularity_s > 0 {
        if !cfg.normal_duration_s.is_multiple_of(cfg.granularity_s) {
            note(
                &mut findings,
                "normal.duration_s",
                format!(
                    "{} is not a multiple of granularity_s {}",
                    cfg.normal_duration_s, cfg.granularity_s
                ),
            );
        }
        if !cfg
            .anomaly_phase_duration_s
            .is_multiple_of(cfg.granularity_s)
        {
            note(
                &mut findings,
                "anomalies.phase_duration_s",
                format!(
                    "{} is not a multiple of granularity_s {}",
                    cfg.anomaly_phase_duration_s, cfg.granularity_s
                ),
            );
        }
    }

    let wl = &cfg.workload;
    if !(wl.base_rate.is_finite() && wl.base_rate >= 0.0) {
        note(
            &mut findings,
            "normal.workload.base_rate",
            format!("must be finite and non-negative, got {}", wl.base_rate),
        );
    }
    if !(0.0..1.0).contains(&wl.diurnal_amplitude) {
        note(
            &mut findings,
            "normal.workload.diurnal_amplitude",
            format!("must lie in [0, 1), got {}", wl.diurnal_amplitude),
        );
    }
    if !(wl.diurnal_period_s > 0.0 && wl.diurnal_period_s.is_finite()) {
        note(
            &mut findings,
            "normal.workload.diurnal_period_s",
            format!("must be positive, got {}", wl.diurnal_period_s),
        );
    }
    if !(wl.jitter_sigma.is_finite() && wl.jitter_sigma >= 0.0) {
        note(
            &mut findings,
            "normal.workload.jitter_sigma",
            format!("must be finite and non-negative, got {}", wl.jitter_sigma),
        );
    }

    for target in &cfg.target_microservices {
        if !known_ids.contains(target.as_str()) {
            note(
                &mut findings,
                "microservices",
                format!(
                    "unknown microservice `{target}` in app `{}` (has: {})",
                    app.id,
                    available()
                ),
            );
        }
    }

    for (i, spec) in cfg.anomalies.iter().enumerate() {
        let field = format!("anomalies.inject[{i}]");
        if !known_ids.contains(spec.target.as_str()) {
            note(
                &mut findings,
                &field,
                format!(
                    "unresolved target `{}` in app `{}` (has: {})",
                    spec.target,
                    app.id,
                    available()
                ),
            );
        } else if spec.kind.side() == Side::Client && spec.target != app.entry {
            note(
                &mut findings,
                &field,
                format!(
                    "{} acts on the client workload and must target the entry microservice `{}`",
                    spec.kind, app.entry
                ),
            );
        }
        if spec.events == 0 {
            note(
                &mut findings,
                &field,
                "events must be at least 1".to_owned(),
            );
        }
        if spec.duration_s == 0 {
            note(
                &mut findings,
                &field,
                "duration_s must be positive".to_owned(),
            );
        } else if cfg.granularity_s > 0 && spec.duration_s % cfg.granularity_s != 0 {
            note(
                &mut findings,
                &field,
                format!(
                    "duration_s {} is not a multiple of granularity_s {}",
                    spec.duration_s, cfg.granularity_s
                ),
            );
        }
        if !(spec.magnitude.is_finite() && spec.magnitude > 0.0) {
            note(
                &mut findings,
                &field,
                format!(
                    "magnitude must be finite and positive, got {}",
                    spec.magnitude
                ),
            );
        } else if spec.kind == AnomalyKind::CpuHog && spec.magnitude >= 1.0 {
            note(
                &mut findings,
                &field,
                format!(
                    "cpu_hog magnitude is a capacity fraction and must lie in (0, 1), got {}",
                    spec.magnitude
                ),
            );
        }
        let occupied = u64::from(spec.events).saturating_mul(spec.duration_s);
        if occupied > cfg.anomaly_phase_duration_s {
            note(
                &mut findings,
                &field,
                format!(
                    "schedule overflow: {} events x {} s exceed the {} s anomaly phase",
                    spec.events, spec.duration_s, cfg.anomaly_phase_duration_s
                ),
            );
        }
    }

    for message in cfg.topology.findings() {
        note(&mut findings, "topology", message);
    }
    if findings.is_empty() {
        // Only meaningful once the pieces are individually sound.
        if let Err(err) = place(app, &cfg.topology) {
            findings.push(Finding {
                field: "topology".to_owned(),
                message: format!("placement is infeasible: {err}"),
            });
        }
    }
    findings
}

#[derive(Serialize)]
struct CanonicalDoc<'a> {
    app: &'a str,
    apps: [&'a AppSpec; 1],
    microservices: &'a [String],
    normal: CanonicalNormal<'a>,
    anomalies: CanonicalAnomalies<'a>,
    granularity_s: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<&'a PathBuf>,
    topology: &'a Topology,
}

#[derive(Serialize)]
struct CanonicalNormal<'a> {
    duration_s: u64,
    workload: &'a WorkloadProfile,
}

#[derive(Serialize)]
struct CanonicalAnomalies<'a> {
    phase_duration_s: u64,
    inject: &'a [AnomalySpec],
}

/// Serializes a config to its canonical text form.
///
/// The canonical form spells out every resolved value — the full app spec
/// under `apps`, all anomaly parameters, the topology — so parsing it back
/// reproduces the config exactly (`parse_config ∘ canonical_yaml` is the
/// identity on parsed configs).
pub fn canonical_yaml(cfg: &GenerationConfig) -> String {
    let doc = CanonicalDoc {
        app: &cfg.app.id,
        apps: [&cfg.app],
        microservices: &cfg.target_microservices,
        normal: CanonicalNormal {
            duration_s: cfg.normal_duration_s,
            workload: &cfg.workload,
        },
        anomalies: CanonicalAnomalies {
            phase_duration_s: cfg.anomaly_phase_duration_s,
            inject: &cfg.anomalies,
        },
        granularity_s: cfg.granularity_s,
        seed: cfg.seed,
        output: cfg.output.as_ref(),
        topology: &cfg.topology,
    };
    serde_yaml::to_string(&doc).expect("config serialization cannot fail")
}

/// Resolves the effective seed: CLI override, then config, then the
/// `EAF_SEED` environment value, then [`DEFAULT_SEED`].
pub fn resolve_seed(cli: Option<u64>, cfg_seed: Option<u64>, env: Option<u64>) -> u64 {
    cli.or(cfg_seed).or(env).unwrap_or(DEFAULT_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOCATION_DOC: &str = "\
app: location_retrieval
normal:
  duration_s: 10800
  workload:
    base_rate: 20.0
anomalies:
  phase_duration_s: 7200
  inject:
    - kind: cpu_hog
      target: location_service
    - kind: memory_stress
      target: location_service
    - kind: network_delay
      target: location_service
    - kind: user_surge_spike
      target: location_service
    - kind: user_surge_step
      target: location_service
";

    #[test]
    fn location_document_parses_with_defaults() {
        let cfg = parse_config(LOCATION_DOC).unwrap();
        assert_eq!(cfg.app.id, "location_retrieval");
        assert_eq!(cfg.normal_duration_s, 10_800);
        assert_eq!(cfg.anomaly_phase_duration_s, 7_200);
        assert_eq!(cfg.granularity_s, 10);
        assert_eq!(cfg.total_windows(), 1_800);
        assert_eq!(cfg.anomalies.len(), 5);
        let hog = &cfg.anomalies[0];
        assert_eq!(hog.events, DEFAULT_EVENT_COUNT);
        assert_eq!(hog.duration_s, 100);
        assert_eq!(hog.magnitude, 0.5);
        let spike = &cfg.anomalies[3];
        assert_eq!(spike.duration_s, 60);
        assert_eq!(spike.magnitude, 5.0);
        assert_eq!(cfg.workload.diurnal_amplitude, 0.05);
        assert_eq!(cfg.workload.jitter_sigma, 0.05);
        assert!(validate_config(&cfg, &cfg.app).is_empty());
    }

    #[test]
    fn unknown_kind_is_a_syntax_error_with_position() {
        let doc = LOCATION_DOC.replace("cpu_hog", "disk_flood");
        let err = parse_config(&doc).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("disk_flood"), "got: {message}");
        assert!(message.contains("line"), "position missing: {message}");
    }

    #[test]
    fn unknown_app_lists_available() {
        let doc = LOCATION_DOC.replace("location_retrieval", "parcel_sorting");
        let err = parse_config(&doc).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownApp { .. }));
        assert!(err.to_string().contains("face_detection_recognition"));
    }

    #[test]
    fn unresolved_target_is_a_finding() {
        let doc = LOCATION_DOC.replace("target: location_service", "target: face_detector");
        let err = parse_config(&doc).unwrap_err();
        let ConfigError::Invalid(findings) = err else {
            panic!("expected findings");
        };
        assert!(findings
            .iter()
            .any(|f| f.message.contains("unresolved target `face_detector`")));
    }

    #[test]
    fn misaligned_duration_is_a_finding() {
        let doc = LOCATION_DOC.replace("duration_s: 10800", "duration_s: 10805");
        let err = parse_config(&doc).unwrap_err();
        assert!(err.to_string().contains("not a multiple of granularity_s"));
    }

    #[test]
    fn schedule_overflow_is_a_finding() {
        let doc = LOCATION_DOC.replace("phase_duration_s: 7200", "phase_duration_s: 300");
        let err = parse_config(&doc).unwrap_err();
        assert!(err.to_string().contains("schedule overflow"));
    }

    #[test]
    fn client_kind_must_target_the_entry() {
        let doc = "\
app: face_detection_recognition
normal:
  duration_s: 600
  workload:
    base_rate: 18.0
anomalies:
  phase_duration_s: 600
  inject:
    - kind: user_surge_spike
      target: database
";
        let err = parse_config(doc).unwrap_err();
        assert!(err
            .to_string()
            .contains("must target the entry microservice `preprocessor`"));
    }

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let doc = format!("{LOCATION_DOC}unexpected_key: 1\n");
        assert!(matches!(parse_config(&doc), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn custom_app_resolves_and_defaults_fill_in() {
        let doc = "\
app: pipeline
apps:
  - id: pipeline
    entry: ingest
    microservices:
      - id: ingest
        qos: { latency: LC, throughput: HTp, compute: MCI }
        pass_fraction: 0.5
      - id: store
        qos: { latency: LT, throughput: LTp }
    edges:
      - [ingest, store]
normal:
  duration_s: 600
  workload:
    base_rate: 4.0
";
        let cfg = parse_config(doc).unwrap();
        assert_eq!(cfg.app.id, "pipeline");
        let ingest = cfg.app.microservice("ingest").unwrap();
        assert_eq!(ingest.base_service_rate, 10.0);
        assert_eq!(ingest.base_rss, 600.0);
        assert_eq!(ingest.pass_fraction, 0.5);
        let store = cfg.app.microservice("store").unwrap();
        assert_eq!(store.base_service_rate, 50.0);
        assert_eq!(store.base_rss, 80.0);
        assert_eq!(store.disk_write_per_req, 2_048.0 / 8.0);
        assert_eq!(cfg.anomaly_phase_duration_s, 0);
        assert!(cfg.anomalies.is_empty());
    }

    #[test]
    fn canonical_round_trip_is_identity() {
        let cfg = parse_config(LOCATION_DOC).unwrap();
        let canonical = canonical_yaml(&cfg);
        let reparsed = parse_config(&canonical).unwrap();
        assert_eq!(cfg, reparsed);
        assert_eq!(canonical, canonical_yaml(&reparsed));
    }

    #[test]
    fn target_subset_round_trips() {
        let doc = "\
app: face_detection_recognition
microservices: [preprocessor, database]
normal:
  duration_s: 600
  workload:
    base_rate: 18.0
seed: 7
granularity_s: 5
";
        let cfg = parse_config(doc).unwrap();
        assert_eq!(cfg.target_microservices, vec!["preprocessor", "database"]);
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.granularity_s, 5);
        assert_eq!(cfg.targeted_microservices().len(), 2);
        let reparsed = parse_config(&canonical_yaml(&cfg)).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn seed_resolution_order() {
        assert_eq!(resolve_seed(Some(1), Some(2), Some(3)), 1);
        assert_eq!(resolve_seed(None, Some(2), Some(3)), 2);
        assert_eq!(resolve_seed(None, None, Some(3)), 3);
        assert_eq!(resolve_seed(None, None, None), DEFAULT_SEED);
    }
}
