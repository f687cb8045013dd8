//! Anomaly-injection planning: scheduling anomaly events inside the anomaly
//! phase and resolving, per time window, which effects act on which
//! microservice.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workload::{ClientAnomalyShape, SurgeKind};
use crate::Real;

/// Default number of events injected per anomaly specification.
pub const DEFAULT_EVENT_COUNT: u32 = 8;

/// Ceiling on the summed CPU-hog fraction when events overlap in a window.
pub const MAX_CPU_HOG_FRACTION: Real = 0.95;

/// The five anomaly kinds: three server-side, two client-side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    CpuHog,
    MemoryStress,
    NetworkDelay,
    UserSurgeSpike,
    UserSurgeStep,
}

/// Which side of the service boundary an anomaly acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Server,
    Client,
}

impl AnomalyKind {
    pub const ALL: [AnomalyKind; 5] = [
        AnomalyKind::CpuHog,
        AnomalyKind::MemoryStress,
        AnomalyKind::NetworkDelay,
        AnomalyKind::UserSurgeSpike,
        AnomalyKind::UserSurgeStep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnomalyKind::CpuHog => "cpu_hog",
            AnomalyKind::MemoryStress => "memory_stress",
            AnomalyKind::NetworkDelay => "network_delay",
            AnomalyKind::UserSurgeSpike => "user_surge_spike",
            AnomalyKind::UserSurgeStep => "user_surge_step",
        }
    }

    /// Server-side kinds act on the target microservice's resources;
    /// client-side kinds scale the entry workload.
    pub fn side(self) -> Side {
        match self {
            AnomalyKind::UserSurgeSpike | AnomalyKind::UserSurgeStep => Side::Client,
            _ => Side::Server,
        }
    }

    /// Default event duration: spikes are short bursts, everything else a
    /// sustained 100 s window.
    pub fn default_duration_s(self) -> u64 {
        match self {
            AnomalyKind::UserSurgeSpike => 60,
            _ => 100,
        }
    }

    /// Default magnitude; semantics are per kind (see [`effects_at`]).
    pub fn default_magnitude(self) -> Real {
        match self {
            AnomalyKind::CpuHog => 0.5,
            AnomalyKind::MemoryStress => 1.0,
            AnomalyKind::NetworkDelay => 1.0,
            AnomalyKind::UserSurgeSpike => 5.0,
            AnomalyKind::UserSurgeStep => 2.0,
        }
    }
}

impl std::fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AnomalyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnomalyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown anomaly kind `{s}`"))
    }
}

/// One fully resolved anomaly specification from a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalySpec {
    pub kind: AnomalyKind,
    pub target: String,
    /// Events scheduled inside the anomaly phase.
    pub events: u32,
    /// Length of each event, seconds.
    pub duration_s: u64,
    /// Kind-specific intensity.
    pub magnitude: Real,
}

impl AnomalySpec {
    /// A spec carrying the kind's default event count, duration, and
    /// magnitude.
    pub fn with_defaults(kind: AnomalyKind, target: &str) -> Self {
        AnomalySpec {
            kind,
            target: target.to_owned(),
            events: DEFAULT_EVENT_COUNT,
            duration_s: kind.default_duration_s(),
            magnitude: kind.default_magnitude(),
        }
    }
}

/// One scheduled anomaly occurrence on the absolute run timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEvent {
    pub kind: AnomalyKind,
    pub target: String,
    /// Absolute start, seconds since run start.
    pub start_s: u64,
    pub duration_s: u64,
    pub magnitude: Real,
}

impl AnomalyEvent {
    /// The workload-side shape of a client anomaly; `None` for server kinds.
    pub fn client_shape(&self) -> Option<ClientAnomalyShape> {
        let kind = match self.kind {
            AnomalyKind::UserSurgeSpike => SurgeKind::Spike,
            AnomalyKind::UserSurgeStep => SurgeKind::Step,
            _ => return None,
        };
        Some(ClientAnomalyShape {
            kind,
            factor: self.magnitude,
            start_s: self.start_s as Real,
            duration_s: self.duration_s as Real,
        })
    }
}

/// Server-side effects active on one microservice during one window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActiveEffects {
    /// Fraction of CPU capacity consumed by stressors, in [0, 1).
    pub cpu_hog_fraction: Real,
    /// Added resident memory, MiB.
    pub mem_stress_mib: Real,
    /// Added one-way network latency, milliseconds.
    pub net_delay_add_ms: Real,
}

/// Effects plus labeling outcome for one (microservice, window) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEffects {
    pub effects: ActiveEffects,
    pub label: bool,
    /// Kind of the earliest event that labels this window, if any.
    pub kind: Option<AnomalyKind>,
}

/// Errors from schedule construction.
#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("anomaly `{kind}` on `{target}`: {events} events x {duration_s} s do not fit into the {phase_duration_s} s anomaly phase")]
    Overflow {
        kind: AnomalyKind,
        target: String,
        events: u32,
        duration_s: u64,
        phase_duration_s: u64,
    },
}

/// Schedules every specified event inside the anomaly phase
/// `[normal_duration_s, normal_duration_s + phase_duration_s)`.
///
/// For each entry in `specs`, `events` starts are drawn uniformly at
/// random such that events of one (kind, target) pair never overlap each
/// other; events of different kinds may overlap freely. The result is
/// sorted by start time (ties keep `specs` order) and is a pure function
/// of the stream.
pub fn build_schedule<R: Rng + ?Sized>(
    specs: &[AnomalySpec],
    normal_duration_s: u64,
    phase_duration_s: u64,
    rng: &mut R,
) -> Result<Vec<AnomalyEvent>, ScheduleError> {
    let mut events = Vec::new();
    for spec in specs {
        let k = u64::from(spec.events);
        let occupied = k.saturating_mul(spec.duration_s);
        if occupied > phase_duration_s {
            return Err(ScheduleError::Overflow {
                kind: spec.kind,
                target: spec.target.clone(),
                events: spec.events,
                duration_s: spec.duration_s,
                phase_duration_s,
            });
        }
        // Sorted uniform offsets into the slack, each shifted by the room
        // taken up by its predecessors: uniform placement without overlap.
        let slack = phase_duration_s - occupied;
        let mut offsets: Vec<u64> = (0..k).map(|_| rng.gen_range(0..=slack)).collect();
        offsets.sort_unstable();
        for (i, offset) in offsets.into_iter().enumerate() {
            events.push(AnomalyEvent {
                kind: spec.kind,
                target: spec.target.clone(),
                start_s: normal_duration_s + offset + i as u64 * spec.duration_s,
                duration_s: spec.duration_s,
                magnitude: spec.magnitude,
            });
        }
    }
    events.sort_by_key(|e| e.start_s);
    Ok(events)
}

/// Resolves the effects on `target` over the window `[t0, t1)`.
///
/// Every event whose interval intersects the window contributes. The label
/// is set iff some intersecting event targets `target` — where client-side
/// events target the entry microservice — and the kind tag names the
/// earliest such event. Server-side contributions aggregate: hog fractions
/// sum (capped at [`MAX_CPU_HOG_FRACTION`]), memory ramps linearly from 0
/// at event start to `magnitude × 1024` MiB at event end (evaluated at the
/// midpoint of the window∩event overlap), and each network-delay event adds
/// `magnitude × 100` ms one-way.
pub fn effects_at(
    schedule: &[AnomalyEvent],
    target: &str,
    entry: &str,
    t0: Real,
    t1: Real,
) -> WindowEffects {
    debug_assert!(t1 > t0, "window must be non-empty");
    let mut effects = ActiveEffects::default();
    let mut label = false;
    let mut kind = None;
    for event in schedule {
        let start = event.start_s as Real;
        let end = (event.start_s + event.duration_s) as Real;
        if !(t0 < end && start < t1) {
            continue;
        }
        let labels_target = match event.kind.side() {
            Side::Client => target == entry,
            Side::Server => event.target == target,
        };
        if labels_target {
            label = true;
            if kind.is_none() {
                kind = Some(event.kind);
            }
        }
        if event.kind.side() == Side::Server && event.target == target {
            match event.kind {
                AnomalyKind::CpuHog => effects.cpu_hog_fraction += event.magnitude,
                AnomalyKind::MemoryStress => {
                    let mid = 0.5 * (t0.max(start) + t1.min(end));
                    let ramp = (mid - start) / event.duration_s as Real;
                    effects.mem_stress_mib += event.magnitude * 1_024.0 * ramp;
                }
                AnomalyKind::NetworkDelay => effects.net_delay_add_ms += event.magnitude * 100.0,
                AnomalyKind::UserSurgeSpike | AnomalyKind::UserSurgeStep => unreachable!(),
            }
        }
    }
    effects.cpu_hog_fraction = effects.cpu_hog_fraction.min(MAX_CPU_HOG_FRACTION);
    WindowEffects {
        effects,
        label,
        kind,
    }
}

/// Shapes for all client-side events in a schedule, for the workload model.
pub fn client_shapes(schedule: &[AnomalyEvent]) -> Vec<ClientAnomalyShape> {
    schedule
        .iter()
        .filter_map(AnomalyEvent::client_shape)
        .collect()
}
