//! The synthetic monitoring model: turns per-window arrival rates, placement
//! latencies, and active anomaly effects into the 12 telemetry metrics, and
//! provides the discrete-event simulation oracle that validates the
//! analytic queueing core.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appmodel::MicroserviceSpec;
use crate::chaos::{ActiveEffects, AnomalyKind};
use crate::queueing::{capped_sojourn_quantile_s, utilization};
use crate::stats::quantile_sorted;
use crate::topology::demand;
use crate::Real;

/// Lognormal measurement-noise σ applied to every metric except
/// `errors_per_ns`.
pub const NOISE_SIGMA: Real = 0.05;

const MIB_BYTES: Real = 1_048_576.0;

/// Static per-run state of one deployed microservice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceState {
    /// vCPUs allocated by placement (from the compute-intensity class).
    pub allocated_vcpus: Real,
    /// Service rate per vCPU, requests/second.
    pub service_rate: Real,
    /// Baseline resident set, MiB; stress effects add on top per window.
    pub base_rss_mib: Real,
    /// One-way latency to the caller (or client, for the entry), ms.
    pub network_base_latency_ms: Real,
}

impl ServiceState {
    /// State for a placed microservice given its caller-path latency.
    pub fn for_microservice(ms: &MicroserviceSpec, network_base_latency_ms: Real) -> Self {
        ServiceState {
            allocated_vcpus: demand(ms.qos.compute).0,
            service_rate: ms.base_service_rate,
            base_rss_mib: ms.base_rss,
            network_base_latency_ms,
        }
    }

    /// Capacity left after a CPU hog eats `cpu_hog_fraction` of all cycles:
    /// `allocated_vcpus × service_rate × (1 − fraction)`, requests/second.
    pub fn effective_capacity(&self, cpu_hog_fraction: Real) -> Real {
        self.allocated_vcpus * self.service_rate * (1.0 - cpu_hog_fraction)
    }
}

/// One 10-second monitoring sample: the 12 metrics plus label and kind tag.
///
/// Field names match the CSV columns. Units: throughputs bytes/s, rss and
/// vsize bytes, cpu_usage vCPU-fractions in `[0, allocated_vcpus]`, rx/tx
/// bytes/ns, latencies ms, request_throughput requests/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub time: Real,
    pub total_disk_read_throughput: Real,
    pub total_disk_write_throughput: Real,
    pub rss: Real,
    pub vsize: Real,
    pub cpu_usage: Real,
    pub rx_bytes_per_ns: Real,
    pub tx_bytes_per_ns: Real,
    pub latency_p50: Real,
    pub latency_p90: Real,
    pub latency_p99: Real,
    pub request_throughput: Real,
    pub errors_per_ns: Real,
    pub label: u8,
    pub anomaly_kind: Option<AnomalyKind>,
}

/// Noise-free metrics for one window; the deterministic core of
/// [`window_metrics`].
///
/// With capacity `C` after the hog effect and offered rate `λ`:
/// throughput is `min(λ, C)`; latency percentiles come from the capped
/// M/M/1 sojourn quantiles plus twice the one-way network latency
/// (request and response each cross it); `cpu_usage` adds the hog's
/// consumption onto `min(ρ,1)·vcpus`, clamped to the allocation; rss is
/// baseline plus memory stress; rx scales with offered load, tx and disk
/// with served load; disk reads trail writes at a fixed 1:4 ratio.
pub fn window_metrics_raw(
    ms: &MicroserviceSpec,
    state: &ServiceState,
    lambda: Real,
    effects: &ActiveEffects,
    time_s: Real,
) -> TelemetryRecord {
    debug_assert!(lambda >= 0.0, "arrival rate must be non-negative");
    let capacity = state.effective_capacity(effects.cpu_hog_fraction);
    let rho = utilization(capacity, lambda);
    let throughput = lambda.min(capacity);
    let net_ms = 2.0 * (state.network_base_latency_ms + effects.net_delay_add_ms);
    let latency = |q: Real| 1_000.0 * capped_sojourn_quantile_s(capacity, lambda, q) + net_ms;
    let cpu_usage = (rho.min(1.0) * state.allocated_vcpus
        + effects.cpu_hog_fraction * state.allocated_vcpus)
        .min(state.allocated_vcpus);
    let rss = (state.base_rss_mib + effects.mem_stress_mib) * MIB_BYTES;
    let disk_write = throughput * ms.disk_write_per_req;
    TelemetryRecord {
        time: time_s,
        total_disk_read_throughput: 0.25 * disk_write,
        total_disk_write_throughput: disk_write,
        rss,
        vsize: rss * ms.vsize_factor,
        cpu_usage,
        rx_bytes_per_ns: lambda * ms.req_size / 1e9,
        tx_bytes_per_ns: throughput * ms.resp_size / 1e9,
        latency_p50: latency(0.5),
        latency_p90: latency(0.9),
        latency_p99: latency(0.99),
        request_throughput: throughput,
        errors_per_ns: 0.0,
        label: 0,
        anomaly_kind: None,
    }
}

/// Metrics for one window with measurement noise, unlabeled.
///
/// Applies independent multiplicative lognormal noise `exp(σZ)` to each
/// metric except `errors_per_ns`, drawing in CSV column order (eleven draws
/// per call, always), then restores percentile monotonicity by sorting the
/// latency triple.
pub fn window_metrics<R: Rng + ?Sized>(
    ms: &MicroserviceSpec,
    state: &ServiceState,
    lambda: Real,
    effects: &ActiveEffects,
    time_s: Real,
    rng: &mut R,
) -> TelemetryRecord {
    let mut rec = window_metrics_raw(ms, state, lambda, effects, time_s);
    let mut noisy = |value: &mut Real| {
        let z: Real = StandardNormal.sample(rng);
        *value *= (NOISE_SIGMA * z).exp();
    };
    noisy(&mut rec.total_disk_read_throughput);
    noisy(&mut rec.total_disk_write_throughput);
    noisy(&mut rec.rss);
    noisy(&mut rec.vsize);
    noisy(&mut rec.cpu_usage);
    noisy(&mut rec.rx_bytes_per_ns);
    noisy(&mut rec.tx_bytes_per_ns);
    noisy(&mut rec.latency_p50);
    noisy(&mut rec.latency_p90);
    noisy(&mut rec.latency_p99);
    noisy(&mut rec.request_throughput);
    let mut triple = [rec.latency_p50, rec.latency_p90, rec.latency_p99];
    triple.sort_by(|a, b| a.partial_cmp(b).expect("latencies are finite"));
    [rec.latency_p50, rec.latency_p90, rec.latency_p99] = triple;
    rec
}

/// Empirical sojourn percentiles from the discrete-event oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SojournPercentiles {
    pub p50: Real,
    pub p90: Real,
    pub p99: Real,
}

/// Errors from the discrete-event oracle.
#[derive(Debug, Error)]
pub enum DesError {
    #[error("unstable queue: arrival rate {lambda} >= service rate {mu}")]
    Unstable { lambda: Real, mu: Real },
}

/// Discrete-event M/M/1 oracle: simulates `n_requests` requests
/// event-by-event (Poisson arrivals at `lambda`, exponential FIFO service
/// at `mu_total`) after a 10⁴-request warmup and returns empirical
/// p50/p90/p99 sojourn times in seconds.
///
/// This is the ground truth the closed-form quantiles are tested against;
/// it shares no code with the analytic path. Requires `n_requests ≥ 10⁵`
/// for stable percentile estimates.
pub fn des_oracle<R: Rng + ?Sized>(
    mu_total: Real,
    lambda: Real,
    n_requests: u64,
    rng: &mut R,
) -> Result<SojournPercentiles, DesError> {
    if lambda >= mu_total {
        return Err(DesError::Unstable {
            lambda,
            mu: mu_total,
        });
    }
    assert!(n_requests >= 100_000, "oracle needs >= 1e5 samples");
    let interarrival = Exp::new(lambda).expect("positive arrival rate");
    let service = Exp::new(mu_total).expect("positive service rate");
    let warmup = 10_000u64;
    let mut arrival = 0.0;
    let mut previous_departure = 0.0;
    let mut sojourns: Vec<Real> = Vec::with_capacity(n_requests as usize);
    for i in 0..warmup + n_requests {
        arrival += interarrival.sample(rng);
        let begin = arrival.max(previous_departure);
        let departure = begin + service.sample(rng);
        previous_departure = departure;
        if i >= warmup {
            sojourns.push(departure - arrival);
        }
    }
    sojourns.sort_by(|a, b| a.partial_cmp(b).expect("finite sojourns"));
    Ok(SojournPercentiles {
        p50: quantile_sorted(&sojourns, 0.5),
        p90: quantile_sorted(&sojourns, 0.9),
        p99: quantile_sorted(&sojourns, 0.99),
    })
}
