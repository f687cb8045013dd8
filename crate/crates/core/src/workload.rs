//! Per-window arrival rates for an application's entry microservice:
//! a diurnal baseline with lognormal jitter, multiplied by any client-side
//! surge shapes active at the evaluation time.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::Real;

/// Baseline workload profile of an application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadProfile {
    /// Mean request rate at the entry microservice, requests/second.
    pub base_rate: Real,
    /// Peak-to-mean diurnal swing as a fraction of base in [0, 1).
    #[serde(default = "default_amplitude")]
    pub diurnal_amplitude: Real,
    /// Diurnal cycle length, seconds.
    #[serde(default = "default_period")]
    pub diurnal_period_s: Real,
    /// Lognormal jitter σ; 0 disables jitter.
    #[serde(default = "default_jitter")]
    pub jitter_sigma: Real,
}

impl WorkloadProfile {
    /// A profile at `base_rate` with the default diurnal swing and jitter.
    pub fn with_base_rate(base_rate: Real) -> Self {
        WorkloadProfile {
            base_rate,
            diurnal_amplitude: default_amplitude(),
            diurnal_period_s: default_period(),
            jitter_sigma: default_jitter(),
        }
    }
}

fn default_amplitude() -> Real {
    0.05
}

fn default_period() -> Real {
    3_600.0
}

fn default_jitter() -> Real {
    0.05
}

/// Kind of client-side surge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurgeKind {
    /// Short burst.
    Spike,
    /// Sustained elevation.
    Step,
}

/// A client-side anomaly: a rate multiplier active over one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientAnomalyShape {
    pub kind: SurgeKind,
    /// Rate multiplier, > 1.
    pub factor: Real,
    /// Absolute activation time, seconds.
    pub start_s: Real,
    /// Active interval length, seconds.
    pub duration_s: Real,
}

impl ClientAnomalyShape {
    /// Whether the shape is active at time `t_s`.
    pub fn active_at(&self, t_s: Real) -> bool {
        t_s >= self.start_s && t_s < self.start_s + self.duration_s
    }
}

/// Arrival rate at time `t_s`, requests/second.
///
/// `base × (1 + amplitude·sin(2πt/period)) × jitter × Π(active factors)`,
/// clamped to be non-negative. Jitter is multiplicative lognormal
/// `exp(σ·Z)`, drawn once per call from the supplied stream; a zero σ draws
/// nothing and the result is a pure function of `t_s`.
pub fn rate_at<R: Rng + ?Sized>(
    profile: &WorkloadProfile,
    shapes: &[ClientAnomalyShape],
    t_s: Real,
    rng: &mut R,
) -> Real {
    debug_assert!(t_s >= 0.0, "time must be non-negative");
    let phase = 2.0 * std::f64::consts::PI * t_s / profile.diurnal_period_s;
    let mut rate = profile.base_rate * (1.0 + profile.diurnal_amplitude * phase.sin());
    if profile.jitter_sigma > 0.0 {
        let z: Real = StandardNormal.sample(rng);
        rate *= (profile.jitter_sigma * z).exp();
    }
    for shape in shapes {
        if shape.active_at(t_s) {
            rate *= shape.factor;
        }
    }
    rate.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use approx::assert_relative_eq;

    fn flat(base: Real) -> WorkloadProfile {
        WorkloadProfile {
            base_rate: base,
            diurnal_amplitude: 0.0,
            diurnal_period_s: 3_600.0,
            jitter_sigma: 0.0,
        }
    }

    #[test]
    fn flat_profile_is_constant() {
        let profile = flat(10.0);
        let mut rng = derive_stream(1, &["test"], 0);
        for t in [0.0, 17.0, 9_999.0] {
            assert_eq!(rate_at(&profile, &[], t, &mut rng), 10.0);
        }
    }

    #[test]
    fn active_spike_multiplies() {
        let profile = flat(10.0);
        let spike = ClientAnomalyShape {
            kind: SurgeKind::Spike,
            factor: 5.0,
            start_s: 100.0,
            duration_s: 60.0,
        };
        let mut rng = derive_stream(1, &["test"], 0);
        assert_eq!(
            rate_at(&profile, std::slice::from_ref(&spike), 130.0, &mut rng),
            50.0
        );
        assert_eq!(
            rate_at(&profile, std::slice::from_ref(&spike), 99.9, &mut rng),
            10.0
        );
        // Interval is half-open.
        assert_eq!(rate_at(&profile, &[spike], 160.0, &mut rng), 10.0);
    }

    #[test]
    fn overlapping_shapes_compose_multiplicatively() {
        let profile = flat(10.0);
        let shapes = [
            ClientAnomalyShape {
                kind: SurgeKind::Step,
                factor: 2.0,
                start_s: 0.0,
                duration_s: 1_000.0,
            },
            ClientAnomalyShape {
                kind: SurgeKind::Spike,
                factor: 3.0,
                start_s: 0.0,
                duration_s: 1_000.0,
            },
        ];
        let mut rng = derive_stream(1, &["test"], 0);
        assert_eq!(rate_at(&profile, &shapes, 500.0, &mut rng), 60.0);
    }

    #[test]
    fn diurnal_cycle_is_periodic_without_jitter() {
        let profile = WorkloadProfile {
            base_rate: 20.0,
            diurnal_amplitude: 0.05,
            diurnal_period_s: 3_600.0,
            jitter_sigma: 0.0,
        };
        let mut rng = derive_stream(1, &["test"], 0);
        let quarter = rate_at(&profile, &[], 900.0, &mut rng);
        assert_relative_eq!(quarter, 21.0, max_relative = 1e-12);
        let again = rate_at(&profile, &[], 900.0 + 3_600.0, &mut rng);
        assert_relative_eq!(quarter, again, max_relative = 1e-12);
    }

    #[test]
    fn shapes_only_raise_the_rate() {
        let profile = WorkloadProfile {
            base_rate: 20.0,
            diurnal_amplitude: 0.05,
            diurnal_period_s: 3_600.0,
            jitter_sigma: 0.05,
        };
        let shape = ClientAnomalyShape {
            kind: SurgeKind::Step,
            factor: 2.0,
            start_s: 0.0,
            duration_s: 1e9,
        };
        for w in 0..200 {
            let t = 10.0 * w as Real;
            let with = rate_at(
                &profile,
                std::slice::from_ref(&shape),
                t,
                &mut derive_stream(7, &["w"], w),
            );
            let without = rate_at(&profile, &[], t, &mut derive_stream(7, &["w"], w));
            assert!(with >= without);
        }
    }

    #[test]
    fn jitter_draw_is_stream_deterministic() {
        let profile = WorkloadProfile {
            base_rate: 20.0,
            diurnal_amplitude: 0.05,
            diurnal_period_s: 3_600.0,
            jitter_sigma: 0.05,
        };
        let a = rate_at(
            &profile,
            &[],
            123.0,
            &mut derive_stream(42, &["app", "workload"], 9),
        );
        let b = rate_at(
            &profile,
            &[],
            123.0,
            &mut derive_stream(42, &["app", "workload"], 9),
        );
        assert_eq!(a, b);
    }
}
