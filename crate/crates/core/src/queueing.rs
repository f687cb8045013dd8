//! Analytic M/M/1 sojourn-time model with a saturation cap.
//!
//! A microservice with effective capacity `C` requests/s serving Poisson
//! arrivals at rate `λ` is modeled as an M/M/1 queue with aggregate service
//! rate `C`. Its stationary sojourn time (queueing plus service) is
//! exponential with rate `C − λ`, so the q-quantile is `−ln(1−q) / (C − λ)`
//! seconds. Reported quantiles are capped at [`SATURATION_CAP_S`]: an
//! overloaded service (`λ ≥ C`) has no stationary distribution and reports
//! exactly the cap for every percentile, and a stable one never reports
//! beyond it. The cap keeps the response to load monotone: raising `λ` or
//! cutting `C` never lowers a reported quantile.

use crate::scalar::{real, Scalar};

/// Ceiling on reported sojourn quantiles, in seconds.
///
/// Stands in for the client-side timeout of a saturated service.
pub const SATURATION_CAP_S: f64 = 10.0;

/// Offered utilization `ρ = λ / C`; infinite when `capacity` is zero.
pub fn utilization<S: Scalar>(capacity: S, lambda: S) -> S {
    if capacity <= S::zero() {
        S::infinity()
    } else {
        lambda / capacity
    }
}

/// Mean stationary sojourn time `1 / (C − λ)` in seconds.
///
/// Requires a stable queue (`λ < C`).
pub fn mean_sojourn_s<S: Scalar>(capacity: S, lambda: S) -> S {
    debug_assert!(lambda < capacity, "mean sojourn requires λ < C");
    S::one() / (capacity - lambda)
}

/// Uncapped q-quantile of the stationary sojourn time, in seconds.
///
/// Requires a stable queue (`λ < C`) and `0 < q < 1`.
pub fn sojourn_quantile_s<S: Scalar>(capacity: S, lambda: S, q: S) -> S {
    debug_assert!(lambda < capacity, "sojourn quantile requires λ < C");
    debug_assert!(
        q > S::zero() && q < S::one(),
        "quantile order must lie in (0, 1)"
    );
    -(S::one() - q).ln() / (capacity - lambda)
}

/// Capped q-quantile of the sojourn time, in seconds.
///
/// Returns `min(−ln(1−q)/(C−λ), cap)` for a stable queue and exactly the
/// cap when `λ ≥ C` or `C = 0`.
pub fn capped_sojourn_quantile_s<S: Scalar>(capacity: S, lambda: S, q: S) -> S {
    let cap = real::<S>(SATURATION_CAP_S);
    if capacity <= S::zero() || lambda >= capacity {
        return cap;
    }
    sojourn_quantile_s(capacity, lambda, q).min(cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn median_at_half_load() {
        // C = 10, λ = 5: p50 = ln 2 / 5 ≈ 138.629 ms.
        let p50: f64 = sojourn_quantile_s(10.0, 5.0, 0.5);
        assert_relative_eq!(p50, 0.138_629_4, max_relative = 1e-6);
    }

    #[test]
    fn tail_at_half_load() {
        // C = 10, λ = 5: p99 = ln 100 / 5 ≈ 921.034 ms.
        let p99: f64 = sojourn_quantile_s(10.0, 5.0, 0.99);
        assert_relative_eq!(p99, 0.921_034_0, max_relative = 1e-6);
    }

    #[test]
    fn degraded_capacity_median() {
        // One vCPU at μ = 10 losing half its cycles leaves C = 5; at λ = 4
        // the median is ln 2 / 1 ≈ 693.1 ms.
        let p50: f64 = sojourn_quantile_s(5.0, 4.0, 0.5);
        assert_relative_eq!(p50, std::f64::consts::LN_2, max_relative = 1e-6);
    }

    #[test]
    fn unstable_queue_reports_the_cap() {
        assert_eq!(capped_sojourn_quantile_s(5.0, 5.0, 0.5), SATURATION_CAP_S);
        assert_eq!(capped_sojourn_quantile_s(5.0, 9.0, 0.99), SATURATION_CAP_S);
        assert_eq!(capped_sojourn_quantile_s(0.0, 1.0, 0.5), SATURATION_CAP_S);
    }

    #[test]
    fn stable_queue_never_exceeds_the_cap() {
        // λ barely below C pushes the closed form past 10 s.
        let p99: f64 = capped_sojourn_quantile_s(5.0, 4.9999, 0.99);
        assert_eq!(p99, SATURATION_CAP_S);
    }

    #[test]
    fn utilization_handles_zero_capacity() {
        assert_eq!(utilization(2.0, 1.0), 0.5);
        assert!(utilization(0.0f64, 1.0f64).is_infinite());
    }

    #[test]
    fn works_at_f32() {
        let p50: f32 = capped_sojourn_quantile_s(10.0f32, 5.0f32, 0.5f32);
        assert_relative_eq!(p50, 0.138_629_4f32, max_relative = 1e-5);
    }
}
