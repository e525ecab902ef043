//! Per-satellite heterogeneity: normalized compute/memory/communication
//! capabilities over a contact window, and the min-envelope training budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ContactWindow;

/// Piecewise-constant compute-rate schedule in FLOP/s. The rate at time `t`
/// is the value of the latest breakpoint at or before `t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComputeSchedule {
    /// (start_s, flops_per_s), sorted by start time.
    pub breakpoints: Vec<(f64, f64)>,
}

impl ComputeSchedule {
    pub fn constant(rate: f64) -> Self {
        ComputeSchedule { breakpoints: vec![(0.0, rate)] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.is_empty() {
            return Err(Error::invalid("compute schedule must be nonempty"));
        }
        if self.breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::invalid("compute schedule breakpoints must be increasing"));
        }
        if self.breakpoints.iter().any(|(_, r)| *r <= 0.0) {
            return Err(Error::invalid("compute rates must be positive"));
        }
        Ok(())
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|(s, _)| *s <= t);
        if idx == 0 {
            self.breakpoints[0].1
        } else {
            self.breakpoints[idx - 1].1
        }
    }

    /// Exact integral of the piecewise-constant rate over [a, b].
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut t = a;
        while t < b {
            let idx = self.breakpoints.partition_point(|(s, _)| *s <= t);
            let rate = if idx == 0 { self.breakpoints[0].1 } else { self.breakpoints[idx - 1].1 };
            let next_break = self
                .breakpoints
                .get(idx)
                .map(|(s, _)| *s)
                .unwrap_or(f64::INFINITY)
                .min(b);
            total += rate * (next_break - t);
            t = next_break;
        }
        total
    }
}

/// Static per-satellite resources and model sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResourceProfile {
    pub compute: ComputeSchedule,
    pub local_epochs: u32,
    pub flops_per_batch: f64,
    pub memory_bytes: f64,
    pub global_model_bytes: f64,
    pub local_model_bytes: f64,
    pub proxy_model_bytes: f64,
    pub dataset_size: usize,
}

impl ResourceProfile {
    pub fn validate(&self) -> Result<()> {
        self.compute.validate()?;
        let positive = [
            self.flops_per_batch,
            self.memory_bytes,
            self.global_model_bytes,
            self.local_model_bytes,
            self.proxy_model_bytes,
        ];
        if positive.iter().any(|v| *v <= 0.0) || self.local_epochs == 0 || self.dataset_size == 0 {
            return Err(Error::invalid("resource profile fields must be positive"));
        }
        if self.proxy_model_bytes > self.local_model_bytes {
            return Err(Error::invalid("proxy model must not exceed the local model size"));
        }
        Ok(())
    }
}

/// Normalized capability components, each clamped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapabilityVector {
    pub cmp: f64,
    pub mem: f64,
    pub com: f64,
}

/// Min-envelope training budget in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Budget(pub f64);

/// Normalizer for the communication integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComNormalizer {
    /// Divide the capacity integral by the local model size.
    LocalModel,
    /// Divide by the proxy model size instead (sensitivity studies).
    ProxyModel,
}

/// Computes the capability vector from a resource profile, a contact window,
/// and a link-capacity trace. The capacity integral uses trapezoid quadrature
/// at `quad_step_s` within each window interval.
pub fn compute_capability(
    profile: &ResourceProfile,
    window: &ContactWindow,
    capacity_bps: impl Fn(f64) -> f64,
    quad_step_s: f64,
    normalizer: ComNormalizer,
) -> Result<CapabilityVector> {
    profile.validate()?;
    if quad_step_s <= 0.0 {
        return Err(Error::invalid("quadrature step must be positive"));
    }
    let mem = (profile.memory_bytes / profile.global_model_bytes).min(1.0);
    if window.is_empty() {
        return Ok(CapabilityVector { cmp: 0.0, mem, com: 0.0 });
    }

    let mut compute_integral = 0.0;
    let mut capacity_integral = 0.0;
    for &(a, b) in &window.intervals {
        compute_integral += profile.compute.integrate(a, b);
        capacity_integral += trapezoid(&capacity_bps, a, b, quad_step_s);
    }
    let workload = profile.local_epochs as f64 * profile.flops_per_batch;
    let com_norm = match normalizer {
        ComNormalizer::LocalModel => profile.local_model_bytes,
        ComNormalizer::ProxyModel => profile.proxy_model_bytes,
    };
    Ok(CapabilityVector {
        cmp: (compute_integral / workload).min(1.0),
        mem,
        // Capacity is bits/s; model sizes are bytes.
        com: (capacity_integral / (8.0 * com_norm)).min(1.0),
    })
}

fn trapezoid(f: &impl Fn(f64) -> f64, a: f64, b: f64, step: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = (((b - a) / step).ceil() as usize).max(1);
    let h = (b - a) / n as f64;
    let mut total = 0.5 * (f(a) + f(b));
    for k in 1..n {
        total += f(a + k as f64 * h);
    }
    total * h
}

/// Min-envelope budget over the capability components.
pub fn budget(v: &CapabilityVector) -> Budget {
    Budget(v.cmp.min(v.mem).min(v.com))
}

/// Experiment budget tiers, largest first.
pub const BUDGET_TIERS: [f64; 4] = [1.0, 0.75, 0.5, 0.25];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn profile() -> ResourceProfile {
        ResourceProfile {
            compute: ComputeSchedule::constant(1e9),
            local_epochs: 1,
            flops_per_batch: 7e11,
            memory_bytes: 4e9,
            global_model_bytes: 4e9,
            local_model_bytes: 1e8,
            proxy_model_bytes: 1e6,
            dataset_size: 1000,
        }
    }

    fn window(total: f64) -> ContactWindow {
        ContactWindow::from_intervals(vec![(0.0, total)]).unwrap()
    }

    #[test]
    fn empty_window_zeroes_time_coupled_components() {
        let v = compute_capability(
            &profile(),
            &ContactWindow::default(),
            |_| 1e8,
            1.0,
            ComNormalizer::LocalModel,
        )
        .unwrap();
        assert_eq!(v.cmp, 0.0);
        assert_eq!(v.com, 0.0);
        assert_relative_eq!(v.mem, 1.0);
    }

    #[test]
    fn memory_ratio_clamps_at_one() {
        let v = compute_capability(&profile(), &window(10.0), |_| 0.1, 1.0, ComNormalizer::LocalModel)
            .unwrap();
        assert_eq!(v.mem, 1.0);
    }

    #[test]
    fn compute_component_saturates_exactly() {
        // 1e9 FLOP/s over 700 s = 7e11 = xi * theta, so cmp clamps at 1.
        let v = compute_capability(&profile(), &window(700.0), |_| 0.1, 1.0, ComNormalizer::LocalModel)
            .unwrap();
        assert_relative_eq!(v.cmp, 1.0);
    }

    #[test]
    fn budget_is_component_minimum() {
        let b = budget(&CapabilityVector { cmp: 0.3, mem: 0.7, com: 0.5 });
        assert_eq!(b.0, 0.3);
        assert_eq!(budget(&CapabilityVector { cmp: 1.0, mem: 1.0, com: 1.0 }).0, 1.0);
        // Permutation symmetry.
        let perms = [(0.3, 0.7, 0.5), (0.5, 0.3, 0.7), (0.7, 0.5, 0.3)];
        for (a, b_, c) in perms {
            assert_eq!(budget(&CapabilityVector { cmp: a, mem: b_, com: c }).0, 0.3);
        }
    }

    #[test]
    fn budget_monotone_in_window_and_resources() {
        let p = profile();
        let small = compute_capability(&p, &window(100.0), |_| 1e7, 1.0, ComNormalizer::LocalModel)
            .unwrap();
        let large = compute_capability(&p, &window(400.0), |_| 1e7, 1.0, ComNormalizer::LocalModel)
            .unwrap();
        assert!(budget(&large).0 >= budget(&small).0);

        let mut rich = p.clone();
        rich.compute = ComputeSchedule::constant(4e9);
        let richer = compute_capability(&rich, &window(100.0), |_| 1e7, 1.0, ComNormalizer::LocalModel)
            .unwrap();
        assert!(budget(&richer).0 >= budget(&small).0);
    }

    #[test]
    fn piecewise_schedule_integrates_exactly() {
        let s = ComputeSchedule { breakpoints: vec![(0.0, 2.0), (10.0, 4.0), (20.0, 1.0)] };
        assert_relative_eq!(s.integrate(0.0, 30.0), 2.0 * 10.0 + 4.0 * 10.0 + 1.0 * 10.0);
        assert_relative_eq!(s.integrate(5.0, 15.0), 2.0 * 5.0 + 4.0 * 5.0);
        assert_eq!(s.rate_at(9.99), 2.0);
        assert_eq!(s.rate_at(10.0), 4.0);
    }
}
