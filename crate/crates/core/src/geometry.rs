//! Elevation angles, line-of-sight indicators, and contact-window extraction.
//!
//! Windows are found by coarse time-stepping of the visibility indicator and
//! bisection refinement of each crossing down to the configured tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbital::{
    ground_position_at_rate, propagate, AssetKind, BodyState, GroundAsset, OrbitalElements,
    PhysicalConstants,
};

/// Thresholds and discretization controls for visibility computations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisibilityConfig {
    /// Minimum satellite-HAP elevation in radians.
    pub min_elev_sat_hap: f64,
    /// Minimum satellite-GS elevation in radians.
    pub min_elev_sat_gs: f64,
    /// Coarse scan step in seconds.
    pub coarse_step_s: f64,
    /// Bisection tolerance for window boundaries in seconds.
    pub refine_tolerance_s: f64,
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        VisibilityConfig {
            min_elev_sat_hap: 5f64.to_radians(),
            min_elev_sat_gs: 5f64.to_radians(),
            coarse_step_s: 1.0,
            refine_tolerance_s: 1e-3,
        }
    }
}

impl VisibilityConfig {
    pub fn validate(&self) -> Result<()> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(0.0..half_pi).contains(&self.min_elev_sat_hap)
            || !(0.0..half_pi).contains(&self.min_elev_sat_gs)
        {
            return Err(Error::invalid("elevation thresholds must lie in [0, pi/2)"));
        }
        if self.coarse_step_s <= 0.0 || self.refine_tolerance_s <= 0.0 {
            return Err(Error::invalid("steps and tolerances must be positive"));
        }
        Ok(())
    }

    pub fn threshold_for(&self, kind: AssetKind) -> f64 {
        match kind {
            AssetKind::Gs => self.min_elev_sat_gs,
            AssetKind::Hap => self.min_elev_sat_hap,
        }
    }
}

/// Which links count toward visibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    /// Direct satellite-GS links only.
    SatGs,
    /// Union of satellite-GS and satellite-HAP links.
    SatHapGs,
}

impl Architecture {
    pub fn admits(&self, kind: AssetKind) -> bool {
        match self {
            Architecture::SatGs => kind == AssetKind::Gs,
            Architecture::SatHapGs => true,
        }
    }
}

/// Disjoint, sorted in-view intervals with their total duration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContactWindow {
    pub intervals: Vec<(f64, f64)>,
    pub total_duration: f64,
}

impl ContactWindow {
    pub fn from_intervals(intervals: Vec<(f64, f64)>) -> Result<Self> {
        let mut prev_end = f64::NEG_INFINITY;
        let mut total = 0.0;
        for &(s, e) in &intervals {
            if !(s < e) {
                return Err(Error::invalid("interval must satisfy start < end"));
            }
            if s < prev_end {
                return Err(Error::invalid("intervals must be sorted and disjoint"));
            }
            prev_end = e;
            total += e - s;
        }
        Ok(ContactWindow { intervals, total_duration: total })
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Earliest in-view time at or after `t`, with the enclosing interval end.
    pub fn next_contact(&self, t: f64) -> Option<(f64, f64)> {
        for &(s, e) in &self.intervals {
            if e > t {
                return Some((s.max(t), e));
            }
        }
        None
    }
}

/// Frame context for visibility evaluation: constants plus the ground-asset
/// rotation rate (sidereal by default, zero for an inertially pinned ground).
#[derive(Debug, Clone)]
pub struct GeometryContext {
    pub consts: PhysicalConstants,
    pub ground_rate: f64,
}

impl GeometryContext {
    pub fn sidereal(consts: PhysicalConstants) -> Self {
        let ground_rate = consts.earth_rotation_rate;
        GeometryContext { consts, ground_rate }
    }

    pub fn inertial(consts: PhysicalConstants) -> Self {
        GeometryContext { consts, ground_rate: 0.0 }
    }

    pub fn asset_position(&self, asset: &GroundAsset, t: f64) -> BodyState {
        ground_position_at_rate(asset, t, &self.consts, self.ground_rate)
    }
}

/// Elevation of `target` above `observer`'s local horizon, in [-pi/2, pi/2].
/// Positive values point toward the observer's zenith.
pub fn elevation(target: &BodyState, observer: &BodyState) -> Result<f64> {
    let obs = observer.position;
    let diff = target.position - obs;
    let obs_norm = obs.norm();
    let diff_norm = diff.norm();
    if obs_norm == 0.0 {
        return Err(Error::DegenerateGeometry("observer at the origin".into()));
    }
    if diff_norm == 0.0 {
        return Err(Error::DegenerateGeometry("target coincides with observer".into()));
    }
    let cosine = (diff.dot(obs) / (diff_norm * obs_norm)).clamp(-1.0, 1.0);
    Ok(std::f64::consts::FRAC_PI_2 - cosine.acos())
}

/// Binary indicator: 1 iff elevation >= threshold.
pub fn visible(target: &BodyState, observer: &BodyState, threshold: f64) -> Result<bool> {
    Ok(elevation(target, observer)? >= threshold)
}

fn union_indicator(
    elem: &OrbitalElements,
    assets: &[GroundAsset],
    cfg: &VisibilityConfig,
    arch: Architecture,
    t: f64,
    ctx: &GeometryContext,
) -> bool {
    let sat = propagate(elem, t, &ctx.consts);
    assets.iter().any(|a| {
        arch.admits(a.kind)
            && visible(&sat, &ctx.asset_position(a, t), cfg.threshold_for(a.kind)).unwrap_or(false)
    })
}

/// Extracts the in-view windows of the union indicator over [0, horizon].
pub fn contact_windows(
    elem: &OrbitalElements,
    assets: &[GroundAsset],
    cfg: &VisibilityConfig,
    horizon: f64,
    arch: Architecture,
    ctx: &GeometryContext,
) -> Result<ContactWindow> {
    cfg.validate()?;
    if horizon <= 0.0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    let ind = |t: f64| union_indicator(elem, assets, cfg, arch, t, ctx);
    let mut intervals = Vec::new();
    let mut t = 0.0;
    let mut prev = ind(0.0);
    let mut start = if prev { Some(0.0) } else { None };
    while t < horizon {
        let next = (t + cfg.coarse_step_s).min(horizon);
        let cur = ind(next);
        if cur != prev {
            let crossing = bisect(&ind, t, next, cur, cfg.refine_tolerance_s);
            if cur {
                start = Some(crossing);
            } else if let Some(s) = start.take() {
                if crossing > s {
                    intervals.push((s, crossing));
                }
            }
            prev = cur;
        }
        t = next;
    }
    if let Some(s) = start {
        if horizon > s {
            intervals.push((s, horizon));
        }
    }
    ContactWindow::from_intervals(intervals)
}

/// Bisects the indicator crossing in (lo, hi] where the indicator at hi is
/// `value_at_hi`, down to `tol` seconds.
fn bisect(ind: &dyn Fn(f64) -> bool, mut lo: f64, mut hi: f64, value_at_hi: bool, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ind(mid) == value_at_hi {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Counts satellites whose union indicator is 1 at time `t`.
pub fn visibility_census(
    elements: &[OrbitalElements],
    assets: &[GroundAsset],
    cfg: &VisibilityConfig,
    arch: Architecture,
    t: f64,
    ctx: &GeometryContext,
) -> (usize, f64) {
    if elements.is_empty() {
        return (0, 0.0);
    }
    let count = elements
        .iter()
        .filter(|e| union_indicator(e, assets, cfg, arch, t, ctx))
        .count();
    (count, count as f64 / elements.len() as f64)
}

/// One row of the visibility report for a (constellation, architecture) pair.
#[derive(Debug, Clone, Serialize)]
pub struct VisibilityStats {
    pub n_sats: usize,
    /// Satellites with at least one direct GS contact within their own period.
    pub direct_visible: usize,
    /// Satellites with at least one contact via any admitted link.
    pub integrated_visible: usize,
    /// Mean direct contact time, averaged over the integrated-reachable set.
    pub mean_window_direct_s: f64,
    /// Mean integrated contact time, averaged over the whole constellation.
    pub mean_window_integrated_s: f64,
}

/// Per-satellite contact totals over each satellite's own orbital period,
/// reduced to the summary statistics reported by the visibility command.
pub fn visibility_stats(
    elements: &[OrbitalElements],
    assets: &[GroundAsset],
    cfg: &VisibilityConfig,
    ctx: &GeometryContext,
) -> Result<VisibilityStats> {
    let mut direct_total = 0.0;
    let mut union_total = 0.0;
    let mut direct_visible = 0usize;
    let mut integrated_visible = 0usize;
    for elem in elements {
        let horizon = elem.period(&ctx.consts);
        let direct = contact_windows(elem, assets, cfg, horizon, Architecture::SatGs, ctx)?;
        let union = contact_windows(elem, assets, cfg, horizon, Architecture::SatHapGs, ctx)?;
        direct_total += direct.total_duration;
        union_total += union.total_duration;
        direct_visible += usize::from(!direct.is_empty());
        integrated_visible += usize::from(!union.is_empty());
    }
    let n = elements.len();
    Ok(VisibilityStats {
        n_sats: n,
        direct_visible,
        integrated_visible,
        mean_window_direct_s: if integrated_visible > 0 {
            direct_total / integrated_visible as f64
        } else {
            0.0
        },
        mean_window_integrated_s: if n > 0 { union_total / n as f64 } else { 0.0 },
    })
}
