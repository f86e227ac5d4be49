use crate::{Error, Result, FRAME_RATE};

/// Bounds applied to adaptive substeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLimits {
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for StepLimits {
    fn default() -> Self {
        Self { dt_min: 1e-6, dt_max: 1.0 / FRAME_RATE }
    }
}

/// `Δt = cfl · spacing / max_speed`, clamped to `[dt_min, dt_max]`.
///
/// `max_speed` is whatever signal speed the caller tracks (flow speed, or
/// flow speed plus sound speed for weakly compressible SPH).
pub fn cfl_timestep(max_speed: f64, spacing: f64, cfl: f64, limits: StepLimits) -> Result<f64> {
    if !max_speed.is_finite() {
        return Err(Error::NonFinite { frame: 0, step: 0, what: format!("max speed {max_speed}") });
    }
    let dt = cfl * spacing / max_speed.max(1e-12);
    Ok(dt.clamp(limits.dt_min, limits.dt_max))
}
