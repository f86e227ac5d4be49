//! Wall-boundary SPH: wall particles take a pressure extrapolated from the
//! surrounding fluid (plus the hydrostatic correction from the body force),
//! then the step proceeds as weakly compressible SPH.

use rayon::prelude::*;

use super::forces::total_accelerations;
use super::{SphStepStats, SphState, WallSlip};
use crate::neighbor::NeighborGrid;
use crate::{Error, Result, Vec3};

pub(crate) fn extrapolate_wall_state(state: &mut SphState) -> Result<()> {
    let prm = state.params;
    let frame = state.tank_frame()?;
    let fluid_grid = NeighborGrid::build(&state.particles.positions, prm.support());
    let ps = &state.particles;
    let rho = ps.density.as_deref().expect("SPH fields");
    let p = ps.pressure.as_deref().expect("SPH fields");
    let k = &state.kernel;
    let rotating = state.motion.is_some();
    let results: Vec<(f64, f64, Vec3)> = state
        .boundary
        .positions
        .par_iter()
        .map(|xw| {
            let mut wsum = 0.0;
            let mut psum = 0.0;
            let mut rsum = Vec3::zeros();
            let mut vsum = Vec3::zeros();
            fluid_grid.for_each_neighbor(xw, |f, r_wf| {
                let w = k.w(&r_wf);
                wsum += w;
                psum += p[f] * w;
                rsum += rho[f] * r_wf * w;
                vsum += ps.velocities[f] * w;
            });
            if wsum <= 0.0 {
                return (0.0, prm.rest_density, Vec3::zeros());
            }
            let body = if rotating { frame.acceleration(xw, &Vec3::zeros()) } else { frame.gravity };
            let pw = if prm.wall_pressure_extrapolation { ((psum + body.dot(&rsum)) / wsum).max(0.0) } else { 0.0 };
            let vw = match prm.wall_slip {
                WallSlip::NoSlip => -vsum / wsum,
                WallSlip::FreeSlip => Vec3::zeros(),
            };
            (pw, prm.tait_density(pw), vw)
        })
        .collect();
    for (i, (pw, rw, vw)) in results.into_iter().enumerate() {
        state.boundary.pressure[i] = pw;
        state.boundary.density[i] = rw;
        state.boundary.velocity[i] = vw;
    }
    Ok(())
}

pub(crate) fn step(state: &mut SphState, dt: f64) -> Result<SphStepStats> {
    state.update_neighbors();
    state.compute_density();
    let (avg, max) = state.density_errors();
    if max > state.params.abort_compression {
        return Err(Error::DensityBlowup { fluctuation: 100.0 * max });
    }
    let prm = state.params;
    let pressures: Vec<f64> = state.densities().iter().map(|&r| prm.tait_pressure(r)).collect();
    state.particles.pressure = Some(pressures);
    extrapolate_wall_state(state)?;
    let acc = total_accelerations(state)?;
    state.integrate(&acc, dt);
    Ok(SphStepStats { dt, iterations: 0, avg_density_error: avg, max_density_error: max })
}
