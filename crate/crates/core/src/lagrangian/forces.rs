use rayon::prelude::*;

use super::{SphMethod, SphState, WallSlip};
use crate::{Result, Vec3};

/// Monaghan artificial viscosity term `Π_ij` (zero for separating pairs).
#[inline]
pub(crate) fn artificial_viscosity(alpha: f64, c: f64, h: f64, rho_i: f64, rho_j: f64, xij: &Vec3, vij: &Vec3) -> f64 {
    let vx = vij.dot(xij);
    if vx >= 0.0 {
        return 0.0;
    }
    let rho_bar = 0.5 * (rho_i + rho_j);
    -alpha * c * h * vx / (rho_bar * (xij.norm_squared() + 0.01 * h * h))
}

/// Accelerations from fluid–fluid pair forces only (symmetric pressure
/// gradient plus artificial viscosity). These cancel pairwise.
pub fn internal_accelerations(state: &SphState) -> Vec<Vec3> {
    let ps = &state.particles;
    let rho = state.densities();
    let p = state.pressures();
    let k = &state.kernel;
    let prm = &state.params;
    let h = 0.5 * prm.support();
    (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let xi = ps.positions[i];
            let vi = ps.velocities[i];
            let pi = p[i] / (rho[i] * rho[i]);
            let mut a = Vec3::zeros();
            for &j in &state.neighbors.fluid[i] {
                let j = j as usize;
                if j == i {
                    continue;
                }
                let xij = xi - ps.positions[j];
                let grad = k.grad(&xij);
                let pj = p[j] / (rho[j] * rho[j]);
                let visc = artificial_viscosity(prm.viscosity_alpha, prm.sound_speed, h, rho[i], rho[j], &xij, &(vi - ps.velocities[j]));
                a -= ps.mass * (pi + pj + visc) * grad;
            }
            a
        })
        .collect()
}

/// Pressure (and, for no-slip walls, viscous) acceleration from boundary
/// particles. Without extrapolated wall pressure the fluid pressure is
/// mirrored onto the wall particle with a hydrostatic correction,
/// `p_b = p_i + ρ_i a_body·(x_b − x_i)`; without the correction the wall
/// half of the kernel carries no pressure gradient and wall-adjacent
/// particles sink.
pub(crate) fn boundary_accelerations(state: &SphState, body: &[Vec3]) -> Vec<Vec3> {
    let ps = &state.particles;
    let b = &state.boundary;
    let rho = state.densities();
    let p = state.pressures();
    let k = &state.kernel;
    let prm = &state.params;
    let h = 0.5 * prm.support();
    let wall = state.method == SphMethod::Sph;
    (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let xi = ps.positions[i];
            let pi = p[i] / (rho[i] * rho[i]);
            let mut a = Vec3::zeros();
            for &bj in &state.neighbors.boundary[i] {
                let bj = bj as usize;
                let xib = xi - b.positions[bj];
                let grad = k.grad(&xib);
                if wall {
                    let pb = b.pressure[bj] / (b.density[bj] * b.density[bj]);
                    let mut coeff = pi + pb;
                    if prm.wall_slip == WallSlip::NoSlip {
                        let vib = ps.velocities[i] - b.velocity[bj];
                        coeff += artificial_viscosity(prm.viscosity_alpha, prm.sound_speed, h, rho[i], b.density[bj], &xib, &vib);
                    }
                    a -= b.mass * coeff * grad;
                } else {
                    let pb = (p[i] - rho[i] * body[i].dot(&xib)).max(0.0);
                    a -= b.mass * (p[i] + pb) / (rho[i] * rho[i]) * grad;
                }
            }
            a
        })
        .collect()
}

/// Body + internal + boundary accelerations for the current state.
pub fn total_accelerations(state: &SphState) -> Result<Vec<Vec3>> {
    let body = state.body_accelerations()?;
    let internal = internal_accelerations(state);
    let wall = boundary_accelerations(state, &body);
    Ok(body.into_iter().zip(internal).zip(wall).map(|((a, b), c)| a + b + c).collect())
}

/// Background-pressure shift of the transport-velocity formulation, applied
/// to particles with full kernel support only.
pub(crate) fn transport_shift(state: &SphState) -> Vec<Vec3> {
    let ps = &state.particles;
    let rho = state.densities();
    let k = &state.kernel;
    let prm = &state.params;
    let pb = prm.background_pressure * prm.rest_density * prm.sound_speed * prm.sound_speed;
    (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let xi = ps.positions[i];
            let vi = ps.mass / rho[i];
            let mut fill = 0.0;
            let mut a = Vec3::zeros();
            for &j in &state.neighbors.fluid[i] {
                let j = j as usize;
                let xij = xi - ps.positions[j];
                let vj = ps.mass / rho[j];
                fill += vj * k.w(&xij);
                if j != i {
                    a -= (pb / ps.mass) * (vi * vi + vj * vj) * k.grad(&xij);
                }
            }
            for &b in &state.neighbors.boundary[i] {
                fill += state.boundary.mass / prm.rest_density * k.w(&(xi - state.boundary.positions[b as usize]));
            }
            if fill >= 0.95 {
                a
            } else {
                Vec3::zeros()
            }
        })
        .collect()
}
