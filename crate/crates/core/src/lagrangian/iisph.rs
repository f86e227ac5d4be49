//! Implicit incompressible SPH: pressure from a relaxed Jacobi solve of the
//! discretized pressure Poisson equation, boundary particles static and
//! carrying the mirrored pressure of the fluid particle they act on. The
//! hydrostatic part of the mirrored pressure does not depend on the unknowns
//! and enters with the non-pressure forces.

use rayon::prelude::*;

use super::forces::total_accelerations;
use super::{SphState, SphStepStats};
use crate::{Error, Result, Vec3};

/// Outcome of the pressure iteration of one step.
#[derive(Clone, Copy, Debug)]
pub(crate) struct JacobiOutcome {
    pub iterations: usize,
    /// Predicted average relative compression after the last sweep.
    pub predicted_error: f64,
}

pub(crate) fn step(state: &mut SphState, dt: f64) -> Result<SphStepStats> {
    state.update_neighbors();
    state.compute_density();
    let (avg, max) = state.density_errors();
    if max > state.params.abort_compression {
        return Err(Error::DensityBlowup { fluctuation: 100.0 * max });
    }

    // Non-pressure accelerations: evaluate the force pipeline with zero pressure.
    let previous = state.particles.pressure.take().unwrap_or_else(|| vec![0.0; state.particles.len()]);
    state.particles.pressure = Some(vec![0.0; state.particles.len()]);
    let a_nonp = total_accelerations(state)?;
    state.particles.pressure = Some(previous.iter().map(|p| 0.5 * p).collect());

    let outcome = solve_pressure(state, &a_nonp, dt);
    log::trace!("iisph: {} iterations, predicted error {:.2e}", outcome.iterations, outcome.predicted_error);

    let a_p = pressure_accelerations(state);
    let acc: Vec<Vec3> = a_nonp.iter().zip(&a_p).map(|(a, b)| a + b).collect();
    state.integrate(&acc, dt);
    Ok(SphStepStats { dt, iterations: outcome.iterations, avg_density_error: avg, max_density_error: max })
}

/// Pressure-gradient acceleration only (no viscosity, no body force).
fn pressure_accelerations(state: &SphState) -> Vec<Vec3> {
    let ps = &state.particles;
    let rho = state.densities();
    let p = state.pressures();
    let k = &state.kernel;
    let b = &state.boundary;
    (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let xi = ps.positions[i];
            let pi = p[i] / (rho[i] * rho[i]);
            let mut a = Vec3::zeros();
            for &j in &state.neighbors.fluid[i] {
                let j = j as usize;
                if j != i {
                    a -= ps.mass * (pi + p[j] / (rho[j] * rho[j])) * k.grad(&(xi - ps.positions[j]));
                }
            }
            for &bj in &state.neighbors.boundary[i] {
                a -= b.mass * 2.0 * pi * k.grad(&(xi - b.positions[bj as usize]));
            }
            a
        })
        .collect()
}

pub(crate) fn solve_pressure(state: &mut SphState, a_nonp: &[Vec3], dt: f64) -> JacobiOutcome {
    let n = state.particles.len();
    let prm = state.params;
    let rho0 = prm.rest_density;
    let dt2 = dt * dt;
    let mass = state.particles.mass;
    let bmass = state.boundary.mass;
    let k = state.kernel;
    let pos = &state.particles.positions;
    let bpos = &state.boundary.positions;
    let nb = &state.neighbors;
    let rho = state.particles.density.as_deref().expect("SPH fields");

    let v_adv: Vec<Vec3> = state.particles.velocities.iter().zip(a_nonp).map(|(v, a)| v + dt * a).collect();

    // d_ii, advected density and diagonal a_ii.
    let d_ii: Vec<Vec3> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = pos[i];
            let mut d = Vec3::zeros();
            for &j in &nb.fluid[i] {
                let j = j as usize;
                if j != i {
                    d -= mass * k.grad(&(xi - pos[j]));
                }
            }
            for &b in &nb.boundary[i] {
                d -= 2.0 * bmass * k.grad(&(xi - bpos[b as usize]));
            }
            d * dt2 / (rho[i] * rho[i])
        })
        .collect();
    let (rho_adv, a_ii): (Vec<f64>, Vec<f64>) = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = pos[i];
            let mut r = rho[i];
            let mut a = 0.0;
            for &j in &nb.fluid[i] {
                let j = j as usize;
                if j == i {
                    continue;
                }
                let g = k.grad(&(xi - pos[j]));
                r += dt * mass * (v_adv[i] - v_adv[j]).dot(&g);
                // d_ji = -dt² m_i / ρ_i² ∇W_ji = dt² m / ρ_i² ∇W_ij
                let d_ji = g * (dt2 * mass / (rho[i] * rho[i]));
                a += mass * (d_ii[i] - d_ji).dot(&g);
            }
            for &b in &nb.boundary[i] {
                let g = k.grad(&(xi - bpos[b as usize]));
                r += dt * bmass * v_adv[i].dot(&g);
                a += bmass * d_ii[i].dot(&g);
            }
            (r, a)
        })
        .unzip();

    let mut p = state.particles.pressure.take().unwrap_or_else(|| vec![0.0; n]);
    let omega = prm.jacobi_omega;
    let mut iterations = 0;
    let mut predicted_error = 0.0;
    while iterations < prm.max_pressure_iterations {
        // Σ_j d_ij p_j
        let sum_d: Vec<Vec3> = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = pos[i];
                let mut s = Vec3::zeros();
                for &j in &nb.fluid[i] {
                    let j = j as usize;
                    if j != i {
                        s -= (mass * p[j] / (rho[j] * rho[j])) * k.grad(&(xi - pos[j]));
                    }
                }
                s * dt2
            })
            .collect();
        let updated: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = pos[i];
                let mut s = 0.0;
                for &j in &nb.fluid[i] {
                    let j = j as usize;
                    if j == i {
                        continue;
                    }
                    let g = k.grad(&(xi - pos[j]));
                    let d_ji = g * (dt2 * mass / (rho[i] * rho[i]));
                    let d_jk_pk = sum_d[j] - d_ji * p[i];
                    s += mass * (sum_d[i] - d_ii[j] * p[j] - d_jk_pk).dot(&g);
                }
                for &b in &nb.boundary[i] {
                    s += bmass * sum_d[i].dot(&k.grad(&(xi - bpos[b as usize])));
                }
                let predicted = rho_adv[i] + a_ii[i] * p[i] + s;
                let err = if p[i] > 0.0 || predicted > rho0 { (predicted / rho0 - 1.0).max(0.0) } else { 0.0 };
                let next = if a_ii[i].abs() > 1e-12 {
                    ((1.0 - omega) * p[i] + omega / a_ii[i] * (rho0 - rho_adv[i] - s)).max(0.0)
                } else {
                    0.0
                };
                (next, err)
            })
            .collect();
        iterations += 1;
        predicted_error = updated.iter().map(|u| u.1).sum::<f64>() / n.max(1) as f64;
        for (pi, u) in p.iter_mut().zip(&updated) {
            *pi = u.0;
        }
        if iterations >= 2 && predicted_error <= prm.compression_tolerance {
            break;
        }
    }
    state.particles.pressure = Some(p);
    JacobiOutcome { iterations, predicted_error }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Aabb, ScenarioConfig, ScenarioName, SeedMode};

    /// Density after one explicit update with the solved pressures.
    fn explicit_density(state: &SphState, a_nonp: &[Vec3], dt: f64) -> Vec<f64> {
        let a_p = pressure_accelerations(state);
        let v: Vec<Vec3> = (0..state.particles.len()).map(|i| state.particles.velocities[i] + dt * (a_nonp[i] + a_p[i])).collect();
        let ps = &state.particles;
        let k = &state.kernel;
        (0..ps.len())
            .map(|i| {
                let xi = ps.positions[i];
                let mut r = state.densities()[i];
                for &j in &state.neighbors.fluid[i] {
                    let j = j as usize;
                    r += dt * ps.mass * (v[i] - v[j]).dot(&k.grad(&(xi - ps.positions[j])));
                }
                for &b in &state.neighbors.boundary[i] {
                    r += dt * state.boundary.mass * v[i].dot(&k.grad(&(xi - state.boundary.positions[b as usize])));
                }
                r
            })
            .collect()
    }

    #[test]
    fn solved_pressure_meets_the_tolerance() {
        let config = ScenarioConfig {
            name: ScenarioName::Dam,
            domain_size: [0.1, 0.3, 0.1],
            water_region: Aabb::new([0.0, 0.0, 0.0], [0.1, 0.05, 0.1]),
            obstacle: None,
            gravity: crate::GRAVITY,
            motion: None,
            grid_dims: [10, 30, 10],
            seed_mode: SeedMode::Uniform,
            rng_seed: 0,
        };
        let mut state = SphState::new(super::super::SphMethod::Iisph, &config, None).unwrap();
        for _ in 0..10 {
            state.step(0.002).unwrap();
        }
        state.update_neighbors();
        state.compute_density();
        let n = state.particles.len();
        state.particles.pressure = Some(vec![0.0; n]);
        let a_nonp = total_accelerations(&state).unwrap();
        state.particles.pressure = Some(vec![0.0; n]);
        state.params.compression_tolerance = 1e-4;
        state.params.max_pressure_iterations = 1000;
        let out = solve_pressure(&mut state, &a_nonp, 0.002);
        let rho = explicit_density(&state, &a_nonp, 0.002);
        let avg = rho.iter().map(|r| (r / 1000.0 - 1.0).max(0.0)).sum::<f64>() / n as f64;
        assert!(out.iterations < 1000);
        assert!(avg < 2e-4, "explicit {avg}, predicted {}", out.predicted_error);
    }
}
