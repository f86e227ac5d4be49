//! Particle-only solvers: weakly compressible SPH, implicit incompressible
//! SPH (relaxed Jacobi) and wall-boundary SPH with extrapolated wall
//! pressure.

mod boundary;
mod forces;
mod iisph;
mod wall;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernel::SphKernel;
use crate::neighbor::NeighborGrid;
use crate::particles::ParticleSet;
use crate::scenario::{build_scenario, wave_tank_motion, ScenarioConfig, SeedMode, TankFrame, TankMotion};
use crate::timestep::{cfl_timestep, StepLimits};
use crate::{Error, Result, Vec3, FRAME_RATE};

pub use boundary::BoundaryParticleSet;
pub use forces::{internal_accelerations, total_accelerations};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SphMethod {
    Wcsph,
    Iisph,
    /// Wall-boundary SPH with extrapolated wall pressure.
    Sph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WallSlip {
    NoSlip,
    FreeSlip,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphParams {
    pub rest_density: f64,
    /// Particle spacing `h`; the kernel support is `2h`.
    pub spacing: f64,
    /// Tait exponent.
    pub gamma: f64,
    /// Numerical speed of sound; the Tait stiffness is `ρ₀ c² / γ`.
    pub sound_speed: f64,
    /// Monaghan artificial viscosity.
    pub viscosity_alpha: f64,
    pub jacobi_omega: f64,
    /// IISPH target for the average relative density error.
    pub compression_tolerance: f64,
    pub max_pressure_iterations: usize,
    pub cfl: f64,
    /// Upper bound on the IISPH step, by default the CFL step at the
    /// free-fall speed of the deepest column.
    pub max_dt: f64,
    /// Abort if the maximum compression exceeds this fraction.
    pub abort_compression: f64,
    pub wall_slip: WallSlip,
    pub wall_pressure_extrapolation: bool,
    pub transport_velocity: bool,
    /// Background pressure of the transport-velocity shift, in units of `ρ₀c²`.
    pub background_pressure: f64,
}

impl SphParams {
    /// Defaults for a given spacing and the deepest expected water column.
    pub fn new(spacing: f64, water_height: f64) -> Self {
        let v_max = (2.0 * 9.81 * water_height.max(spacing)).sqrt();
        Self {
            rest_density: 1000.0,
            spacing,
            gamma: 7.0,
            sound_speed: 10.0 * v_max,
            viscosity_alpha: 0.08,
            jacobi_omega: 0.5,
            compression_tolerance: 1e-3,
            max_pressure_iterations: 100,
            cfl: 0.4,
            max_dt: 0.4 * spacing / v_max,
            abort_compression: 0.10,
            wall_slip: WallSlip::NoSlip,
            wall_pressure_extrapolation: true,
            transport_velocity: false,
            background_pressure: 0.05,
        }
    }

    pub fn support(&self) -> f64 {
        2.0 * self.spacing
    }

    pub fn stiffness(&self) -> f64 {
        self.rest_density * self.sound_speed * self.sound_speed / self.gamma
    }

    /// Tait equation of state, negative pressures clamped to zero.
    #[inline]
    pub fn tait_pressure(&self, density: f64) -> f64 {
        (self.stiffness() * ((density / self.rest_density).powf(self.gamma) - 1.0)).max(0.0)
    }

    #[inline]
    pub fn tait_density(&self, pressure: f64) -> f64 {
        self.rest_density * (pressure.max(0.0) / self.stiffness() + 1.0).powf(1.0 / self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rest_density > 0.0) {
            return Err(Error::Config("rest density must be positive".into()));
        }
        if !(self.compression_tolerance > 0.0 && self.compression_tolerance <= 0.05) {
            return Err(Error::Config("compression tolerance must lie in (0, 0.05]".into()));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::Config("particle spacing must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SphStepStats {
    pub dt: f64,
    /// Pressure iterations (IISPH only).
    pub iterations: usize,
    /// Mean of `max(ρ/ρ₀ − 1, 0)` over fluid particles.
    pub avg_density_error: f64,
    pub max_density_error: f64,
}

/// Neighbor lists of the current substep.
#[derive(Clone, Debug, Default)]
pub struct Neighborhoods {
    pub fluid: Vec<Vec<u32>>,
    pub boundary: Vec<Vec<u32>>,
}

#[derive(Clone, Debug)]
pub struct SphState {
    pub method: SphMethod,
    pub params: SphParams,
    pub kernel: SphKernel,
    pub particles: ParticleSet,
    pub boundary: BoundaryParticleSet,
    boundary_grid: NeighborGrid,
    pub neighbors: Neighborhoods,
    pub gravity: Vec3,
    pub motion: Option<TankMotion>,
    /// Particles are clamped into `[0, domain_max]`.
    pub domain_max: Vec3,
    pub time: f64,
    pub steps: usize,
    pub frame: usize,
    pub history: Vec<SphStepStats>,
}

/// Sum of kernel weights over a full lattice around a site.
fn lattice_kernel_sum(kernel: &SphKernel, spacing: f64) -> f64 {
    let r = (kernel.support() / spacing).ceil() as i32;
    let mut s = 0.0;
    for i in -r..=r {
        for j in -r..=r {
            for k in -r..=r {
                s += kernel.w(&(Vec3::new(i as f64, j as f64, k as f64) * spacing));
            }
        }
    }
    s
}

impl SphState {
    pub fn new(method: SphMethod, config: &ScenarioConfig, params: Option<SphParams>) -> Result<Self> {
        let config = ScenarioConfig { seed_mode: SeedMode::Uniform, ..config.clone() };
        let (grid, mut particles) = build_scenario(&config)?;
        let spacing = config.particle_spacing();
        let water_height = config.water_region.max[1] - config.water_region.min[1];
        let params = params.unwrap_or_else(|| SphParams::new(spacing, water_height));
        params.validate()?;
        let kernel = SphKernel::new(params.support());
        // Mass chosen so a full lattice sits exactly at rest density.
        let mass = params.rest_density / lattice_kernel_sum(&kernel, params.spacing);
        particles.mass = mass;
        particles.enable_sph_fields(params.rest_density);
        let boundary = BoundaryParticleSet::for_scenario(&config, &grid, params.spacing, mass, params.rest_density);
        Ok(Self::from_parts(method, params, particles, boundary, config.gravity_vec(), config.motion, grid.extent()))
    }

    pub fn from_parts(
        method: SphMethod,
        params: SphParams,
        mut particles: ParticleSet,
        boundary: BoundaryParticleSet,
        gravity: Vec3,
        motion: Option<TankMotion>,
        domain_max: Vec3,
    ) -> Self {
        let kernel = SphKernel::new(params.support());
        particles.enable_sph_fields(params.rest_density);
        let boundary_grid = NeighborGrid::build(&boundary.positions, params.support());
        let mut s = Self {
            method,
            params,
            kernel,
            particles,
            boundary,
            boundary_grid,
            neighbors: Neighborhoods::default(),
            gravity,
            motion,
            domain_max,
            time: 0.0,
            steps: 0,
            frame: 0,
            history: Vec::new(),
        };
        s.update_neighbors();
        s.compute_density();
        s
    }

    pub fn update_neighbors(&mut self) {
        let grid = NeighborGrid::build(&self.particles.positions, self.params.support());
        self.neighbors.fluid = grid.neighbor_lists(&self.particles.positions);
        self.neighbors.boundary = self.boundary_grid.neighbor_lists(&self.particles.positions);
    }

    pub fn tank_frame(&self) -> Result<TankFrame> {
        wave_tank_motion(self.time, self.motion.as_ref(), self.gravity)
    }

    /// `ρ_i = Σ_j m W_ij + Σ_b m_b W_ib` with the current neighbor lists.
    pub fn compute_density(&mut self) {
        let densities = compute_density(&self.particles, &self.boundary, &self.kernel, &self.neighbors);
        self.particles.density = Some(densities);
    }

    pub fn densities(&self) -> &[f64] {
        self.particles.density.as_deref().expect("SPH fields")
    }

    pub fn pressures(&self) -> &[f64] {
        self.particles.pressure.as_deref().expect("SPH fields")
    }

    pub fn density_errors(&self) -> (f64, f64) {
        let rho0 = self.params.rest_density;
        let d = self.densities();
        if d.is_empty() {
            return (0.0, 0.0);
        }
        let errs = d.iter().map(|&r| (r / rho0 - 1.0).max(0.0));
        let (sum, max) = errs.fold((0.0, 0.0f64), |(s, m), e| (s + e, m.max(e)));
        (sum / d.len() as f64, max)
    }

    /// External (tank-frame) acceleration per particle.
    pub(crate) fn body_accelerations(&self) -> Result<Vec<Vec3>> {
        let frame = self.tank_frame()?;
        Ok(self
            .particles
            .positions
            .par_iter()
            .zip(self.particles.velocities.par_iter())
            .map(|(x, v)| if self.motion.is_some() { frame.acceleration(x, v) } else { frame.gravity })
            .collect())
    }

    pub fn step(&mut self, dt: f64) -> Result<SphStepStats> {
        let stats = match self.method {
            SphMethod::Wcsph => self.step_wcsph(dt)?,
            SphMethod::Iisph => self.step_iisph(dt)?,
            SphMethod::Sph => self.step_sph_wall(dt)?,
        };
        self.time += dt;
        self.steps += 1;
        if self.particles.has_non_finite() {
            return Err(Error::NonFinite { frame: self.frame, step: self.steps, what: "particle state".into() });
        }
        self.history.push(stats);
        Ok(stats)
    }

    /// Weakly compressible step: Tait pressure, symmetric pressure force,
    /// artificial viscosity, symplectic Euler.
    pub fn step_wcsph(&mut self, dt: f64) -> Result<SphStepStats> {
        self.update_neighbors();
        self.compute_density();
        let (avg, max) = self.density_errors();
        if max > self.params.abort_compression {
            return Err(Error::DensityBlowup { fluctuation: 100.0 * max });
        }
        let params = self.params;
        let pressures: Vec<f64> = self.densities().iter().map(|&r| params.tait_pressure(r)).collect();
        self.particles.pressure = Some(pressures);
        let acc = total_accelerations(self)?;
        self.integrate(&acc, dt);
        Ok(SphStepStats { dt, iterations: 0, avg_density_error: avg, max_density_error: max })
    }

    pub fn step_iisph(&mut self, dt: f64) -> Result<SphStepStats> {
        iisph::step(self, dt)
    }

    pub fn step_sph_wall(&mut self, dt: f64) -> Result<SphStepStats> {
        wall::step(self, dt)
    }

    pub(crate) fn integrate(&mut self, acc: &[Vec3], dt: f64) {
        self.particles
            .velocities
            .par_iter_mut()
            .zip(acc.par_iter())
            .for_each(|(v, a)| *v += dt * a);
        let shift = if self.params.transport_velocity { Some(forces::transport_shift(self)) } else { None };
        let vel = &self.particles.velocities;
        self.particles.positions.par_iter_mut().enumerate().for_each(|(i, x)| {
            *x += dt * vel[i];
            if let Some(s) = &shift {
                *x += dt * dt * s[i];
            }
        });
        self.particles.clamp_to_box(&Vec3::zeros(), &self.domain_max);
    }

    /// Largest stable step for the configured method.
    pub fn stable_dt(&self) -> Result<f64> {
        let v = self.particles.max_speed();
        let limits = StepLimits { dt_min: 1e-7, dt_max: 1.0 / FRAME_RATE };
        match self.method {
            SphMethod::Iisph => {
                let lim = StepLimits { dt_max: self.params.max_dt.min(limits.dt_max), ..limits };
                cfl_timestep(v, self.params.spacing, self.params.cfl, lim)
            }
            _ => cfl_timestep(v + self.params.sound_speed, self.params.spacing, self.params.cfl, limits),
        }
    }

    pub fn advance_frame(&mut self) -> Result<Vec<SphStepStats>> {
        let frame_dt = 1.0 / FRAME_RATE;
        let target = (self.frame + 1) as f64 * frame_dt;
        let mut out = Vec::new();
        while self.time < target - 1e-12 {
            let dt = self
                .stable_dt()
                .map_err(|_| Error::NonFinite { frame: self.frame, step: self.steps, what: "max speed".into() })?;
            out.push(self.step(dt.min(target - self.time))?);
        }
        self.time = target;
        self.frame += 1;
        Ok(out)
    }

    /// Damped relaxation: step with velocities scaled down each step, then
    /// zero them. Brings an initial lattice to its compressed equilibrium
    /// under gravity without counting towards the simulated time.
    pub fn settle(&mut self, steps: usize) -> Result<()> {
        let (time, count) = (self.time, self.steps);
        for _ in 0..steps {
            let dt = self.stable_dt()?;
            self.step(dt)?;
            self.time = time;
            for v in self.particles.velocities.iter_mut() {
                *v *= SETTLE_DAMPING;
            }
        }
        for v in self.particles.velocities.iter_mut() {
            *v = Vec3::zeros();
        }
        self.steps = count;
        self.history.clear();
        Ok(())
    }
}

/// Per-step velocity factor used by [`SphState::settle`].
const SETTLE_DAMPING: f64 = 0.95;

/// Density summation over fluid and boundary neighbors.
pub fn compute_density(
    ps: &ParticleSet,
    boundary: &BoundaryParticleSet,
    kernel: &SphKernel,
    neighbors: &Neighborhoods,
) -> Vec<f64> {
    (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let xi = ps.positions[i];
            let mut rho = 0.0;
            for &j in &neighbors.fluid[i] {
                rho += ps.mass * kernel.w(&(xi - ps.positions[j as usize]));
            }
            for &b in &neighbors.boundary[i] {
                rho += boundary.mass * kernel.w(&(xi - boundary.positions[b as usize]));
            }
            rho
        })
        .collect()
}

#[cfg(test)]
mod tests;
