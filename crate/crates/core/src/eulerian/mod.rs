//! Grid-based solvers: marker particles (MP), level set (LS), FLIP and APIC,
//! all sharing one pressure projection.

pub mod advect;
pub mod level_set;
pub mod pressure;
pub mod transfer;

use serde::{Deserialize, Serialize};

use crate::grid::{CellFlag, MacGrid};
use crate::particles::ParticleSet;
use crate::scenario::{build_scenario, wave_tank_motion, ScenarioConfig, TankFrame, TankMotion};
use crate::timestep::{cfl_timestep, StepLimits};
use crate::{Error, Result, Vec3, FRAME_RATE};

pub use level_set::LevelSetField;
pub use pressure::{pressure_project, PressureParams, PressureSolveStats, Preconditioner};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EulerianMethod {
    Mp,
    Ls,
    Flip,
    Apic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerianParams {
    /// FLIP fraction of the FLIP/PIC blend.
    pub flip_blend: f64,
    pub pressure: PressureParams,
    /// Substeps between level-set reinitializations.
    pub reinit_interval: usize,
    /// Level-set refinement relative to the simulation grid.
    pub level_set_refinement: usize,
    pub cfl: f64,
    pub extrapolation_layers: usize,
    /// Check the post-projection divergence bound on every substep.
    pub check_divergence: bool,
}

impl Default for EulerianParams {
    fn default() -> Self {
        Self {
            flip_blend: 0.95,
            pressure: PressureParams::default(),
            reinit_interval: 5,
            level_set_refinement: 2,
            cfl: 1.0,
            extrapolation_layers: 4,
            check_divergence: cfg!(debug_assertions),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EulerianState {
    pub method: EulerianMethod,
    pub params: EulerianParams,
    pub grid: MacGrid,
    /// Markers (MP) or FLIP/APIC particles; empty for LS.
    pub particles: ParticleSet,
    pub level_set: Option<LevelSetField>,
    pub gravity: Vec3,
    pub motion: Option<TankMotion>,
    pub time: f64,
    pub steps: usize,
    pub frame: usize,
    pub solves: Vec<PressureSolveStats>,
}

impl EulerianState {
    pub fn new(method: EulerianMethod, config: &ScenarioConfig, params: EulerianParams) -> Result<Self> {
        let (grid, mut particles) = build_scenario(config)?;
        let mut level_set = None;
        if method == EulerianMethod::Ls {
            let mut ls = LevelSetField::for_grid(&grid, params.level_set_refinement);
            ls.fill_box(&config.water_region);
            level_set = Some(ls);
            particles = ParticleSet::from_positions(Vec::new(), particles.mass);
        }
        if method == EulerianMethod::Apic {
            particles.enable_affine();
        }
        let mut state = Self {
            method,
            params,
            grid,
            particles,
            level_set,
            gravity: config.gravity_vec(),
            motion: config.motion,
            time: 0.0,
            steps: 0,
            frame: 0,
            solves: Vec::new(),
        };
        state.classify_cells();
        Ok(state)
    }

    /// Fluid volume: particle count × particle volume for particle-carrying
    /// methods, integrated `φ < 0` for LS.
    pub fn fluid_volume(&self) -> f64 {
        match &self.level_set {
            Some(ls) => ls.volume(),
            None => self.particles.len() as f64 * (0.5 * self.grid.cell_size).powi(3),
        }
    }

    /// Mark non-solid cells FLUID if they hold a particle (or `φ < 0` at the
    /// cell center for LS), AIR otherwise.
    pub fn classify_cells(&mut self) {
        let grid = &mut self.grid;
        for f in grid.flags.iter_mut() {
            if *f != CellFlag::Solid {
                *f = CellFlag::Air;
            }
        }
        match &self.level_set {
            Some(ls) => {
                for idx in 0..grid.cell_count() {
                    if grid.flags[idx] == CellFlag::Solid {
                        continue;
                    }
                    let (i, j, k) = grid.cell_coords(idx);
                    if ls.sample(&grid.cell_center(i, j, k)) < 0.0 {
                        grid.flags[idx] = CellFlag::Fluid;
                    }
                }
            }
            None => {
                let dx = grid.cell_size;
                for p in &self.particles.positions {
                    let c = [0, 1, 2].map(|a| ((p[a] / dx).floor().max(0.0) as usize).min(grid.dims()[a] - 1));
                    let idx = grid.cell_index(c[0], c[1], c[2]);
                    if grid.flags[idx] != CellFlag::Solid {
                        grid.flags[idx] = CellFlag::Fluid;
                    }
                }
            }
        }
    }

    fn tank_frame(&self) -> Result<TankFrame> {
        wave_tank_motion(self.time, self.motion.as_ref(), self.gravity)
    }

    /// Body forces on every face that borders fluid.
    fn apply_body_forces(&mut self, dt: f64) -> Result<()> {
        let frame = self.tank_frame()?;
        let rotating = self.motion.is_some();
        let snapshot = rotating.then(|| self.grid.clone());
        let grid = &mut self.grid;
        for axis in 0..3 {
            let [fx, fy, fz] = grid.face_dims(axis);
            for k in 0..fz {
                for j in 0..fy {
                    for i in 0..fx {
                        if !grid.face_touches_fluid(axis, i, j, k) {
                            continue;
                        }
                        let acc = match &snapshot {
                            Some(snap) => {
                                let x = grid.face_position(axis, i, j, k);
                                frame.acceleration(&x, &snap.sample_velocity(&x))[axis]
                            }
                            None => frame.gravity[axis],
                        };
                        let idx = grid.face_index(axis, i, j, k);
                        grid.component_mut(axis)[idx] += dt * acc;
                    }
                }
            }
        }
        Ok(())
    }

    fn project(&mut self, dt: f64) -> Result<PressureSolveStats> {
        self.grid.enforce_solid_boundaries();
        let stats = pressure_project(&mut self.grid, dt, &self.params.pressure)?;
        if self.params.check_divergence {
            assert!(
                stats.relative_divergence <= self.params.pressure.tolerance * 1.0001,
                "post-projection divergence {} above bound",
                stats.relative_divergence
            );
        }
        self.grid.extrapolate_velocity(self.params.extrapolation_layers);
        self.grid.enforce_solid_boundaries();
        Ok(stats)
    }

    /// Move particles through the current grid velocity, keep them inside
    /// the box and out of solid cells.
    fn advect_particles(&mut self, dt: f64) {
        use rayon::prelude::*;
        let grid = &self.grid;
        let ext = grid.extent();
        let margin = 1e-6 * grid.cell_size;
        self.particles.positions.par_iter_mut().for_each(|p| {
            let mut x = advect::trace_forward(grid, p, dt);
            for a in 0..3 {
                x[a] = x[a].clamp(margin, ext[a] - margin);
            }
            *p = push_out_of_solid(grid, x);
        });
    }

    /// One substep of the configured method.
    pub fn step(&mut self, dt: f64) -> Result<PressureSolveStats> {
        let stats = match self.method {
            EulerianMethod::Mp => self.step_mp(dt)?,
            EulerianMethod::Ls => self.step_ls(dt)?,
            EulerianMethod::Flip => self.step_flip(dt)?,
            EulerianMethod::Apic => self.step_apic(dt)?,
        };
        self.time += dt;
        self.steps += 1;
        if self.grid.has_non_finite() || self.particles.has_non_finite() {
            return Err(Error::NonFinite { frame: self.frame, step: self.steps, what: "velocity".into() });
        }
        self.solves.push(stats);
        Ok(stats)
    }

    /// Marker particles: markers define fluid cells, the grid carries velocity.
    pub fn step_mp(&mut self, dt: f64) -> Result<PressureSolveStats> {
        self.classify_cells();
        self.grid.extrapolate_velocity(self.params.extrapolation_layers);
        self.grid.enforce_solid_boundaries();
        advect::advect_velocity(&mut self.grid, dt);
        self.apply_body_forces(dt)?;
        let stats = self.project(dt)?;
        self.advect_particles(dt);
        transfer::grid_to_particles_pic(&self.grid, &mut self.particles);
        Ok(stats)
    }

    /// Level set on the refined grid; reinitialized every few substeps.
    pub fn step_ls(&mut self, dt: f64) -> Result<PressureSolveStats> {
        self.classify_cells();
        self.grid.extrapolate_velocity(self.params.extrapolation_layers);
        self.grid.enforce_solid_boundaries();
        let ls = self.level_set.as_mut().expect("level-set state");
        ls.advect(&self.grid, dt);
        if self.params.reinit_interval > 0 && (self.steps + 1) % self.params.reinit_interval == 0 {
            ls.reinitialize();
        }
        advect::advect_velocity(&mut self.grid, dt);
        self.classify_cells();
        self.apply_body_forces(dt)?;
        self.project(dt)
    }

    pub fn step_flip(&mut self, dt: f64) -> Result<PressureSolveStats> {
        self.hybrid_step(dt, false)
    }

    pub fn step_apic(&mut self, dt: f64) -> Result<PressureSolveStats> {
        self.hybrid_step(dt, true)
    }

    fn hybrid_step(&mut self, dt: f64, apic: bool) -> Result<PressureSolveStats> {
        self.classify_cells();
        transfer::particles_to_grid(&mut self.grid, &self.particles, apic);
        self.grid.extrapolate_velocity(self.params.extrapolation_layers);
        self.grid.enforce_solid_boundaries();
        let old = (!apic).then(|| self.grid.clone());
        self.apply_body_forces(dt)?;
        let stats = self.project(dt)?;
        match old {
            Some(old) => transfer::grid_to_particles_flip(&self.grid, &old, &mut self.particles, self.params.flip_blend),
            None => transfer::grid_to_particles_apic(&self.grid, &mut self.particles),
        }
        self.advect_particles(dt);
        Ok(stats)
    }

    /// Signal speed for the CFL condition: grid speed plus the speed a
    /// parcel can pick up falling one substep (`√(5·dx·|g|)`).
    pub fn cfl_speed(&self) -> f64 {
        let frame = self.tank_frame().map(|f| f.gravity).unwrap_or(self.gravity);
        let mut speed = self.grid.max_speed().max(self.particles.max_speed());
        speed += (5.0 * self.grid.cell_size * frame.norm()).sqrt();
        speed
    }

    /// Advance to the next frame boundary with CFL-limited substeps.
    /// Returns the pressure statistics of every substep taken.
    pub fn advance_frame(&mut self) -> Result<Vec<PressureSolveStats>> {
        let frame_dt = 1.0 / FRAME_RATE;
        let target = (self.frame + 1) as f64 * frame_dt;
        let mut out = Vec::new();
        while self.time < target - 1e-12 {
            let remaining = target - self.time;
            let limits = StepLimits { dt_min: 1e-6, dt_max: frame_dt };
            let dt = cfl_timestep(self.cfl_speed(), self.grid.cell_size, self.params.cfl, limits).map_err(|_| {
                Error::NonFinite { frame: self.frame, step: self.steps, what: "max speed".into() }
            })?;
            let dt = dt.min(remaining);
            out.push(self.step(dt)?);
        }
        self.time = target;
        self.frame += 1;
        Ok(out)
    }
}

/// Move a point that landed inside a solid cell to the nearest face of that
/// cell that opens onto a non-solid neighbor.
fn push_out_of_solid(grid: &MacGrid, x: Vec3) -> Vec3 {
    let dx = grid.cell_size;
    let c = [0, 1, 2].map(|a| ((x[a] / dx).floor().max(0.0) as usize).min(grid.dims()[a] - 1));
    if grid.flags[grid.cell_index(c[0], c[1], c[2])] != CellFlag::Solid {
        return x;
    }
    let mut best: Option<(f64, Vec3)> = None;
    for axis in 0..3 {
        for dir in [-1isize, 1] {
            let mut n = c.map(|v| v as isize);
            n[axis] += dir;
            if grid.flag_at(n[0], n[1], n[2]) == CellFlag::Solid {
                continue;
            }
            let face = if dir < 0 { c[axis] as f64 * dx } else { (c[axis] + 1) as f64 * dx };
            let d = (x[axis] - face).abs();
            let mut y = x;
            y[axis] = face + dir as f64 * 1e-6 * dx;
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, y));
            }
        }
    }
    best.map_or(x, |(_, y)| y)
}
