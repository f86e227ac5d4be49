//! The two benchmark scenarios (breaking dam with obstacle, sloshing wave
//! tank) and their initial particle sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{CellFlag, MacGrid};
use crate::particles::ParticleSet;
use crate::{Error, Mat3, Result, Vec3, GRAVITY};

pub const WATER_DENSITY: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    Dam,
    Wave,
}

impl std::str::FromStr for ScenarioName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dam" => Ok(Self::Dam),
            "wave" => Ok(Self::Wave),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedMode {
    /// Regular 2³ sub-cell lattice (particle methods).
    Uniform,
    /// Lattice plus ±¼ cell uniform jitter per axis (grid methods).
    Jittered,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|a| self.max[a] <= self.min[a])
    }

    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (0..3).map(|a| self.max[a] - self.min[a]).product()
        }
    }

    pub fn inside(&self, outer: &[f64; 3]) -> bool {
        (0..3).all(|a| self.min[a] >= 0.0 && self.max[a] <= outer[a] + 1e-12)
    }

    /// Open-interior overlap test; touching faces do not count.
    pub fn overlaps(&self, other: &Aabb) -> bool {
        !self.is_empty() && !other.is_empty() && (0..3).all(|a| self.min[a] < other.max[a] && other.min[a] < self.max[a])
    }
}

/// Periodic rotation of the wave tank about a horizontal axis (z) through
/// `axis_point`: `θ(t) = amplitude · sin(2πt / period)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TankMotion {
    pub amplitude_rad: f64,
    pub period_s: f64,
    pub axis_point: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    pub domain_size: [f64; 3],
    pub water_region: Aabb,
    #[serde(default)]
    pub obstacle: Option<Aabb>,
    pub gravity: [f64; 3],
    #[serde(default)]
    pub motion: Option<TankMotion>,
    pub grid_dims: [usize; 3],
    pub seed_mode: SeedMode,
    pub rng_seed: u64,
}

/// Grid dimensions of the 1x configurations; other scales multiply these.
pub const DAM_BASE_DIMS: [usize; 3] = [80, 75, 25];
pub const WAVE_BASE_DIMS: [usize; 3] = [75, 42, 5];

impl ScenarioConfig {
    /// Breaking dam: 3.22 × 1 × 1 m tank, 1.23 × 0.55 × 1.0 m water column
    /// against the x = 0 wall, 0.16 × 0.4 × 0.16 m obstacle downstream.
    pub fn dam(scale: usize) -> Self {
        Self {
            name: ScenarioName::Dam,
            domain_size: [3.22, 1.0, 1.0],
            water_region: Aabb::new([0.0, 0.0, 0.0], [1.23, 0.55, 1.0]),
            obstacle: Some(Aabb::new([2.3965, 0.0, 0.295], [2.5565, 0.4, 0.455])),
            gravity: GRAVITY,
            motion: None,
            grid_dims: DAM_BASE_DIMS.map(|d| d * scale),
            seed_mode: SeedMode::Jittered,
            rng_seed: 0,
        }
    }

    /// Sloshing tank: 0.9 × 0.51 × 0.062 m, 0.093 m of water, rotating
    /// about the lower center of the tank.
    pub fn wave(scale: usize) -> Self {
        Self {
            name: ScenarioName::Wave,
            domain_size: [0.9, 0.51, 0.062],
            water_region: Aabb::new([0.0, 0.0, 0.0], [0.9, 0.093, 0.062]),
            obstacle: None,
            gravity: GRAVITY,
            motion: Some(TankMotion { amplitude_rad: 0.07, period_s: 1.9, axis_point: [0.45, 0.0, 0.031] }),
            grid_dims: WAVE_BASE_DIMS.map(|d| d * scale),
            seed_mode: SeedMode::Jittered,
            rng_seed: 0,
        }
    }

    pub fn preset(name: ScenarioName, scale: usize) -> Self {
        match name {
            ScenarioName::Dam => Self::dam(scale),
            ScenarioName::Wave => Self::wave(scale),
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.domain_size[0] / self.grid_dims[0] as f64
    }

    /// Particle spacing of the 2³ sub-cell sampling.
    pub fn particle_spacing(&self) -> f64 {
        0.5 * self.cell_size()
    }

    pub fn gravity_vec(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_dims.iter().any(|&d| d == 0) {
            return Err(Error::Config("grid dimensions must be positive".into()));
        }
        if self.domain_size.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Config("domain size must be positive".into()));
        }
        if !self.water_region.is_empty() && !self.water_region.inside(&self.domain_size) {
            return Err(Error::Config("water region extends outside the domain".into()));
        }
        if let Some(ob) = &self.obstacle {
            if !ob.inside(&self.domain_size) {
                return Err(Error::Config("obstacle extends outside the domain".into()));
            }
            if ob.overlaps(&self.water_region) {
                return Err(Error::Config("water region overlaps the obstacle".into()));
            }
        }
        if let Some(m) = &self.motion {
            if !(m.period_s > 0.0) {
                return Err(Error::Config(format!("tank motion period must be positive, got {}", m.period_s)));
            }
        }
        Ok(())
    }
}

/// Set up the grid (solid obstacle cells, initial fluid cells) and seed 8
/// particles per water cell.
pub fn build_scenario(config: &ScenarioConfig) -> Result<(MacGrid, ParticleSet)> {
    config.validate()?;
    let dx = config.cell_size();
    let h = 0.5 * dx;
    let mut grid = MacGrid::new(config.grid_dims, dx);

    for idx in 0..grid.cell_count() {
        let (i, j, k) = grid.cell_coords(idx);
        let c = grid.cell_center(i, j, k);
        grid.flags[idx] = if config.obstacle.as_ref().is_some_and(|o| o.contains(&c)) {
            CellFlag::Solid
        } else if config.water_region.contains(&c) && !config.water_region.is_empty() {
            CellFlag::Fluid
        } else {
            CellFlag::Air
        };
    }

    let mut positions = Vec::new();
    if !config.water_region.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let wr = &config.water_region;
        // Cells that can hold a sample of the water box, widened by one for jitter.
        let lo: Vec<usize> = (0..3).map(|a| ((wr.min[a] / dx).floor() as isize - 1).max(0) as usize).collect();
        let hi: Vec<usize> =
            (0..3).map(|a| ((wr.max[a] / dx).ceil() as usize + 1).min(config.grid_dims[a])).collect();
        for k in lo[2]..hi[2] {
            for j in lo[1]..hi[1] {
                for i in lo[0]..hi[0] {
                    if grid.flags[grid.cell_index(i, j, k)] == CellFlag::Solid {
                        continue;
                    }
                    for sub in 0..8 {
                        let (a, b, c) = (sub & 1, (sub >> 1) & 1, (sub >> 2) & 1);
                        let mut p = Vec3::new(
                            i as f64 * dx + (a as f64 + 0.5) * h,
                            j as f64 * dx + (b as f64 + 0.5) * h,
                            k as f64 * dx + (c as f64 + 0.5) * h,
                        );
                        if config.seed_mode == SeedMode::Jittered {
                            for axis in 0..3 {
                                p[axis] += rng.random_range(-0.25..=0.25) * dx;
                            }
                        }
                        if wr.contains(&p) {
                            positions.push(p);
                        }
                    }
                }
            }
        }
    }
    let particles = ParticleSet::from_positions(positions, WATER_DENSITY * h * h * h);
    Ok((grid, particles))
}

/// Kinematic state of the rotating tank at one instant, expressed in the
/// tank frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TankFrame {
    pub angle: f64,
    pub angular_velocity: f64,
    pub angular_acceleration: f64,
    /// Gravity as seen from the rotated tank.
    pub gravity: Vec3,
    pub axis_point: Vec3,
}

impl TankFrame {
    pub fn stationary(gravity: Vec3) -> Self {
        Self { angle: 0.0, angular_velocity: 0.0, angular_acceleration: 0.0, gravity, axis_point: Vec3::zeros() }
    }

    /// World-from-tank rotation.
    pub fn rotation(&self) -> Mat3 {
        let (s, c) = self.angle.sin_cos();
        Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    }

    /// Apparent acceleration of a parcel at `pos` moving with `vel`, both in
    /// tank coordinates: rotated gravity plus Euler, centrifugal and
    /// Coriolis terms.
    pub fn acceleration(&self, pos: &Vec3, vel: &Vec3) -> Vec3 {
        let omega = Vec3::new(0.0, 0.0, self.angular_velocity);
        let alpha = Vec3::new(0.0, 0.0, self.angular_acceleration);
        let r = pos - self.axis_point;
        self.gravity - alpha.cross(&r) - omega.cross(&omega.cross(&r)) - 2.0 * omega.cross(vel)
    }
}

/// Tank-frame forcing at time `t`. Without motion this is plain gravity.
pub fn wave_tank_motion(t: f64, motion: Option<&TankMotion>, gravity: Vec3) -> Result<TankFrame> {
    let Some(m) = motion else {
        return Ok(TankFrame::stationary(gravity));
    };
    if !(m.period_s > 0.0) {
        return Err(Error::Config(format!("tank motion period must be positive, got {}", m.period_s)));
    }
    let w = 2.0 * std::f64::consts::PI / m.period_s;
    let (s, c) = (w * t).sin_cos();
    let angle = m.amplitude_rad * s;
    let mut frame = TankFrame {
        angle,
        angular_velocity: m.amplitude_rad * w * c,
        angular_acceleration: -m.amplitude_rad * w * w * s,
        gravity,
        axis_point: Vec3::from(m.axis_point),
    };
    frame.gravity = frame.rotation().transpose() * gravity;
    Ok(frame)
}
