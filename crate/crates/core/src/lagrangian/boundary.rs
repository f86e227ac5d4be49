use crate::grid::MacGrid;
use crate::scenario::{Aabb, ScenarioConfig};
use crate::Vec3;

/// Static wall particles: two lattice layers at the fluid spacing around the
/// tank (floor and sides, open top) and just inside every obstacle face.
#[derive(Clone, Debug, Default)]
pub struct BoundaryParticleSet {
    pub positions: Vec<Vec3>,
    /// Pseudo-mass contributed to fluid density sums.
    pub mass: f64,
    /// Extrapolated pressure (wall-boundary method only).
    pub pressure: Vec<f64>,
    /// Density consistent with `pressure` through the equation of state.
    pub density: Vec<f64>,
    /// Extrapolated wall velocity used by the no-slip condition.
    pub velocity: Vec<Vec3>,
}

pub const LAYERS: isize = 2;

impl BoundaryParticleSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Sample walls for a grid box of `grid`'s extent plus the obstacle.
    pub fn for_scenario(config: &ScenarioConfig, grid: &MacGrid, spacing: f64, mass: f64, rest_density: f64) -> Self {
        let ext = grid.extent();
        let n = [0, 1, 2].map(|a| (ext[a] / spacing).round() as isize);
        let mut positions = Vec::new();
        for k in -LAYERS..n[2] + LAYERS {
            for j in -LAYERS..n[1] {
                for i in -LAYERS..n[0] + LAYERS {
                    let outside = i < 0 || i >= n[0] || j < 0 || k < 0 || k >= n[2];
                    if outside {
                        positions.push(Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * spacing);
                    }
                }
            }
        }
        if let Some(ob) = &config.obstacle {
            positions.extend(obstacle_shell(ob, spacing));
        }
        let count = positions.len();
        Self {
            positions,
            mass,
            pressure: vec![0.0; count],
            density: vec![rest_density; count],
            velocity: vec![Vec3::zeros(); count],
        }
    }
}

/// Lattice points inside `ob` within `LAYERS` spacings of its surface,
/// excluding the bottom face which rests on the floor.
fn obstacle_shell(ob: &Aabb, spacing: f64) -> Vec<Vec3> {
    let depth = LAYERS as f64 * spacing;
    let lo = [0, 1, 2].map(|a| (ob.min[a] / spacing).floor() as isize);
    let hi = [0, 1, 2].map(|a| (ob.max[a] / spacing).ceil() as isize);
    let mut out = Vec::new();
    for k in lo[2]..hi[2] {
        for j in lo[1]..hi[1] {
            for i in lo[0]..hi[0] {
                let p = Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * spacing;
                if !ob.contains(&p) {
                    continue;
                }
                let to_surface = (0..3)
                    .flat_map(|a| {
                        let lower = if a == 1 { f64::INFINITY } else { p[a] - ob.min[a] };
                        [lower, ob.max[a] - p[a]]
                    })
                    .fold(f64::INFINITY, f64::min);
                if to_surface < depth {
                    out.push(p);
                }
            }
        }
    }
    out
}
