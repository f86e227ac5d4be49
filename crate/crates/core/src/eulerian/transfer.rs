//! Particle ↔ grid velocity transfers (PIC, FLIP, APIC) with trilinear
//! weights on each staggered component.

use rayon::prelude::*;

use crate::grid::MacGrid;
use crate::particles::ParticleSet;
use crate::{Mat3, Vec3};

/// Eight trilinear weights (and their gradients) of one point against one
/// face lattice.
struct Stencil {
    base: [usize; 3],
    frac: [f64; 3],
}

impl Stencil {
    fn new(grid: &MacGrid, axis: usize, pos: &Vec3) -> Self {
        let dims = grid.face_dims(axis);
        let h = grid.cell_size;
        let mut base = [0; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let offset = if a == axis { 0.0 } else { 0.5 };
            let g = (pos[a] / h - offset).clamp(0.0, (dims[a] - 1) as f64);
            let b = (g.floor() as usize).min(dims[a].saturating_sub(2));
            base[a] = b;
            frac[a] = if dims[a] == 1 { 0.0 } else { g - b as f64 };
        }
        Self { base, frac }
    }

    /// `(i, j, k, weight, ∇weight)` for the eight corners.
    fn corners(&self, h: f64) -> impl Iterator<Item = (usize, usize, usize, f64, Vec3)> + '_ {
        (0..8).map(move |c| {
            let o = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
            let w1 = |a: usize| if o[a] == 1 { self.frac[a] } else { 1.0 - self.frac[a] };
            let dw = |a: usize| if o[a] == 1 { 1.0 / h } else { -1.0 / h };
            let (wx, wy, wz) = (w1(0), w1(1), w1(2));
            let grad = Vec3::new(dw(0) * wy * wz, wx * dw(1) * wz, wx * wy * dw(2));
            (self.base[0] + o[0], self.base[1] + o[1], self.base[2] + o[2], wx * wy * wz, grad)
        })
    }
}

/// Splat particle velocities onto the grid. With `apic`, each particle also
/// carries its affine term `C_p (x_face − x_p)`. Faces receiving no weight
/// are zeroed.
pub fn particles_to_grid(grid: &mut MacGrid, ps: &ParticleSet, apic: bool) {
    let h = grid.cell_size;
    let affine = if apic { ps.affine.as_deref() } else { None };
    for axis in 0..3 {
        let [fx, fy, fz] = grid.face_dims(axis);
        let mut mom = vec![0.0; fx * fy * fz];
        let mut wsum = vec![0.0; fx * fy * fz];
        for (p_idx, (x, v)) in ps.positions.iter().zip(&ps.velocities).enumerate() {
            let st = Stencil::new(grid, axis, x);
            let row = affine.map(|c| c[p_idx].row(axis).transpose());
            for (i, j, k, w, _) in st.corners(h) {
                if w == 0.0 {
                    continue;
                }
                let idx = i + fx * (j + fy * k);
                let mut val = v[axis];
                if let Some(c) = &row {
                    val += c.dot(&(grid.face_position(axis, i, j, k) - x));
                }
                mom[idx] += w * val;
                wsum[idx] += w;
            }
        }
        let out = grid.component_mut(axis);
        for idx in 0..out.len() {
            out[idx] = if wsum[idx] > 0.0 { mom[idx] / wsum[idx] } else { 0.0 };
        }
    }
}

/// PIC gather: particle velocity = interpolated grid velocity.
pub fn grid_to_particles_pic(grid: &MacGrid, ps: &mut ParticleSet) {
    ps.velocities.par_iter_mut().zip(ps.positions.par_iter()).for_each(|(v, x)| {
        *v = grid.sample_velocity(x);
    });
}

/// FLIP/PIC blend: `v ← α (v + Δu(x)) + (1 − α) u_new(x)`. `α = 0` is PIC.
pub fn grid_to_particles_flip(grid: &MacGrid, old: &MacGrid, ps: &mut ParticleSet, alpha: f64) {
    ps.velocities.par_iter_mut().zip(ps.positions.par_iter()).for_each(|(v, x)| {
        let pic = grid.sample_velocity(x);
        let flip = *v + pic - old.sample_velocity(x);
        *v = alpha * flip + (1.0 - alpha) * pic;
    });
}

/// APIC gather: velocity plus the affine matrix whose rows are
/// `Σ_f ∇w_f(x_p) u_f` per component.
pub fn grid_to_particles_apic(grid: &MacGrid, ps: &mut ParticleSet) {
    ps.enable_affine();
    let h = grid.cell_size;
    let affine = ps.affine.as_mut().expect("affine enabled");
    ps.velocities
        .par_iter_mut()
        .zip(affine.par_iter_mut())
        .zip(ps.positions.par_iter())
        .for_each(|((v, c), x)| {
            let mut vel = Vec3::zeros();
            let mut mat = Mat3::zeros();
            for axis in 0..3 {
                let data = grid.component(axis);
                let st = Stencil::new(grid, axis, x);
                let mut row = Vec3::zeros();
                let mut val = 0.0;
                for (i, j, k, w, gw) in st.corners(h) {
                    let u = data[grid.face_index(axis, i, j, k)];
                    val += w * u;
                    row += gw * u;
                }
                vel[axis] = val;
                mat.set_row(axis, &row.transpose());
            }
            *v = vel;
            *c = mat;
        });
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vec3::new(rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi)))
            .collect()
    }

    #[test]
    fn flip_with_zero_blend_is_pic() {
        let mut grid = MacGrid::new([6, 6, 6], 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for axis in 0..3 {
            for x in grid.component_mut(axis).iter_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
        }
        let mut old = grid.clone();
        for x in old.u.iter_mut() {
            *x *= 0.3;
        }
        let mut ps = ParticleSet::from_positions(cloud(500, 0.05, 0.55, 4), 1.0);
        for v in ps.velocities.iter_mut() {
            *v = Vec3::new(rng.random(), rng.random(), rng.random());
        }
        let mut pic = ps.clone();
        grid_to_particles_pic(&grid, &mut pic);
        grid_to_particles_flip(&grid, &old, &mut ps, 0.0);
        for (a, b) in ps.velocities.iter().zip(&pic.velocities) {
            assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        }
    }

    #[test]
    fn uniform_velocity_round_trips() {
        let mut grid = MacGrid::new([5, 5, 5], 0.2);
        let mut ps = ParticleSet::from_positions(cloud(2000, 0.0, 1.0, 1), 1.0);
        for v in ps.velocities.iter_mut() {
            *v = Vec3::new(0.3, -0.2, 0.1);
        }
        particles_to_grid(&mut grid, &ps, false);
        grid_to_particles_pic(&grid, &mut ps);
        for v in &ps.velocities {
            assert!((v - Vec3::new(0.3, -0.2, 0.1)).norm() < 1e-12);
        }
    }

    /// Angular momentum lost by one particle → grid → particle round trip of
    /// a rigid rotation.
    fn rotation_round_trip_error(apic: bool) -> f64 {
        let h = 0.05;
        let mut grid = MacGrid::new([16, 16, 16], h);
        let center = Vec3::repeat(0.4);
        let omega = Vec3::new(0.3, -0.5, 1.0);
        let mut ps = ParticleSet::from_positions(cloud(4000, 0.2, 0.6, 11), 1.0);
        let skew = Mat3::new(0.0, -omega.z, omega.y, omega.z, 0.0, -omega.x, -omega.y, omega.x, 0.0);
        for (x, v) in ps.positions.iter().zip(ps.velocities.iter_mut()) {
            *v = omega.cross(&(x - center));
        }
        if apic {
            ps.affine = Some(vec![skew; ps.len()]);
        }
        let before = ps.angular_momentum(&center);
        particles_to_grid(&mut grid, &ps, apic);
        if apic {
            grid_to_particles_apic(&grid, &mut ps);
        } else {
            grid_to_particles_pic(&grid, &mut ps);
        }
        (ps.angular_momentum(&center) - before).norm() / before.norm()
    }

    #[test]
    fn apic_preserves_angular_momentum_better_than_pic() {
        let pic = rotation_round_trip_error(false);
        let apic = rotation_round_trip_error(true);
        assert!(apic < pic, "apic {apic} vs pic {pic}");
    }

    #[test]
    fn apic_recovers_linear_field_gradient() {
        let mut grid = MacGrid::new([8, 8, 8], 0.125);
        let grad = Mat3::new(0.1, 0.2, -0.3, 0.4, 0.0, 0.5, -0.2, 0.1, 0.3);
        for axis in 0..3 {
            let [fx, fy, fz] = grid.face_dims(axis);
            for k in 0..fz {
                for j in 0..fy {
                    for i in 0..fx {
                        let p = grid.face_position(axis, i, j, k);
                        let idx = grid.face_index(axis, i, j, k);
                        grid.component_mut(axis)[idx] = (grad.row(axis) * p)[0];
                    }
                }
            }
        }
        let mut ps = ParticleSet::from_positions(cloud(50, 0.2, 0.8, 2), 1.0);
        grid_to_particles_apic(&grid, &mut ps);
        for c in ps.affine.as_ref().unwrap() {
            assert!((c - grad).norm() < 1e-10);
        }
    }
}
