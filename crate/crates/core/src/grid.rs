//! Staggered (MAC) grid: face-centered velocities, cell-centered pressure and
//! cell classification.
//!
//! The grid spans `[0, nx·dx] × [0, ny·dx] × [0, nz·dx]`. Every domain face is
//! a solid wall except the top (`y = ny·dx`), which is open to air.

use serde::{Deserialize, Serialize};

use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellFlag {
    Fluid,
    Air,
    Solid,
}

#[derive(Clone, Debug)]
pub struct MacGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub cell_size: f64,
    /// x-velocity on faces, `(nx+1)·ny·nz`.
    pub u: Vec<f64>,
    /// y-velocity on faces, `nx·(ny+1)·nz`.
    pub v: Vec<f64>,
    /// z-velocity on faces, `nx·ny·(nz+1)`.
    pub w: Vec<f64>,
    pub pressure: Vec<f64>,
    pub flags: Vec<CellFlag>,
}

impl MacGrid {
    pub fn new(dims: [usize; 3], cell_size: f64) -> Self {
        let [nx, ny, nz] = dims;
        assert!(nx > 0 && ny > 0 && nz > 0, "grid dimensions must be positive");
        assert!(cell_size > 0.0, "cell size must be positive");
        let n = nx * ny * nz;
        Self {
            nx,
            ny,
            nz,
            cell_size,
            u: vec![0.0; (nx + 1) * ny * nz],
            v: vec![0.0; nx * (ny + 1) * nz],
            w: vec![0.0; nx * ny * (nz + 1)],
            pressure: vec![0.0; n],
            flags: vec![CellFlag::Air; n],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Physical extent of the grid box.
    pub fn extent(&self) -> Vec3 {
        Vec3::new(
            self.nx as f64 * self.cell_size,
            self.ny as f64 * self.cell_size,
            self.nz as f64 * self.cell_size,
        )
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    #[inline]
    pub fn cell_coords(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nx;
        let j = (idx / self.nx) % self.ny;
        let k = idx / (self.nx * self.ny);
        (i, j, k)
    }

    /// Dimensions of the face array for velocity component `axis`.
    #[inline]
    pub fn face_dims(&self, axis: usize) -> [usize; 3] {
        let mut d = self.dims();
        d[axis] += 1;
        d
    }

    #[inline]
    pub fn face_index(&self, axis: usize, i: usize, j: usize, k: usize) -> usize {
        let d = self.face_dims(axis);
        i + d[0] * (j + d[1] * k)
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        match axis {
            0 => &self.u,
            1 => &self.v,
            _ => &self.w,
        }
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut Vec<f64> {
        match axis {
            0 => &mut self.u,
            1 => &mut self.v,
            _ => &mut self.w,
        }
    }

    /// Flag of a possibly out-of-range cell. Outside the box is wall, except
    /// above the open top.
    #[inline]
    pub fn flag_at(&self, i: isize, j: isize, k: isize) -> CellFlag {
        if j >= self.ny as isize && i >= 0 && k >= 0 && i < self.nx as isize && k < self.nz as isize {
            return CellFlag::Air;
        }
        if i < 0 || j < 0 || k < 0 || i >= self.nx as isize || j >= self.ny as isize || k >= self.nz as isize {
            return CellFlag::Solid;
        }
        self.flags[self.cell_index(i as usize, j as usize, k as usize)]
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.cell_size
    }

    /// World position of face `(i, j, k)` of component `axis`.
    pub fn face_position(&self, axis: usize, i: usize, j: usize, k: usize) -> Vec3 {
        let mut p = Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5);
        p[axis] -= 0.5;
        p * self.cell_size
    }

    /// Cells on either side of a face, as signed coordinates.
    #[inline]
    pub fn face_cells(axis: usize, i: usize, j: usize, k: usize) -> ([isize; 3], [isize; 3]) {
        let hi = [i as isize, j as isize, k as isize];
        let mut lo = hi;
        lo[axis] -= 1;
        (lo, hi)
    }

    /// Whether a face touches a solid cell (or a wall of the box).
    pub fn face_is_solid(&self, axis: usize, i: usize, j: usize, k: usize) -> bool {
        let (lo, hi) = Self::face_cells(axis, i, j, k);
        self.flag_at(lo[0], lo[1], lo[2]) == CellFlag::Solid || self.flag_at(hi[0], hi[1], hi[2]) == CellFlag::Solid
    }

    /// Whether a face borders at least one fluid cell.
    pub fn face_touches_fluid(&self, axis: usize, i: usize, j: usize, k: usize) -> bool {
        let (lo, hi) = Self::face_cells(axis, i, j, k);
        self.flag_at(lo[0], lo[1], lo[2]) == CellFlag::Fluid || self.flag_at(hi[0], hi[1], hi[2]) == CellFlag::Fluid
    }

    /// Zero the normal velocity on every face adjacent to a solid.
    pub fn enforce_solid_boundaries(&mut self) {
        for axis in 0..3 {
            let [fx, fy, fz] = self.face_dims(axis);
            for k in 0..fz {
                for j in 0..fy {
                    for i in 0..fx {
                        if self.face_is_solid(axis, i, j, k) {
                            let idx = self.face_index(axis, i, j, k);
                            self.component_mut(axis)[idx] = 0.0;
                        }
                    }
                }
            }
        }
    }

    /// Discrete divergence `(Σ outflow − Σ inflow)/dx` of cell `(i, j, k)`.
    #[inline]
    pub fn cell_divergence(&self, i: usize, j: usize, k: usize) -> f64 {
        let du = self.u[self.face_index(0, i + 1, j, k)] - self.u[self.face_index(0, i, j, k)];
        let dv = self.v[self.face_index(1, i, j + 1, k)] - self.v[self.face_index(1, i, j, k)];
        let dw = self.w[self.face_index(2, i, j, k + 1)] - self.w[self.face_index(2, i, j, k)];
        (du + dv + dw) / self.cell_size
    }

    /// L2 norm of the divergence over fluid cells.
    pub fn fluid_divergence_norm(&self) -> f64 {
        let mut sum = 0.0;
        for idx in 0..self.cell_count() {
            if self.flags[idx] == CellFlag::Fluid {
                let (i, j, k) = self.cell_coords(idx);
                sum += self.cell_divergence(i, j, k).powi(2);
            }
        }
        sum.sqrt()
    }

    /// Trilinear sample of one staggered velocity component at a world
    /// position (clamped to the face lattice).
    pub fn sample_component(&self, axis: usize, pos: &Vec3) -> f64 {
        let mut offset = [0.5; 3];
        offset[axis] = 0.0;
        sample_trilinear(self.component(axis), self.face_dims(axis), self.cell_size, offset, pos)
    }

    pub fn sample_velocity(&self, pos: &Vec3) -> Vec3 {
        Vec3::new(
            self.sample_component(0, pos),
            self.sample_component(1, pos),
            self.sample_component(2, pos),
        )
    }

    pub fn max_speed(&self) -> f64 {
        // Face-centered magnitudes bound the interpolated speed per axis.
        let m = |a: &[f64]| a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        Vec3::new(m(&self.u), m(&self.v), m(&self.w)).norm()
    }

    pub fn has_non_finite(&self) -> bool {
        self.u.iter().chain(&self.v).chain(&self.w).any(|x| !x.is_finite())
    }

    /// Propagate velocities from faces bordering fluid into the surrounding
    /// faces, `layers` rings deep. Faces never reached are zeroed.
    pub fn extrapolate_velocity(&mut self, layers: usize) {
        for axis in 0..3 {
            let dims = self.face_dims(axis);
            let [fx, fy, fz] = dims;
            let mut valid: Vec<bool> = vec![false; fx * fy * fz];
            for k in 0..fz {
                for j in 0..fy {
                    for i in 0..fx {
                        valid[i + fx * (j + fy * k)] = self.face_touches_fluid(axis, i, j, k);
                    }
                }
            }
            let mut data = std::mem::take(self.component_mut(axis));
            for _ in 0..layers {
                let mut next_valid = valid.clone();
                let mut next = data.clone();
                let mut changed = false;
                for k in 0..fz {
                    for j in 0..fy {
                        for i in 0..fx {
                            let idx = i + fx * (j + fy * k);
                            if valid[idx] {
                                continue;
                            }
                            let mut sum = 0.0;
                            let mut count = 0;
                            for (di, dj, dk) in NEIGHBORS6 {
                                let (ni, nj, nk) = (i as isize + di, j as isize + dj, k as isize + dk);
                                if ni < 0 || nj < 0 || nk < 0 || ni >= fx as isize || nj >= fy as isize || nk >= fz as isize {
                                    continue;
                                }
                                let nidx = ni as usize + fx * (nj as usize + fy * nk as usize);
                                if valid[nidx] {
                                    sum += data[nidx];
                                    count += 1;
                                }
                            }
                            if count > 0 {
                                next[idx] = sum / count as f64;
                                next_valid[idx] = true;
                                changed = true;
                            }
                        }
                    }
                }
                data = next;
                valid = next_valid;
                if !changed {
                    break;
                }
            }
            for (x, ok) in data.iter_mut().zip(&valid) {
                if !ok {
                    *x = 0.0;
                }
            }
            *self.component_mut(axis) = data;
        }
    }
}

pub(crate) const NEIGHBORS6: [(isize, isize, isize); 6] =
    [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)];

/// Trilinear interpolation on a lattice whose node `(i, j, k)` sits at
/// `(i + offset) · h`. Positions outside are clamped to the lattice.
pub fn sample_trilinear(data: &[f64], dims: [usize; 3], h: f64, offset: [f64; 3], pos: &Vec3) -> f64 {
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..3 {
        let g = pos[a] / h - offset[a];
        let max = (dims[a] - 1) as f64;
        let g = g.clamp(0.0, max);
        let b = (g.floor() as usize).min(dims[a].saturating_sub(2));
        base[a] = b;
        frac[a] = if dims[a] == 1 { 0.0 } else { g - b as f64 };
    }
    let at = |i: usize, j: usize, k: usize| {
        let i = i.min(dims[0] - 1);
        let j = j.min(dims[1] - 1);
        let k = k.min(dims[2] - 1);
        data[i + dims[0] * (j + dims[1] * k)]
    };
    let [i, j, k] = base;
    let [fx, fy, fz] = frac;
    let c00 = at(i, j, k) * (1.0 - fx) + at(i + 1, j, k) * fx;
    let c10 = at(i, j + 1, k) * (1.0 - fx) + at(i + 1, j + 1, k) * fx;
    let c01 = at(i, j, k + 1) * (1.0 - fx) + at(i + 1, j, k + 1) * fx;
    let c11 = at(i, j + 1, k + 1) * (1.0 - fx) + at(i + 1, j + 1, k + 1) * fx;
    let c0 = c00 * (1.0 - fy) + c10 * fy;
    let c1 = c01 * (1.0 - fy) + c11 * fy;
    c0 * (1.0 - fz) + c1 * fz
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staggered_layout_lengths() {
        let g = MacGrid::new([4, 3, 2], 0.1);
        assert_eq!(g.u.len(), 5 * 3 * 2);
        assert_eq!(g.v.len(), 4 * 4 * 2);
        assert_eq!(g.w.len(), 4 * 3 * 3);
        assert_eq!(g.pressure.len(), 24);
        assert_eq!(g.flags.len(), 24);
    }

    #[test]
    fn walls_everywhere_but_the_roof() {
        let g = MacGrid::new([2, 2, 2], 1.0);
        assert_eq!(g.flag_at(-1, 0, 0), CellFlag::Solid);
        assert_eq!(g.flag_at(0, -1, 0), CellFlag::Solid);
        assert_eq!(g.flag_at(0, 0, 2), CellFlag::Solid);
        assert_eq!(g.flag_at(0, 2, 0), CellFlag::Air);
    }

    #[test]
    fn linear_field_is_sampled_exactly() {
        let mut g = MacGrid::new([5, 5, 5], 0.2);
        for k in 0..5 {
            for j in 0..5 {
                for i in 0..6 {
                    let p = g.face_position(0, i, j, k);
                    let idx = g.face_index(0, i, j, k);
                    g.u[idx] = 1.0 + 2.0 * p.x - p.y + 0.5 * p.z;
                }
            }
        }
        let p = Vec3::new(0.37, 0.41, 0.66);
        let expect = 1.0 + 2.0 * p.x - p.y + 0.5 * p.z;
        assert!((g.sample_component(0, &p) - expect).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_fills_air_faces() {
        let mut g = MacGrid::new([3, 3, 3], 1.0);
        let c = g.cell_index(1, 0, 1);
        g.flags[c] = CellFlag::Fluid;
        for x in g.v.iter_mut() {
            *x = 0.0;
        }
        let idx = g.face_index(1, 1, 1, 1);
        g.v[idx] = 2.0;
        let below = g.face_index(1, 1, 0, 1);
        g.v[below] = 2.0;
        g.extrapolate_velocity(2);
        let above = g.face_index(1, 1, 2, 1);
        assert!((g.v[above] - 2.0).abs() < 1e-12);
    }
}
