//! Signed distance field for the level-set solver, stored at twice the
//! simulation resolution (nodes at fine cell centers, `φ < 0` inside).

use crate::grid::{sample_trilinear, MacGrid};
use crate::scenario::Aabb;
use crate::Vec3;

use super::advect::advect_scalar;

#[derive(Clone, Debug)]
pub struct LevelSetField {
    pub dims: [usize; 3],
    pub cell_size: f64,
    pub phi: Vec<f64>,
}

const OFFSET: [f64; 3] = [0.5; 3];

impl LevelSetField {
    /// Level set covering the same box as `grid` at `refinement`× resolution.
    pub fn for_grid(grid: &MacGrid, refinement: usize) -> Self {
        let dims = grid.dims().map(|d| d * refinement);
        Self { dims, cell_size: grid.cell_size / refinement as f64, phi: vec![f64::MAX; dims.iter().product()] }
    }

    pub fn node_position(&self, idx: usize) -> Vec3 {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.cell_size
    }

    /// Exact signed distance to an axis-aligned box.
    pub fn fill_box(&mut self, b: &Aabb) {
        for idx in 0..self.phi.len() {
            let p = self.node_position(idx);
            self.phi[idx] = box_sdf(&p, b);
        }
    }

    pub fn sample(&self, pos: &Vec3) -> f64 {
        sample_trilinear(&self.phi, self.dims, self.cell_size, OFFSET, pos)
    }

    pub fn advect(&mut self, vel: &MacGrid, dt: f64) {
        self.phi = advect_scalar(&self.phi, self.dims, self.cell_size, OFFSET, vel, dt);
    }

    /// Liquid volume, using a linear smeared Heaviside one cell wide.
    pub fn volume(&self) -> f64 {
        let h = self.cell_size;
        self.phi.iter().map(|&p| (0.5 - p / h).clamp(0.0, 1.0)).sum::<f64>() * h * h * h
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Central-difference `|∇φ|` at interior node `(i, j, k)`.
    pub fn gradient_norm(&self, i: usize, j: usize, k: usize) -> f64 {
        let h2 = 2.0 * self.cell_size;
        let gx = (self.phi[self.idx(i + 1, j, k)] - self.phi[self.idx(i - 1, j, k)]) / h2;
        let gy = (self.phi[self.idx(i, j + 1, k)] - self.phi[self.idx(i, j - 1, k)]) / h2;
        let gz = (self.phi[self.idx(i, j, k + 1)] - self.phi[self.idx(i, j, k - 1)]) / h2;
        (gx * gx + gy * gy + gz * gz).sqrt()
    }

    /// Rebuild `φ` as a signed distance by fast sweeping, keeping the
    /// zero crossings of the current field.
    pub fn reinitialize(&mut self) {
        let [nx, ny, nz] = self.dims;
        let h = self.cell_size;
        let n = self.phi.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut fixed = vec![false; n];

        // Nodes next to a sign change get `|φ| / |∇φ|`, which is exact for a
        // locally linear field; the per-axis crossing estimate is the fallback.
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let idx = self.idx(i, j, k);
                    let p = self.phi[idx];
                    let mut inv2 = 0.0;
                    let mut any = false;
                    let mut grad = Vec3::zeros();
                    let coords = [i, j, k];
                    for axis in 0..3 {
                        let mut best = f64::INFINITY;
                        let mut side = [p; 2];
                        let mut span = 0.0;
                        for (s, dir) in [-1isize, 1].into_iter().enumerate() {
                            let c = coords[axis] as isize + dir;
                            if c < 0 || c >= self.dims[axis] as isize {
                                continue;
                            }
                            let mut nc = coords;
                            nc[axis] = c as usize;
                            let q = self.phi[self.idx(nc[0], nc[1], nc[2])];
                            side[s] = q;
                            span += h;
                            if (p < 0.0) != (q < 0.0) {
                                let t = p / (p - q);
                                best = best.min(t * h);
                            }
                        }
                        if span > 0.0 {
                            grad[axis] = (side[1] - side[0]) / span;
                        }
                        if best.is_finite() {
                            any = true;
                            inv2 += 1.0 / (best * best).max(1e-30);
                        }
                    }
                    if any {
                        let g = grad.norm();
                        let fallback = 1.0 / inv2.sqrt();
                        dist[idx] = if g > 1e-12 { (p.abs() / g).min(h) } else { fallback };
                        fixed[idx] = true;
                    }
                }
            }
        }
        if !fixed.iter().any(|&f| f) {
            // No interface: keep the sign, saturate the magnitude.
            let far = h * (nx + ny + nz) as f64;
            for p in self.phi.iter_mut() {
                *p = if *p < 0.0 { -far } else { far };
            }
            return;
        }

        for _pass in 0..2 {
            for sweep in 0..8 {
                let rev = [sweep & 1 != 0, sweep & 2 != 0, sweep & 4 != 0];
                for kk in 0..nz {
                    let k = if rev[2] { nz - 1 - kk } else { kk };
                    for jj in 0..ny {
                        let j = if rev[1] { ny - 1 - jj } else { jj };
                        for ii in 0..nx {
                            let i = if rev[0] { nx - 1 - ii } else { ii };
                            let idx = self.idx(i, j, k);
                            if fixed[idx] {
                                continue;
                            }
                            let axis_min = |a: usize| -> f64 {
                                let c = [i, j, k];
                                let mut m = f64::INFINITY;
                                if c[a] > 0 {
                                    let mut nc = c;
                                    nc[a] -= 1;
                                    m = m.min(dist[self.idx(nc[0], nc[1], nc[2])]);
                                }
                                if c[a] + 1 < self.dims[a] {
                                    let mut nc = c;
                                    nc[a] += 1;
                                    m = m.min(dist[self.idx(nc[0], nc[1], nc[2])]);
                                }
                                m
                            };
                            let mut abc = [axis_min(0), axis_min(1), axis_min(2)];
                            abc.sort_by(|a, b| a.total_cmp(b));
                            let cand = godunov_update(abc, h);
                            if cand < dist[idx] {
                                dist[idx] = cand;
                            }
                        }
                    }
                }
            }
        }
        for (p, d) in self.phi.iter_mut().zip(&dist) {
            *p = if *p < 0.0 { -d } else { *d };
        }
    }
}

/// Solution of the upwind eikonal update with sorted neighbor minima.
fn godunov_update([a, b, c]: [f64; 3], h: f64) -> f64 {
    if !a.is_finite() {
        return f64::INFINITY;
    }
    let mut u = a + h;
    if u > b {
        let disc = 2.0 * h * h - (a - b) * (a - b);
        u = 0.5 * (a + b + disc.max(0.0).sqrt());
        if u > c {
            let s = a + b + c;
            let disc = s * s - 3.0 * (a * a + b * b + c * c - h * h);
            u = (s + disc.max(0.0).sqrt()) / 3.0;
        }
    }
    u
}

pub fn box_sdf(p: &Vec3, b: &Aabb) -> f64 {
    let mut outside = Vec3::zeros();
    let mut inside = f64::NEG_INFINITY;
    for a in 0..3 {
        let c = 0.5 * (b.min[a] + b.max[a]);
        let half = 0.5 * (b.max[a] - b.min[a]);
        let d = (p[a] - c).abs() - half;
        outside[a] = d.max(0.0);
        inside = inside.max(d);
    }
    outside.norm() + inside.min(0.0)
}
