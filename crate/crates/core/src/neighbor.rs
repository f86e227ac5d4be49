//! Uniform-grid neighbor search with cell size equal to the query radius.

use rayon::prelude::*;

use crate::{Error, Result, Vec3};

#[derive(Clone, Debug)]
pub struct NeighborGrid {
    radius: f64,
    origin: Vec3,
    dims: [usize; 3],
    /// `cell_start[c]..cell_start[c + 1]` indexes `sorted` for cell `c`.
    cell_start: Vec<usize>,
    sorted: Vec<usize>,
    positions: Vec<Vec3>,
}

impl NeighborGrid {
    pub fn build(positions: &[Vec3], radius: f64) -> Self {
        assert!(radius > 0.0, "neighbor radius must be positive");
        let (lo, hi) = bounds(positions);
        let dims = [0, 1, 2].map(|a| (((hi[a] - lo[a]) / radius).floor() as usize + 1).max(1));
        let mut grid = Self {
            radius,
            origin: lo,
            dims,
            cell_start: vec![0; dims[0] * dims[1] * dims[2] + 1],
            sorted: vec![0; positions.len()],
            positions: positions.to_vec(),
        };
        let cells: Vec<usize> = positions.iter().map(|p| grid.linear_cell(&grid.cell_of(p))).collect();
        for &c in &cells {
            grid.cell_start[c + 1] += 1;
        }
        for c in 0..grid.cell_start.len() - 1 {
            grid.cell_start[c + 1] += grid.cell_start[c];
        }
        let mut fill = grid.cell_start.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.sorted[fill[c]] = i;
            fill[c] += 1;
        }
        grid
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    fn cell_of(&self, p: &Vec3) -> [isize; 3] {
        [0, 1, 2].map(|a| ((p[a] - self.origin[a]) / self.radius).floor() as isize)
    }

    #[inline]
    fn linear_cell(&self, c: &[isize; 3]) -> usize {
        c[0] as usize + self.dims[0] * (c[1] as usize + self.dims[1] * c[2] as usize)
    }

    /// Visit every indexed point within `radius` of `p` (inclusive bound
    /// excluded: `|p − x| < radius`).
    #[inline]
    pub fn for_each_neighbor(&self, p: &Vec3, mut f: impl FnMut(usize, Vec3)) {
        if self.positions.is_empty() {
            return;
        }
        let c = self.cell_of(p);
        let r2 = self.radius * self.radius;
        for dz in -1..=1 {
            let z = c[2] + dz;
            if z < 0 || z >= self.dims[2] as isize {
                continue;
            }
            for dy in -1..=1 {
                let y = c[1] + dy;
                if y < 0 || y >= self.dims[1] as isize {
                    continue;
                }
                for dx in -1..=1 {
                    let x = c[0] + dx;
                    if x < 0 || x >= self.dims[0] as isize {
                        continue;
                    }
                    let cell = self.linear_cell(&[x, y, z]);
                    for &j in &self.sorted[self.cell_start[cell]..self.cell_start[cell + 1]] {
                        let d = p - self.positions[j];
                        if d.norm_squared() < r2 {
                            f(j, d);
                        }
                    }
                }
            }
        }
    }

    /// Indices of all points strictly within `radius` of `p`, ascending.
    pub fn query(&self, p: &Vec3, radius: f64) -> Result<Vec<usize>> {
        if (radius - self.radius).abs() > 1e-12 * self.radius {
            return Err(Error::RadiusMismatch { requested: radius, built: self.radius });
        }
        let mut out = Vec::new();
        self.for_each_neighbor(p, |j, _| out.push(j));
        out.sort_unstable();
        Ok(out)
    }

    /// Neighbor lists for a batch of query points (e.g. all particles).
    pub fn neighbor_lists(&self, queries: &[Vec3]) -> Vec<Vec<u32>> {
        queries
            .par_iter()
            .map(|p| {
                let mut out = Vec::with_capacity(64);
                self.for_each_neighbor(p, |j, _| out.push(j as u32));
                out.sort_unstable();
                out
            })
            .collect()
    }
}

fn bounds(positions: &[Vec3]) -> (Vec3, Vec3) {
    if positions.is_empty() {
        return (Vec3::zeros(), Vec3::zeros());
    }
    positions.iter().fold((positions[0], positions[0]), |(lo, hi), p| (lo.inf(p), hi.sup(p)))
}
