//! Pressure projection: a 7-point Poisson system over fluid cells, solved by
//! conjugate gradients with a modified incomplete Cholesky (MIC(0))
//! preconditioner.
//!
//! Air cells carry Dirichlet `p = 0`; solid faces are Neumann with zero
//! normal velocity. Rows are numbered in lexicographic cell order (x
//! fastest), which the MIC factorization relies on.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::grid::{CellFlag, MacGrid};
use crate::{Error, Result};

const NONE: usize = usize::MAX;
const MIC_TAU: f64 = 0.97;
const MIC_SIGMA: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    Mic,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureParams {
    /// Relative L2 residual target.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
    pub density: f64,
}

impl Default for PressureParams {
    fn default() -> Self {
        Self { tolerance: 1e-4, max_iterations: 2000, preconditioner: Preconditioner::Mic, density: 1000.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PressureSolveStats {
    pub iterations: usize,
    /// Relative L2 residual of the Poisson solve.
    pub residual: f64,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
    /// `‖∇·u‖` over fluid cells after projection divided by the value before.
    pub relative_divergence: f64,
    pub fluid_cells: usize,
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

/// Sparse symmetric Poisson matrix in the form the solver needs.
#[derive(Clone, Debug)]
pub struct PoissonSystem {
    /// Cell index of each row.
    pub cells: Vec<usize>,
    /// Row of each cell, `usize::MAX` for non-fluid cells.
    pub row_of_cell: Vec<usize>,
    pub diag: Vec<f64>,
    /// Neighbor rows in order −x, +x, −y, +y, −z, +z (`usize::MAX` if not fluid).
    pub neighbors: Vec<[usize; 6]>,
    /// Whether the row touches an air cell (Dirichlet boundary).
    pub touches_air: Vec<bool>,
}

impl PoissonSystem {
    pub fn assemble(grid: &MacGrid) -> Self {
        let mut row_of_cell = vec![NONE; grid.cell_count()];
        let mut cells = Vec::new();
        for (idx, f) in grid.flags.iter().enumerate() {
            if *f == CellFlag::Fluid {
                row_of_cell[idx] = cells.len();
                cells.push(idx);
            }
        }
        let mut diag = Vec::with_capacity(cells.len());
        let mut neighbors = Vec::with_capacity(cells.len());
        let mut touches_air = Vec::with_capacity(cells.len());
        for &idx in &cells {
            let (i, j, k) = grid.cell_coords(idx);
            let (i, j, k) = (i as isize, j as isize, k as isize);
            let offsets = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)];
            let mut d = 0.0;
            let mut nb = [NONE; 6];
            let mut air = false;
            for (slot, (di, dj, dk)) in offsets.into_iter().enumerate() {
                let (ni, nj, nk) = (i + di, j + dj, k + dk);
                match grid.flag_at(ni, nj, nk) {
                    CellFlag::Solid => {}
                    CellFlag::Air => {
                        d += 1.0;
                        air = true;
                    }
                    CellFlag::Fluid => {
                        d += 1.0;
                        nb[slot] = row_of_cell[grid.cell_index(ni as usize, nj as usize, nk as usize)];
                    }
                }
            }
            diag.push(d);
            neighbors.push(nb);
            touches_air.push(air);
        }
        Self { cells, row_of_cell, diag, neighbors, touches_air }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.len() {
            let mut s = self.diag[r] * x[r];
            for &n in &self.neighbors[r] {
                if n != NONE {
                    s -= x[n];
                }
            }
            out[r] = s;
        }
    }

    /// Connected components of the fluid rows.
    fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut head = 0;
            while head < comp.len() {
                let r = comp[head];
                head += 1;
                for &n in &self.neighbors[r] {
                    if n != NONE && !seen[n] {
                        seen[n] = true;
                        comp.push(n);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Remove the mean of `b` on every component without a Dirichlet row,
    /// making the pure-Neumann subsystems consistent.
    pub fn make_consistent(&self, b: &mut [f64]) {
        for comp in self.components() {
            if comp.iter().any(|&r| self.touches_air[r]) {
                continue;
            }
            let mean = comp.iter().map(|&r| b[r]).sum::<f64>() / comp.len() as f64;
            for &r in &comp {
                b[r] -= mean;
            }
        }
    }
}

struct MicPreconditioner {
    inv_sqrt: Vec<f64>,
}

impl MicPreconditioner {
    fn new(sys: &PoissonSystem) -> Self {
        let n = sys.len();
        let mut precon = vec![0.0; n];
        // Off-diagonal to the + neighbor along `axis` of row r: −1 if fluid.
        let plus = |r: usize, axis: usize| if sys.neighbors[r][2 * axis + 1] != NONE { -1.0 } else { 0.0 };
        for r in 0..n {
            let a = sys.diag[r];
            let mut e = a;
            for axis in 0..3 {
                let m = sys.neighbors[r][2 * axis];
                if m == NONE {
                    continue;
                }
                let ap = plus(m, axis) * precon[m];
                e -= ap * ap;
                let others: f64 = (0..3).filter(|&o| o != axis).map(|o| plus(m, o)).sum();
                e -= MIC_TAU * plus(m, axis) * others * precon[m] * precon[m];
            }
            if e < MIC_SIGMA * a {
                e = a;
            }
            precon[r] = if e > 0.0 { 1.0 / e.sqrt() } else { 0.0 };
        }
        Self { inv_sqrt: precon }
    }

    fn apply(&self, sys: &PoissonSystem, r: &[f64], z: &mut [f64]) {
        let n = sys.len();
        let p = &self.inv_sqrt;
        let mut q = vec![0.0; n];
        for row in 0..n {
            let mut t = r[row];
            for axis in 0..3 {
                let m = sys.neighbors[row][2 * axis];
                if m != NONE {
                    // Aplus(m, axis) = −1 since `row` is m's + neighbor.
                    t += p[m] * q[m];
                }
            }
            q[row] = t * p[row];
        }
        for row in (0..n).rev() {
            let mut t = q[row];
            for axis in 0..3 {
                let m = sys.neighbors[row][2 * axis + 1];
                if m != NONE {
                    t += p[row] * z[m];
                }
            }
            z[row] = t * p[row];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Outcome of a linear solve.
#[derive(Clone, Debug)]
pub struct LinearSolve {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Solve `A x = b` by (preconditioned) conjugate gradients.
pub fn solve_pcg(sys: &PoissonSystem, b: &[f64], params: &PressureParams) -> LinearSolve {
    let n = sys.len();
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if n == 0 || b_norm == 0.0 {
        return LinearSolve { solution: x, iterations: 0, residual: 0.0, converged: true };
    }
    let mic = (params.preconditioner == Preconditioner::Mic).then(|| MicPreconditioner::new(sys));
    let precondition = |r: &[f64], z: &mut [f64]| match &mic {
        Some(m) => m.apply(sys, r, z),
        None => z.copy_from_slice(r),
    };
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut s = z.clone();
    let mut sigma = dot(&z, &r);
    let mut as_ = vec![0.0; n];
    let mut residual = 1.0;
    for it in 1..=params.max_iterations {
        sys.apply(&s, &mut as_);
        let denom = dot(&s, &as_);
        if denom.abs() < f64::MIN_POSITIVE {
            return LinearSolve { solution: x, iterations: it, residual, converged: residual <= params.tolerance };
        }
        let alpha = sigma / denom;
        for i in 0..n {
            x[i] += alpha * s[i];
            r[i] -= alpha * as_[i];
        }
        residual = dot(&r, &r).sqrt() / b_norm;
        if residual <= params.tolerance {
            return LinearSolve { solution: x, iterations: it, residual, converged: true };
        }
        precondition(&r, &mut z);
        let sigma_new = dot(&z, &r);
        let beta = sigma_new / sigma;
        for i in 0..n {
            s[i] = z[i] + beta * s[i];
        }
        sigma = sigma_new;
    }
    LinearSolve { solution: x, iterations: params.max_iterations, residual, converged: false }
}

/// Right-hand side `−(∇·u) dx²` for every fluid row.
pub fn divergence_rhs(grid: &MacGrid, sys: &PoissonSystem) -> Vec<f64> {
    let dx2 = grid.cell_size * grid.cell_size;
    sys.cells
        .iter()
        .map(|&idx| {
            let (i, j, k) = grid.cell_coords(idx);
            -grid.cell_divergence(i, j, k) * dx2
        })
        .collect()
}

/// Make the velocity field discretely divergence-free over fluid cells.
///
/// On success `grid.pressure` holds the physical pressure (zero outside the
/// fluid). A solve that misses its tolerance returns
/// [`Error::PressureSolve`] and leaves the grid untouched.
pub fn pressure_project(grid: &mut MacGrid, dt: f64, params: &PressureParams) -> Result<PressureSolveStats> {
    assert!(dt > 0.0, "time step must be positive");
    let start = Instant::now();
    grid.enforce_solid_boundaries();
    let sys = PoissonSystem::assemble(grid);
    let div_before = grid.fluid_divergence_norm();
    let mut b = divergence_rhs(grid, &sys);
    sys.make_consistent(&mut b);
    let solve = solve_pcg(&sys, &b, params);
    if !solve.converged {
        return Err(Error::PressureSolve { iterations: solve.iterations, residual: solve.residual });
    }
    apply_pressure_gradient(grid, &sys, &solve.solution);
    for p in grid.pressure.iter_mut() {
        *p = 0.0;
    }
    for (r, &idx) in sys.cells.iter().enumerate() {
        grid.pressure[idx] = solve.solution[r] * params.density / dt;
    }
    let div_after = grid.fluid_divergence_norm();
    Ok(PressureSolveStats {
        iterations: solve.iterations,
        residual: solve.residual,
        wall_time: start.elapsed(),
        relative_divergence: if div_before > 0.0 { div_after / div_before } else { 0.0 },
        fluid_cells: sys.len(),
    })
}

/// Subtract `∇q` (q = p·dt/ρ) from every face bordering fluid and no solid.
fn apply_pressure_gradient(grid: &mut MacGrid, sys: &PoissonSystem, q: &[f64]) {
    let dx = grid.cell_size;
    let q_at = |grid: &MacGrid, c: [isize; 3]| -> f64 {
        if c.iter().any(|&x| x < 0) || c[0] >= grid.nx as isize || c[1] >= grid.ny as isize || c[2] >= grid.nz as isize {
            return 0.0;
        }
        let row = sys.row_of_cell[grid.cell_index(c[0] as usize, c[1] as usize, c[2] as usize)];
        if row == NONE {
            0.0
        } else {
            q[row]
        }
    };
    for axis in 0..3 {
        let [fx, fy, fz] = grid.face_dims(axis);
        let mut data = std::mem::take(grid.component_mut(axis));
        for k in 0..fz {
            for j in 0..fy {
                for i in 0..fx {
                    if grid.face_is_solid(axis, i, j, k) || !grid.face_touches_fluid(axis, i, j, k) {
                        continue;
                    }
                    let (lo, hi) = MacGrid::face_cells(axis, i, j, k);
                    data[i + fx * (j + fy * k)] -= (q_at(grid, hi) - q_at(grid, lo)) / dx;
                }
            }
        }
        *grid.component_mut(axis) = data;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_block(n: usize, pad: usize, seed: u64) -> MacGrid {
        let dims = [n + 2 * pad, n + 2 * pad, n + 2 * pad];
        let mut g = MacGrid::new(dims, 0.1);
        for k in pad..pad + n {
            for j in pad..pad + n {
                for i in pad..pad + n {
                    let idx = g.cell_index(i, j, k);
                    g.flags[idx] = CellFlag::Fluid;
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for axis in 0..3 {
            for x in g.component_mut(axis).iter_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
        }
        g.enforce_solid_boundaries();
        g
    }

    #[test]
    fn divergence_free_field_is_unchanged() {
        let mut g = random_block(6, 1, 1);
        for axis in 0..3 {
            for x in g.component_mut(axis).iter_mut() {
                *x = 0.0;
            }
        }
        // Uniform horizontal flow through the fluid block is divergence free.
        for x in g.u.iter_mut() {
            *x = 0.5;
        }
        g.enforce_solid_boundaries();
        let before = g.u.clone();
        let stats = pressure_project(&mut g, 0.01, &PressureParams::default()).unwrap();
        assert_eq!(stats.iterations, 0);
        assert!(g.pressure.iter().all(|&p| p == 0.0));
        assert_eq!(before, g.u);
    }

    #[test]
    fn sealed_box_stops_flow_into_the_floor() {
        // Fill the whole grid: no air, walls on every side but the top; then
        // close the top too by making the top layer solid.
        let mut g = MacGrid::new([6, 6, 6], 0.1);
        for idx in 0..g.cell_count() {
            let (_, j, _) = g.cell_coords(idx);
            g.flags[idx] = if j == 5 { CellFlag::Solid } else { CellFlag::Fluid };
        }
        for x in g.v.iter_mut() {
            *x = -1.0;
        }
        let stats = pressure_project(&mut g, 0.01, &PressureParams::default()).unwrap();
        assert!(stats.relative_divergence <= 1e-4);
        for k in 0..6 {
            for i in 0..6 {
                assert_eq!(g.v[g.face_index(1, i, 0, k)], 0.0);
            }
        }
        let max_v = g.v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max_v < 1e-3, "interior vertical velocity {max_v}");
    }

    #[test]
    fn projection_meets_divergence_bound() {
        let mut g = random_block(8, 2, 3);
        let stats = pressure_project(&mut g, 0.01, &PressureParams::default()).unwrap();
        assert!(stats.relative_divergence <= 1e-4, "{stats:?}");
    }

    #[test]
    fn mic_beats_plain_cg() {
        let g = random_block(12, 1, 5);
        let sys = PoissonSystem::assemble(&g);
        let b = divergence_rhs(&g, &sys);
        let params = PressureParams { tolerance: 1e-8, ..Default::default() };
        let mic = solve_pcg(&sys, &b, &params);
        let cg = solve_pcg(&sys, &b, &PressureParams { preconditioner: Preconditioner::None, ..params });
        assert!(mic.converged && cg.converged);
        assert!(mic.iterations < cg.iterations, "mic {} vs cg {}", mic.iterations, cg.iterations);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let mut g = random_block(10, 1, 9);
        let params = PressureParams { max_iterations: 2, ..Default::default() };
        match pressure_project(&mut g, 0.01, &params) {
            Err(Error::PressureSolve { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-4);
            }
            other => panic!("expected solve failure, got {other:?}"),
        }
    }
}
