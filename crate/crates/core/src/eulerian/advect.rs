//! Semi-Lagrangian advection: RK2 backtrace through the MAC velocity,
//! trilinear sampling, positions clamped to the grid box.

use rayon::prelude::*;

use crate::grid::{sample_trilinear, MacGrid};
use crate::Vec3;

/// Departure point of a parcel arriving at `pos` after `dt`.
#[inline]
pub fn backtrace(vel: &MacGrid, pos: &Vec3, dt: f64) -> Vec3 {
    let ext = vel.extent();
    let clamp = |p: Vec3| Vec3::new(p.x.clamp(0.0, ext.x), p.y.clamp(0.0, ext.y), p.z.clamp(0.0, ext.z));
    let mid = clamp(pos - 0.5 * dt * vel.sample_velocity(pos));
    clamp(pos - dt * vel.sample_velocity(&mid))
}

/// Forward RK2 trace used for particles.
#[inline]
pub fn trace_forward(vel: &MacGrid, pos: &Vec3, dt: f64) -> Vec3 {
    let mid = pos + 0.5 * dt * vel.sample_velocity(pos);
    pos + dt * vel.sample_velocity(&mid)
}

/// Advect all three velocity components of `grid` through themselves.
pub fn advect_velocity(grid: &mut MacGrid, dt: f64) {
    let source = grid.clone();
    for axis in 0..3 {
        let [fx, fy, _] = grid.face_dims(axis);
        let src = &source;
        grid.component_mut(axis).par_iter_mut().enumerate().for_each(|(idx, out)| {
            let i = idx % fx;
            let j = (idx / fx) % fy;
            let k = idx / (fx * fy);
            let x = src.face_position(axis, i, j, k);
            let back = backtrace(src, &x, dt);
            *out = src.sample_component(axis, &back);
        });
    }
}

/// Advect a scalar lattice (node `(i, j, k)` at `(i + offset)·h`) through
/// the grid velocity.
pub fn advect_scalar(data: &[f64], dims: [usize; 3], h: f64, offset: [f64; 3], vel: &MacGrid, dt: f64) -> Vec<f64> {
    (0..data.len())
        .into_par_iter()
        .map(|idx| {
            let i = idx % dims[0];
            let j = (idx / dims[0]) % dims[1];
            let k = idx / (dims[0] * dims[1]);
            let x = Vec3::new(i as f64 + offset[0], j as f64 + offset[1], k as f64 + offset[2]) * h;
            let back = backtrace(vel, &x, dt);
            sample_trilinear(data, dims, h, offset, &back)
        })
        .collect()
}
