//! Particle skinning: a blended union-of-balls distance field sampled on a
//! grid whose resolution is a multiple of the particle spacing, triangulated
//! by marching cubes.

mod marching_cubes;
mod mesh;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frame_io::{frame_file_name, load_frame};
use crate::neighbor::NeighborGrid;
use crate::{Error, Result, Vec3};

pub use marching_cubes::{marching_cubes, ScalarGrid};
pub use mesh::{read_obj, TriMesh};

/// Skinning resolution relative to the particle spacing `h`; `1x` has cells
/// of size `2h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SkinScale {
    #[serde(rename = "0.5x")]
    Half,
    #[serde(rename = "0.75x")]
    ThreeQuarters,
    #[serde(rename = "1x")]
    One,
    #[serde(rename = "1.5x")]
    OneAndHalf,
    #[serde(rename = "2x")]
    Two,
    #[serde(rename = "3x")]
    Three,
    #[serde(rename = "4x")]
    Four,
}

impl SkinScale {
    pub const ALL: [SkinScale; 7] = [
        SkinScale::Half,
        SkinScale::ThreeQuarters,
        SkinScale::One,
        SkinScale::OneAndHalf,
        SkinScale::Two,
        SkinScale::Three,
        SkinScale::Four,
    ];

    pub fn factor(self) -> f64 {
        match self {
            SkinScale::Half => 0.5,
            SkinScale::ThreeQuarters => 0.75,
            SkinScale::One => 1.0,
            SkinScale::OneAndHalf => 1.5,
            SkinScale::Two => 2.0,
            SkinScale::Three => 3.0,
            SkinScale::Four => 4.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SkinScale::Half => "0.5x",
            SkinScale::ThreeQuarters => "0.75x",
            SkinScale::One => "1x",
            SkinScale::OneAndHalf => "1.5x",
            SkinScale::Two => "2x",
            SkinScale::Three => "3x",
            SkinScale::Four => "4x",
        }
    }
}

impl fmt::Display for SkinScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SkinScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let t = t.strip_suffix('x').unwrap_or(t);
        let v: f64 = t.parse().map_err(|_| Error::Config(format!("unknown skinning scale `{s}`")))?;
        SkinScale::ALL
            .into_iter()
            .find(|k| k.factor() == v)
            .ok_or_else(|| Error::Config(format!("skinning scale must be one of 0.5x, 0.75x, 1x, 1.5x, 2x, 3x, 4x; got `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkinningConfig {
    pub scale: SkinScale,
    /// Particle spacing `h` of the simulation.
    pub particle_spacing: f64,
    pub iso: f64,
}

impl SkinningConfig {
    pub fn new(scale: SkinScale, particle_spacing: f64) -> Self {
        Self { scale, particle_spacing, iso: 0.0 }
    }

    pub fn cell_size(&self) -> f64 {
        2.0 * self.particle_spacing / self.scale.factor()
    }

    /// Larger of the skinning cell size and the particle spacing, so that
    /// coarse grids do not miss particles.
    pub fn particle_diameter(&self) -> f64 {
        self.cell_size().max(self.particle_spacing)
    }

    pub fn particle_radius(&self) -> f64 {
        0.5 * self.particle_diameter()
    }

    /// Kernel radius of the averaged center/radius.
    pub fn blend_radius(&self) -> f64 {
        2.0 * self.particle_radius()
    }
}

fn blend_weight(s: f64) -> f64 {
    let t = 1.0 - s * s;
    if t > 0.0 {
        t * t * t
    } else {
        0.0
    }
}

/// Signed distance of the blended particle surface: `|x − x̄| − r̄` with
/// kernel-weighted mean center and radius. Nodes out of reach of every
/// particle get the blend radius (positive).
pub fn particles_to_sdf(positions: &[Vec3], cfg: &SkinningConfig) -> ScalarGrid {
    let cell = cfg.cell_size();
    let r = cfg.particle_radius();
    let big_r = cfg.blend_radius();
    if positions.is_empty() {
        return ScalarGrid::new([2, 2, 2], cell, Vec3::zeros(), big_r);
    }
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in positions {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let pad = big_r + cell;
    // Origin snapped to the cell lattice keeps the sampling translation
    // equivariant under whole-cell shifts.
    let first = (lo - Vec3::repeat(pad)).map(|c| (c / cell).floor());
    let last = (hi + Vec3::repeat(pad)).map(|c| (c / cell).ceil());
    let dims = [0, 1, 2].map(|a| (last[a] - first[a]) as usize + 1);
    let origin = first * cell;
    let search = NeighborGrid::build(positions, big_r);
    ScalarGrid::from_fn(dims, cell, origin, |x| {
        let mut wsum = 0.0;
        let mut center = Vec3::zeros();
        search.for_each_neighbor(x, |j, d| {
            let w = blend_weight(d.norm() / big_r);
            wsum += w;
            center += w * positions[j];
        });
        if wsum > 0.0 {
            (x - center / wsum).norm() - r
        } else {
            big_r
        }
    })
}

pub fn skin_particles(positions: &[Vec3], cfg: &SkinningConfig) -> TriMesh {
    marching_cubes(&particles_to_sdf(positions, cfg), cfg.iso)
}

pub fn mesh_file_name(frame: usize, scale: SkinScale) -> String {
    format!("frame_{frame:05}_scale_{}.obj", scale.label())
}

/// Skin every listed frame of `frame_dir` at every scale, writing OBJ (and
/// optionally binary PLY) files to `out_dir`. All frames are checked before
/// any mesh is written.
pub fn skin_sequence(
    frame_dir: &Path,
    out_dir: &Path,
    frames: &[usize],
    scales: &[SkinScale],
    particle_spacing: f64,
    write_ply: bool,
) -> Result<Vec<PathBuf>> {
    for &f in frames {
        let p = frame_dir.join(frame_file_name(f));
        if !p.is_file() {
            return Err(Error::MissingFrame(p));
        }
    }
    std::fs::create_dir_all(out_dir)?;
    let loaded: Vec<(usize, crate::ParticleSet)> = frames
        .par_iter()
        .map(|&f| load_frame(&frame_dir.join(frame_file_name(f))).map(|ps| (f, ps)))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, SkinScale)> = (0..loaded.len()).flat_map(|i| scales.iter().map(move |&s| (i, s))).collect();
    let written: Vec<Result<PathBuf>> = jobs
        .par_iter()
        .map(|&(i, s)| {
            let (f, ps) = &loaded[i];
            let mesh = skin_particles(&ps.positions, &SkinningConfig::new(s, particle_spacing));
            let path = out_dir.join(mesh_file_name(*f, s));
            mesh.save_obj(&path)?;
            if write_ply {
                mesh.save_ply(&path.with_extension("ply"))?;
            }
            Ok(path)
        })
        .collect();
    written.into_iter().collect()
}

#[cfg(test)]
mod tests;
