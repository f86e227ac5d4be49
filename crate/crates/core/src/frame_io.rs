//! Particle frame files and grid dumps.
//!
//! Particle frame (`.bin`, little-endian):
//!
//! ```text
//! magic   b"LQPF"
//! version u32 = 1
//! count   u64
//! fields  u32 bitmask: 1 = positions, 2 = velocities
//! then, per present field in bit order: count × [f32; 3]
//! ```
//!
//! Scalar grid dump: flat little-endian `f32` body in x-fastest order plus
//! a text header (`.hdr`) with `nx ny nz`, `cell_size` and `origin`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::particles::ParticleSet;
use crate::{Error, Result, Vec3};

const MAGIC: &[u8; 4] = b"LQPF";
const VERSION: u32 = 1;
pub const FIELD_POSITIONS: u32 = 1;
pub const FIELD_VELOCITIES: u32 = 2;

pub fn frame_file_name(frame: usize) -> String {
    format!("frame_{frame:05}.bin")
}

pub fn write_frame<W: Write>(mut w: W, ps: &ParticleSet, with_velocities: bool) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u64::<LittleEndian>(ps.len() as u64)?;
    let fields = FIELD_POSITIONS | if with_velocities { FIELD_VELOCITIES } else { 0 };
    w.write_u32::<LittleEndian>(fields)?;
    write_triples(&mut w, &ps.positions)?;
    if with_velocities {
        write_triples(&mut w, &ps.velocities)?;
    }
    Ok(())
}

fn write_triples<W: Write>(w: &mut W, data: &[Vec3]) -> Result<()> {
    for p in data {
        for a in 0..3 {
            w.write_f32::<LittleEndian>(p[a] as f32)?;
        }
    }
    Ok(())
}

/// Positions (and velocities if stored) of one frame. Missing velocities
/// read back as zero.
pub fn read_frame<R: Read>(mut r: R) -> Result<ParticleSet> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format { kind: "particle frame", msg: "bad magic".into() });
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format { kind: "particle frame", msg: format!("unsupported version {version}") });
    }
    let count = r.read_u64::<LittleEndian>()? as usize;
    let fields = r.read_u32::<LittleEndian>()?;
    if fields & FIELD_POSITIONS == 0 {
        return Err(Error::Format { kind: "particle frame", msg: "positions missing".into() });
    }
    let positions = read_triples(&mut r, count)?;
    let mut ps = ParticleSet::from_positions(positions, 0.0);
    if fields & FIELD_VELOCITIES != 0 {
        ps.velocities = read_triples(&mut r, count)?;
    }
    Ok(ps)
}

fn read_triples<R: Read>(r: &mut R, count: usize) -> Result<Vec<Vec3>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let x = r.read_f32::<LittleEndian>()? as f64;
        let y = r.read_f32::<LittleEndian>()? as f64;
        let z = r.read_f32::<LittleEndian>()? as f64;
        out.push(Vec3::new(x, y, z));
    }
    Ok(out)
}

pub fn save_frame(path: &Path, ps: &ParticleSet, with_velocities: bool) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_frame(&mut w, ps, with_velocities)?;
    w.flush()?;
    Ok(())
}

pub fn load_frame(path: &Path) -> Result<ParticleSet> {
    if !path.exists() {
        return Err(Error::MissingFrame(path.to_path_buf()));
    }
    read_frame(BufReader::new(File::open(path)?))
}

/// CSV companion with header `x,y,z,vx,vy,vz`.
pub fn save_frame_csv(path: &Path, ps: &ParticleSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "z", "vx", "vy", "vz"])?;
    for (p, v) in ps.positions.iter().zip(&ps.velocities) {
        w.write_record([p.x, p.y, p.z, v.x, v.y, v.z].map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Write `<stem>.bin` and `<stem>.hdr` for a scalar grid.
pub fn save_scalar_grid(stem: &Path, data: &[f64], dims: [usize; 3], cell_size: f64, origin: Vec3) -> Result<()> {
    assert_eq!(data.len(), dims.iter().product::<usize>());
    let mut w = BufWriter::new(File::create(stem.with_extension("bin"))?);
    for &x in data {
        w.write_f32::<LittleEndian>(x as f32)?;
    }
    w.flush()?;
    let header = format!(
        "dims {} {} {}\ncell_size {}\norigin {} {} {}\nformat f32le x-fastest\n",
        dims[0], dims[1], dims[2], cell_size, origin.x, origin.y, origin.z
    );
    std::fs::write(stem.with_extension("hdr"), header)?;
    Ok(())
}
