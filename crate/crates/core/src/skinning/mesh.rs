use std::collections::HashMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use byteorder::{LittleEndian, WriteBytesExt};

use crate::{Result, Vec3};

/// Indexed triangle mesh. Triangles are counter-clockwise seen from outside
/// the liquid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Indices in range and no non-finite vertex.
    pub fn is_valid(&self) -> bool {
        let n = self.vertices.len() as u32;
        self.vertices.iter().all(|v| v.iter().all(|c| c.is_finite()))
            && self.triangles.iter().all(|t| t.iter().all(|&i| i < n))
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| 0.5 * self.cross(t).norm()).sum()
    }

    /// Signed enclosed volume; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i as usize]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    fn cross(&self, t: &[u32; 3]) -> Vec3 {
        let [a, b, c] = t.map(|i| self.vertices[i as usize]);
        (b - a).cross(&(c - a))
    }

    /// Every directed edge matched by exactly one opposite edge: closed,
    /// consistently oriented, no holes.
    pub fn is_closed(&self) -> bool {
        let mut edges: HashMap<(u32, u32), i32> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *edges.entry((a, b)).or_default() += 1;
            }
        }
        edges.iter().all(|(&(a, b), &n)| n == 1 && edges.get(&(b, a)) == Some(&1))
    }

    pub fn translated(&self, by: &Vec3) -> Self {
        Self { vertices: self.vertices.iter().map(|v| v + by).collect(), triangles: self.triangles.clone() }
    }

    /// Same surface with every triangle reversed.
    pub fn flipped(&self) -> Self {
        Self { vertices: self.vertices.clone(), triangles: self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect() }
    }

    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {:.6} {:.6} {:.6}", v[0], v[1], v[2])?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    /// Binary little-endian PLY with float vertices and int face lists.
    pub fn write_ply<W: Write>(&self, mut w: W) -> Result<()> {
        write!(
            w,
            "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
            self.vertices.len(),
            self.triangles.len()
        )?;
        for v in &self.vertices {
            for c in v.iter() {
                w.write_f32::<LittleEndian>(*c as f32)?;
            }
        }
        for t in &self.triangles {
            w.write_u8(3)?;
            for &i in t {
                w.write_i32::<LittleEndian>(i as i32)?;
            }
        }
        Ok(())
    }

    pub fn save_obj(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        self.write_obj(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn save_ply(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        self.write_ply(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Parse the subset of OBJ written by [`TriMesh::write_obj`].
pub fn read_obj(text: &str) -> Result<TriMesh> {
    let bad = |msg: String| crate::Error::Format { kind: "obj", msg };
    let mut mesh = TriMesh::default();
    for (n, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it.map(|s| s.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
                if c.len() != 3 {
                    return Err(bad(format!("line {}: expected 3 coordinates", n + 1)));
                }
                mesh.vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = it
                    .map(|s| s.split('/').next().unwrap_or("").parse::<u32>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
                if idx.len() != 3 || idx.contains(&0) {
                    return Err(bad(format!("line {}: expected a 1-based triangle", n + 1)));
                }
                mesh.triangles.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    if !mesh.is_valid() {
        return Err(bad("face index out of range".into()));
    }
    Ok(mesh)
}
