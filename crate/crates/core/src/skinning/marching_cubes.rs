//! Marching cubes with the case table replaced by a per-cube walk over the
//! cube faces. Crossed edges on each face are paired into segments (the
//! asymptotic decider picks the pairing on ambiguous faces), the segments
//! chain into closed loops and each loop is fan-triangulated. A face shared
//! by two cubes is always split the same way, so the result is watertight.

use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use super::mesh::TriMesh;
use crate::Vec3;

/// Scalar samples on grid nodes; node `(i, j, k)` sits at
/// `origin + (i, j, k) * cell_size`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    pub dims: [usize; 3],
    pub cell_size: f64,
    pub origin: Vec3,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(dims: [usize; 3], cell_size: f64, origin: Vec3, fill: f64) -> Self {
        Self { dims, cell_size, origin, values: vec![fill; dims.iter().product()] }
    }

    /// Sample `f` at every node.
    pub fn from_fn(dims: [usize; 3], cell_size: f64, origin: Vec3, f: impl Fn(&Vec3) -> f64 + Sync) -> Self {
        let mut g = Self::new(dims, cell_size, origin, 0.0);
        let values: Vec<f64> = (0..g.values.len()).into_par_iter().map(|i| f(&g.node_position(i))).collect();
        g.values = values;
        g
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn node_position(&self, idx: usize) -> Vec3 {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.cell_size
    }

    pub fn negated(&self) -> Self {
        Self { values: self.values.iter().map(|v| -v).collect(), ..self.clone() }
    }
}

/// Corner `c` of a cube has offset `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
const fn corner_offset(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

struct Tables {
    /// Lower corner and axis of each of the 12 edges.
    edges: [(usize, usize); 12],
    /// Corners of each face, counter-clockwise seen from outside.
    faces: [[usize; 4]; 6],
    /// Edge between two corners (usize::MAX if not adjacent).
    edge_of: [[usize; 8]; 8],
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut edges = [(0, 0); 12];
        let mut edge_of = [[usize::MAX; 8]; 8];
        let mut n = 0;
        for axis in 0..3 {
            for c in 0..8 {
                if c & (1 << axis) == 0 {
                    let d = c | (1 << axis);
                    edges[n] = (c, axis);
                    edge_of[c][d] = n;
                    edge_of[d][c] = n;
                    n += 1;
                }
            }
        }
        let mut faces = [[0; 4]; 6];
        for axis in 0..3 {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            for side in 0..2 {
                let base = side << axis;
                let mut ring = [base, base | 1 << u, base | 1 << u | 1 << v, base | 1 << v];
                // The ring above turns about +axis; the low face looks down -axis.
                if side == 0 {
                    ring.reverse();
                }
                faces[2 * axis + side] = ring;
            }
        }
        Tables { edges, faces, edge_of }
    })
}

/// Closed loops of crossed edges of one cube, each oriented so that the
/// inside is on its right seen from outside, with a flag for loops that
/// use two segments of the same face.
fn cube_loops(vals: &[f64; 8], iso: f64, out: &mut Vec<(Vec<usize>, bool)>) {
    let t = tables();
    let inside = vals.map(|v| v < iso);
    if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
        return;
    }
    let mut next = [usize::MAX; 12];
    let mut seg_face = [usize::MAX; 12];
    for (face, ring) in t.faces.iter().enumerate() {
        // (edge, is_entry, position of the corner the edge leads to)
        let mut cross: [(usize, bool, usize); 4] = [(0, false, 0); 4];
        let mut n = 0;
        for m in 0..4 {
            let (a, b) = (ring[m], ring[(m + 1) % 4]);
            if inside[a] != inside[b] {
                cross[n] = (t.edge_of[a][b], !inside[a], (m + 1) % 4);
                n += 1;
            }
        }
        let mut link = |x: (usize, bool, usize), y: (usize, bool, usize)| {
            let (from, to) = if x.1 { (x.0, y.0) } else { (y.0, x.0) };
            next[from] = to;
            seg_face[from] = face;
        };
        match n {
            0 => {}
            2 => link(cross[0], cross[1]),
            4 => {
                let f = ring.map(|c| vals[c] - iso);
                let denom = f[0] + f[2] - f[1] - f[3];
                let saddle_inside = denom != 0.0 && (f[0] * f[2] - f[1] * f[3]) / denom < 0.0;
                // Crossings k and k+1 enclose the corner cross[k].2; pair
                // around the corners that are to be cut off.
                let cut_inside = !saddle_inside;
                let k0 = if inside[ring[cross[0].2]] == cut_inside { 0 } else { 1 };
                link(cross[k0], cross[k0 + 1]);
                link(cross[k0 + 2], cross[(k0 + 3) % 4]);
            }
            _ => unreachable!("a face ring changes sign an even number of times"),
        }
    }
    let mut used = [false; 12];
    for start in 0..12 {
        if next[start] == usize::MAX || used[start] {
            continue;
        }
        let mut ring = Vec::with_capacity(12);
        let mut faces = 0u8;
        let mut repeated = false;
        let mut e = start;
        while !used[e] {
            used[e] = true;
            ring.push(e);
            repeated |= faces & (1 << seg_face[e]) != 0;
            faces |= 1 << seg_face[e];
            e = next[e];
        }
        out.push((ring, repeated));
    }
}

/// Vertex ids with this bit set refer to loop centers rather than edges.
const CENTER: u64 = 1 << 63;

/// Triangulate the `iso` level set. Nodes with value `< iso` are inside.
pub fn marching_cubes(grid: &ScalarGrid, iso: f64) -> TriMesh {
    let [nx, ny, nz] = grid.dims;
    if nx < 2 || ny < 2 || nz < 2 {
        return TriMesh::default();
    }
    let t = tables();
    // Loops that pass a face twice are fanned around an added center
    // vertex; a plain fan could put a triangle flat on the face, where the
    // neighbouring cube would produce its mirror image.
    let slabs: Vec<(Vec<[u64; 3]>, Vec<Vec3>)> = (0..nz - 1)
        .into_par_iter()
        .map(|k| {
            let mut tris = Vec::new();
            let mut centers = Vec::new();
            let mut loops = Vec::new();
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    let vals = std::array::from_fn(|c| {
                        let o = corner_offset(c);
                        grid.values[grid.index(i + o[0], j + o[1], k + o[2])]
                    });
                    loops.clear();
                    cube_loops(&vals, iso, &mut loops);
                    for (ring, repeated) in &loops {
                        let ids: Vec<u64> = ring
                            .iter()
                            .map(|&e| {
                                let (c, axis) = t.edges[e];
                                let o = corner_offset(c);
                                3 * grid.index(i + o[0], j + o[1], k + o[2]) as u64 + axis as u64
                            })
                            .collect();
                        if *repeated {
                            let mut sorted = ids.clone();
                            sorted.sort_unstable();
                            let c = sorted.iter().map(|&id| edge_vertex(grid, id, iso)).sum::<Vec3>() / ids.len() as f64;
                            let cid = CENTER | (k as u64) << 32 | centers.len() as u64;
                            centers.push(c);
                            for m in 0..ids.len() {
                                tris.push([cid, ids[m], ids[(m + 1) % ids.len()]]);
                            }
                        } else {
                            for m in 1..ids.len() - 1 {
                                tris.push([ids[0], ids[m], ids[m + 1]]);
                            }
                        }
                    }
                }
            }
            (tris, centers)
        })
        .collect();

    let mut mesh = TriMesh::default();
    let mut ids: HashMap<u64, u32> = HashMap::new();
    for (tris, _) in &slabs {
        for tri in tris {
            let idx = tri.map(|id| {
                *ids.entry(id).or_insert_with(|| {
                    let p = if id & CENTER != 0 {
                        let k = ((id & !CENTER) >> 32) as usize;
                        slabs[k].1[(id & 0xffff_ffff) as usize]
                    } else {
                        edge_vertex(grid, id, iso)
                    };
                    mesh.vertices.push(p);
                    (mesh.vertices.len() - 1) as u32
                })
            });
            mesh.triangles.push(idx);
        }
    }
    mesh
}

fn edge_vertex(grid: &ScalarGrid, id: u64, iso: f64) -> Vec3 {
    let node = (id / 3) as usize;
    let axis = (id % 3) as usize;
    let stride = [1, grid.dims[0], grid.dims[0] * grid.dims[1]][axis];
    let (fa, fb) = (grid.values[node], grid.values[node + stride]);
    let s = if fb != fa { ((iso - fa) / (fb - fa)).clamp(0.0, 1.0) } else { 0.5 };
    let mut p = grid.node_position(node);
    p[axis] += s * grid.cell_size;
    p
}
