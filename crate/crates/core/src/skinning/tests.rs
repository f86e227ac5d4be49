use super::marching_cubes::tests::canonical;
use super::*;
use crate::frame_io::save_frame;
use crate::ParticleSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 0.01;

fn block(n: [usize; 3]) -> Vec<Vec3> {
    let mut out = Vec::new();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                out.push(Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * H);
            }
        }
    }
    out
}

/// Euler characteristic `V − E + F` of a closed triangle mesh.
fn euler_characteristic(m: &TriMesh) -> i64 {
    let f = m.triangles.len() as i64;
    m.vertices.len() as i64 - 3 * f / 2 + f
}

#[test]
fn diameter_rule_switches_at_2x() {
    for s in SkinScale::ALL {
        let cfg = SkinningConfig::new(s, H);
        if s.factor() <= 2.0 {
            assert!((cfg.particle_diameter() - cfg.cell_size()).abs() < 1e-15, "{s}");
        } else {
            assert_eq!(cfg.particle_diameter(), H, "{s}");
        }
    }
    assert!((SkinningConfig::new(SkinScale::One, H).cell_size() - 2.0 * H).abs() < 1e-15);
    assert!((SkinningConfig::new(SkinScale::Two, H).cell_size() - H).abs() < 1e-15);
}

#[test]
fn scale_labels_parse() {
    for s in SkinScale::ALL {
        assert_eq!(s.label().parse::<SkinScale>().unwrap(), s);
    }
    assert_eq!("2".parse::<SkinScale>().unwrap(), SkinScale::Two);
    assert!("2.5x".parse::<SkinScale>().is_err());
}

#[test]
fn single_particle_is_a_sphere_of_the_rule_radius() {
    let c = Vec3::new(0.3, 0.2, 0.1);
    for s in SkinScale::ALL {
        let cfg = SkinningConfig::new(s, H);
        let g = particles_to_sdf(&[c], &cfg);
        let mut seen = 0;
        for (i, v) in g.values.iter().enumerate() {
            let d = (g.node_position(i) - c).norm();
            if d < cfg.blend_radius() {
                assert!((v - (d - cfg.particle_radius())).abs() <= g.cell_size, "{s}");
                seen += 1;
            } else {
                assert!(*v > 0.0);
            }
        }
        assert!(seen > 0, "{s}");
    }
}

#[test]
fn empty_set_gives_positive_field_and_empty_mesh() {
    let cfg = SkinningConfig::new(SkinScale::Two, H);
    let g = particles_to_sdf(&[], &cfg);
    assert!(g.values.iter().all(|&v| v > 0.0));
    assert!(skin_particles(&[], &cfg).is_empty());
}

#[test]
fn dense_block_is_hole_free_at_every_scale() {
    let pts = block([16, 12, 10]);
    for s in SkinScale::ALL {
        let cfg = SkinningConfig::new(s, H);
        let g = particles_to_sdf(&pts, &cfg);
        for (i, v) in g.values.iter().enumerate() {
            let p = g.node_position(i);
            let deep = (0..3).all(|a| p[a] > 2.0 * H && p[a] < [16.0, 12.0, 10.0][a] * H - 2.0 * H);
            if deep {
                assert!(*v < 0.0, "{s}: node {p:?} = {v}");
            }
        }
        let mesh = marching_cubes(&g, 0.0);
        assert!(!mesh.is_empty(), "{s}");
        assert!(mesh.is_closed(), "{s}");
        assert_eq!(euler_characteristic(&mesh), 2, "{s}");
        assert!(mesh.signed_volume() > 0.0);
    }
}

/// A resting slab with droplets above it. Lattice positions are jittered so
/// no grid node lands exactly on the iso level.
fn splash(seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = block([20, 6, 20]);
    for p in &mut pts {
        *p += Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 1e-4;
    }
    for _ in 0..400 {
        pts.push(Vec3::new(rng.random_range(0.0..0.2), rng.random_range(0.08..0.2), rng.random_range(0.0..0.2)));
    }
    pts
}

#[test]
fn vertex_count_grows_with_scale() {
    let pts = splash(1);
    let counts: Vec<usize> = SkinScale::ALL.iter().map(|&s| skin_particles(&pts, &SkinningConfig::new(s, H)).vertices.len()).collect();
    assert!(counts.windows(2).all(|w| w[0] < w[1]), "{counts:?}");
}

#[test]
fn whole_cell_shift_shifts_the_mesh() {
    let pts = splash(2);
    for s in [SkinScale::Half, SkinScale::Two, SkinScale::Four] {
        let cfg = SkinningConfig::new(s, H);
        let shift = Vec3::new(1.0, -2.0, 3.0) * cfg.cell_size();
        let moved: Vec<Vec3> = pts.iter().map(|p| p + shift).collect();
        let a = skin_particles(&pts, &cfg);
        let b = skin_particles(&moved, &cfg);
        assert_eq!(a.triangles.len(), b.triangles.len(), "{s}");
        assert_eq!(a.triangles, b.triangles, "{s}");
        for (x, y) in a.vertices.iter().zip(&b.vertices) {
            assert!((x + shift - y).norm() < 1e-9, "{s}");
        }
    }
}

#[test]
fn sequence_writes_one_mesh_per_frame_and_scale() {
    let frames = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    for f in 0..3 {
        let mut pts = block([6, 6, 6]);
        for p in &mut pts {
            p[0] += f as f64 * H;
        }
        save_frame(&frames.path().join(frame_file_name(f)), &ParticleSet::from_positions(pts, 1.0), false).unwrap();
    }
    let written = skin_sequence(frames.path(), out.path(), &[0, 1, 2], &SkinScale::ALL, H, false).unwrap();
    assert_eq!(written.len(), 21);
    assert!(out.path().join("frame_00002_scale_0.75x.obj").is_file());
    let text = std::fs::read_to_string(out.path().join("frame_00001_scale_2x.obj")).unwrap();
    assert!(read_obj(&text).unwrap().is_closed());

    let err = skin_sequence(frames.path(), out.path(), &[0, 7], &[SkinScale::Two], H, false).unwrap_err();
    assert!(err.to_string().contains("frame_00007.bin"), "{err}");
}

#[test]
fn ply_header_counts() {
    let mesh = skin_particles(&block([4, 4, 4]), &SkinningConfig::new(SkinScale::Two, H));
    let mut buf = Vec::new();
    mesh.write_ply(&mut buf).unwrap();
    let text = String::from_utf8_lossy(&buf);
    assert!(text.contains(&format!("element vertex {}", mesh.vertices.len())));
    let header_len = text.find("end_header\n").unwrap() + "end_header\n".len();
    assert_eq!(buf.len() - header_len, mesh.vertices.len() * 12 + mesh.triangles.len() * 13);
}

#[test]
fn flipped_sdf_inverts_the_surface() {
    let cfg = SkinningConfig::new(SkinScale::Two, H);
    let g = particles_to_sdf(&splash(3), &cfg);
    let a = marching_cubes(&g, 0.0);
    let b = marching_cubes(&g.negated(), 0.0);
    assert_eq!(canonical(&a.flipped()), canonical(&b));
}
