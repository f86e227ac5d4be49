use crate::{Mat3, Vec3};

/// Particle storage shared by the hybrid and SPH solvers.
///
/// All per-particle arrays have the same length; the optional ones are
/// allocated only by the methods that use them.
#[derive(Clone, Debug, Default)]
pub struct ParticleSet {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    /// APIC affine velocity matrices.
    pub affine: Option<Vec<Mat3>>,
    pub density: Option<Vec<f64>>,
    pub pressure: Option<Vec<f64>>,
    /// Mass of each particle (uniform sampling gives uniform mass).
    pub mass: f64,
}

impl ParticleSet {
    pub fn from_positions(positions: Vec<Vec3>, mass: f64) -> Self {
        let n = positions.len();
        Self {
            positions,
            velocities: vec![Vec3::zeros(); n],
            affine: None,
            density: None,
            pressure: None,
            mass,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn enable_affine(&mut self) {
        if self.affine.is_none() {
            self.affine = Some(vec![Mat3::zeros(); self.len()]);
        }
    }

    pub fn enable_sph_fields(&mut self, rest_density: f64) {
        let n = self.len();
        self.density.get_or_insert_with(|| vec![rest_density; n]);
        self.pressure.get_or_insert_with(|| vec![0.0; n]);
    }

    pub fn is_consistent(&self) -> bool {
        let n = self.len();
        self.velocities.len() == n
            && self.affine.as_ref().is_none_or(|a| a.len() == n)
            && self.density.as_ref().is_none_or(|a| a.len() == n)
            && self.pressure.as_ref().is_none_or(|a| a.len() == n)
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn has_non_finite(&self) -> bool {
        self.positions
            .iter()
            .chain(&self.velocities)
            .any(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
    }

    /// Clamp every position into `[lo, hi]`, zeroing the outward velocity
    /// component of clamped particles.
    pub fn clamp_to_box(&mut self, lo: &Vec3, hi: &Vec3) {
        for (p, v) in self.positions.iter_mut().zip(self.velocities.iter_mut()) {
            for a in 0..3 {
                if p[a] < lo[a] {
                    p[a] = lo[a];
                    v[a] = v[a].max(0.0);
                } else if p[a] > hi[a] {
                    p[a] = hi[a];
                    v[a] = v[a].min(0.0);
                }
            }
        }
    }

    pub fn linear_momentum(&self) -> Vec3 {
        self.velocities.iter().fold(Vec3::zeros(), |acc, v| acc + v) * self.mass
    }

    /// Angular momentum about `origin`.
    pub fn angular_momentum(&self, origin: &Vec3) -> Vec3 {
        self.positions
            .iter()
            .zip(&self.velocities)
            .fold(Vec3::zeros(), |acc, (p, v)| acc + (p - origin).cross(v))
            * self.mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optional_fields_track_length() {
        let mut ps = ParticleSet::from_positions(vec![Vec3::zeros(); 5], 1.0);
        ps.enable_affine();
        ps.enable_sph_fields(1000.0);
        assert!(ps.is_consistent());
        ps.positions.push(Vec3::zeros());
        assert!(!ps.is_consistent());
    }

    #[test]
    fn clamping_keeps_particles_inside() {
        let mut ps = ParticleSet::from_positions(vec![Vec3::new(-1.0, 0.5, 2.0)], 1.0);
        ps.velocities[0] = Vec3::new(-3.0, 1.0, 4.0);
        ps.clamp_to_box(&Vec3::zeros(), &Vec3::repeat(1.0));
        assert_eq!(ps.positions[0], Vec3::new(0.0, 0.5, 1.0));
        assert_eq!(ps.velocities[0], Vec3::new(0.0, 1.0, 0.0));
    }
}
