use std::f64::consts::PI;

use crate::Vec3;

/// Cubic spline smoothing kernel with compact support radius `support`.
///
/// With `q = r / support`:
/// `W = σ (6(q³ − q²) + 1)` for `q ≤ ½`, `W = 2σ (1 − q)³` for `q ≤ 1`,
/// `σ = 8 / (π support³)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphKernel {
    support: f64,
    sigma: f64,
}

impl SphKernel {
    pub fn new(support: f64) -> Self {
        assert!(support > 0.0, "kernel support must be positive");
        Self { support, sigma: 8.0 / (PI * support.powi(3)) }
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        let q = r / self.support;
        if q >= 1.0 {
            0.0
        } else if q <= 0.5 {
            self.sigma * (6.0 * (q * q * q - q * q) + 1.0)
        } else {
            let t = 1.0 - q;
            self.sigma * 2.0 * t * t * t
        }
    }

    #[inline]
    pub fn w(&self, r: &Vec3) -> f64 {
        self.value(r.norm())
    }

    /// `∇W(r)` with respect to the first particle, `r = x_i − x_j`.
    #[inline]
    pub fn grad(&self, r: &Vec3) -> Vec3 {
        let rn = r.norm();
        let q = rn / self.support;
        if q >= 1.0 || rn <= 1e-12 * self.support {
            return Vec3::zeros();
        }
        let dwdq = if q <= 0.5 {
            self.sigma * 6.0 * (3.0 * q * q - 2.0 * q)
        } else {
            let t = 1.0 - q;
            -self.sigma * 6.0 * t * t
        };
        r * (dwdq / (rn * self.support))
    }

    pub fn w_zero(&self) -> f64 {
        self.sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_quadrature_is_normalized() {
        let k = SphKernel::new(0.04);
        // Composite Simpson on 4π ∫ W r² dr.
        let n = 20_000;
        let hstep = k.support() / n as f64;
        let f = |r: f64| 4.0 * PI * k.value(r) * r * r;
        let mut s = f(0.0) + f(k.support());
        for i in 1..n {
            let r = i as f64 * hstep;
            s += if i % 2 == 1 { 4.0 * f(r) } else { 2.0 * f(r) };
        }
        let integral = s * hstep / 3.0;
        assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
    }

    #[test]
    fn compact_and_non_negative() {
        let k = SphKernel::new(1.0);
        for i in 0..=200 {
            let r = i as f64 * 0.01;
            let w = k.value(r);
            assert!(w >= 0.0);
            if r >= 1.0 {
                assert_eq!(w, 0.0);
            }
        }
    }

    #[test]
    fn lattice_sum_is_close_to_one() {
        let h = 0.02;
        let k = SphKernel::new(2.0 * h);
        let mut s = 0.0;
        for i in -3..=3 {
            for j in -3..=3 {
                for l in -3..=3 {
                    s += h * h * h * k.w(&(Vec3::new(i as f64, j as f64, l as f64) * h));
                }
            }
        }
        assert!((s - 1.0).abs() < 0.02, "lattice sum {s}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let k = SphKernel::new(1.0);
        let r = Vec3::new(0.21, -0.33, 0.12);
        let g = k.grad(&r);
        let eps = 1e-6;
        for a in 0..3 {
            let mut rp = r;
            rp[a] += eps;
            let mut rm = r;
            rm[a] -= eps;
            let fd = (k.w(&rp) - k.w(&rm)) / (2.0 * eps);
            assert!((fd - g[a]).abs() < 1e-6, "axis {a}: {fd} vs {}", g[a]);
        }
    }

    #[test]
    fn gradient_is_antisymmetric() {
        let k = SphKernel::new(0.5);
        let r = Vec3::new(0.1, 0.2, -0.05);
        assert_eq!(k.grad(&r), -k.grad(&-r));
    }
}
