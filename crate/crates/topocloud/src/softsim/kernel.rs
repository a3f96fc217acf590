//! Cubic spline smoothing kernel with support radius `2h`.
//!
//! `W(r,h) = 1/(pi h^3) * w(q)`, `q = |r|/h`, with
//! `w = 1 - 3/2 q^2 + 3/4 q^3` for `q < 1`, `w = 1/4 (2-q)^3` for `1 <= q < 2`
//! and zero beyond. Both `W` and its gradient are continuous at the joints.

use crate::math::Vec3;

pub fn kernel(rvec: &Vec3, h: f64) -> f64 {
    debug_assert!(h > 0.0);
    let q = rvec.norm() / h;
    let sigma = 1.0 / (std::f64::consts::PI * h * h * h);
    if q < 1.0 {
        sigma * (1.0 - 1.5 * q * q + 0.75 * q * q * q)
    } else if q < 2.0 {
        let t = 2.0 - q;
        sigma * 0.25 * t * t * t
    } else {
        0.0
    }
}

/// Gradient of the kernel with respect to its vector argument.
pub fn kernel_grad(rvec: &Vec3, h: f64) -> Vec3 {
    debug_assert!(h > 0.0);
    let r = rvec.norm();
    let q = r / h;
    if q >= 2.0 || r == 0.0 {
        return Vec3::zeros();
    }
    let sigma = 1.0 / (std::f64::consts::PI * h * h * h);
    let dw_dq = if q < 1.0 {
        sigma * (-3.0 * q + 2.25 * q * q)
    } else {
        let t = 2.0 - q;
        sigma * (-0.75 * t * t)
    };
    rvec * (dw_dq / (h * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn value_at_origin() {
        assert_relative_eq!(kernel(&Vec3::zeros(), 1.0), 1.0 / std::f64::consts::PI, epsilon = 1e-15);
        assert_relative_eq!(kernel(&Vec3::zeros(), 0.5), 1.0 / (std::f64::consts::PI * 0.125));
    }

    #[test]
    fn vanishes_at_support_boundary() {
        let h = 0.7;
        let r = Vec3::new(2.0 * h, 0.0, 0.0);
        assert_eq!(kernel(&r, h), 0.0);
        assert_eq!(kernel_grad(&r, h), Vec3::zeros());
        let beyond = Vec3::new(2.5 * h, 0.0, 0.0);
        assert_eq!(kernel(&beyond, h), 0.0);
        assert_eq!(kernel_grad(&beyond, h), Vec3::zeros());
    }

    #[test]
    fn integrates_to_one() {
        // Midpoint quadrature over the support cube; the acceptance suite
        // repeats this at the full 200^3 resolution.
        let h = 1.0;
        let n = 120;
        let step = 4.0 * h / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let p = Vec3::new(
                        -2.0 * h + (i as f64 + 0.5) * step,
                        -2.0 * h + (j as f64 + 0.5) * step,
                        -2.0 * h + (k as f64 + 0.5) * step,
                    );
                    total += kernel(&p, h);
                }
            }
        }
        total *= step * step * step;
        assert!((total - 1.0).abs() < 1e-3, "integral {total}");
    }

    #[test]
    fn continuous_at_joints() {
        let h = 1.3;
        for joint in [1.0, 2.0] {
            let eps = 1e-11;
            let lo = Vec3::new((joint - eps) * h, 0.0, 0.0);
            let hi = Vec3::new((joint + eps) * h, 0.0, 0.0);
            assert!((kernel(&lo, h) - kernel(&hi, h)).abs() < 1e-10);
            assert!((kernel_grad(&lo, h) - kernel_grad(&hi, h)).norm() < 1e-10);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 0.8;
        for r in [0.3, 0.9, 1.4, 1.9] {
            let p = Vec3::new(r * h * 0.6, r * h * 0.48, -r * h * 0.64);
            let g = kernel_grad(&p, h);
            for a in 0..3 {
                let mut plus = p;
                let mut minus = p;
                plus[a] += 1e-7;
                minus[a] -= 1e-7;
                let fd = (kernel(&plus, h) - kernel(&minus, h)) / 2e-7;
                assert_relative_eq!(g[a], fd, epsilon = 1e-6, max_relative = 1e-6);
            }
        }
    }
}
