//! Small numeric helpers shared across modules.

use nalgebra::{Matrix3, Point3, UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Pt3 = Point3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Quat = UnitQuaternion<f64>;

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Skew-symmetric cross-product matrix `[v]` with `[v] w = v × w`.
pub fn cross_matrix(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation factor of the polar decomposition of `a`, with `det = +1`
/// enforced by flipping the weakest singular direction.
///
/// Returns `None` when `a` has fewer than two independent directions
/// (second singular value below `rank_tol` times the largest).
pub fn polar_rotation(a: &Mat3, rank_tol: f64) -> Option<Mat3> {
    let svd = a.svd(true, true);
    let u = svd.u?;
    let v_t = svd.v_t?;
    let s = svd.singular_values;
    if s[0] <= 0.0 || s[1] <= rank_tol * s[0] {
        return None;
    }
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        // Flip the column of U associated with the smallest singular value.
        let mut u_fixed = u;
        for i in 0..3 {
            u_fixed[(i, 2)] = -u_fixed[(i, 2)];
        }
        r = u_fixed * v_t;
    }
    Some(r)
}

/// Pack a symmetric matrix as `[xx, yy, zz, xy, xz, yz]`.
pub fn sym_to_vec6(m: &Mat3) -> [f64; 6] {
    [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(0, 1)], m[(0, 2)], m[(1, 2)]]
}

/// Inverse of [`sym_to_vec6`].
pub fn vec6_to_sym(v: &[f64; 6]) -> Mat3 {
    Mat3::new(v[0], v[3], v[4], v[3], v[1], v[5], v[4], v[5], v[2])
}

/// Relative error with an absolute floor, `|a-b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Conjugate gradient for a symmetric positive definite operator.
///
/// `apply` computes `A x`. Iterates until the residual norm drops below
/// `tol * |b|` or `max_iter` is reached; returns the best iterate either way.
pub fn conjugate_gradient<F>(apply: F, b: &[f64], tol: f64, max_iter: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let b_norm2: f64 = b.iter().map(|v| v * v).sum();
    if b_norm2 == 0.0 {
        return x;
    }
    let mut r_norm2: f64 = b_norm2;
    let stop = tol * tol * b_norm2;
    for _ in 0..max_iter {
        if r_norm2 <= stop {
            break;
        }
        let ap = apply(&p);
        let p_ap: f64 = p.iter().zip(&ap).map(|(pi, ai)| pi * ai).sum();
        if p_ap <= 0.0 || !p_ap.is_finite() {
            // Lost positive definiteness; keep the current iterate.
            break;
        }
        let alpha = r_norm2 / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let r_new2: f64 = r.iter().map(|v| v * v).sum();
        let beta = r_new2 / r_norm2;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        r_norm2 = r_new2;
    }
    x
}

/// Central finite difference of a scalar function along one coordinate.
pub fn central_diff<F>(f: &mut F, x: &mut [f64], i: usize, step: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let saved = x[i];
    x[i] = saved + step;
    let fp = f(x);
    x[i] = saved - step;
    let fm = f(x);
    x[i] = saved;
    (fp - fm) / (2.0 * step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sigmoid_matches_closed_form() {
        assert_relative_eq!(sigmoid(0.0), 0.5);
        assert_relative_eq!(sigmoid(1.0), 1.0 / (1.0 + (-1.0f64).exp()), epsilon = 1e-15);
        assert!(sigmoid(-745.0) > 0.0);
        // f64 saturates to exactly 1.0 for large inputs; no overflow or NaN.
        assert_eq!(sigmoid(745.0), 1.0);
    }

    #[test]
    fn cross_matrix_matches_cross_product() {
        let v = Vec3::new(1.0, -2.0, 0.5);
        let w = Vec3::new(0.3, 0.7, -1.1);
        assert_relative_eq!((cross_matrix(&v) * w - v.cross(&w)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn polar_rotation_recovers_rotation() {
        let q = Quat::from_euler_angles(0.3, -0.8, 1.2);
        let rot = q.to_rotation_matrix().into_inner();
        let stretch = Mat3::new(2.0, 0.1, 0.0, 0.1, 1.5, 0.0, 0.0, 0.0, 0.7);
        let r = polar_rotation(&(rot * stretch), 1e-9).unwrap();
        assert_relative_eq!((r - rot).norm(), 0.0, epsilon = 1e-10);
        assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn polar_rotation_rank_deficient_is_none() {
        let a = Mat3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(polar_rotation(&a, 1e-9).is_none());
    }

    #[test]
    fn cg_solves_spd_system() {
        // A = diag(1..6) acting on R^6.
        let apply = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v).collect();
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let x = conjugate_gradient(apply, &b, 1e-12, 100);
        for (i, xi) in x.iter().enumerate() {
            assert_relative_eq!(*xi, b[i] / (i as f64 + 1.0), epsilon = 1e-9);
        }
    }

    #[test]
    fn sym_pack_roundtrip() {
        let m = Mat3::new(1.0, 4.0, 5.0, 4.0, 2.0, 6.0, 5.0, 6.0, 3.0);
        assert_eq!(vec6_to_sym(&sym_to_vec6(&m)), m);
    }
}
