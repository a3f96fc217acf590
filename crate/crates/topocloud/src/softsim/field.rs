//! SPH field estimates on the particle cloud: density, per-particle
//! rotation, and the corotated deformation gradient.

use super::kernel::{kernel, kernel_grad};
use crate::geometry::ParticleCloud;
use crate::math::{polar_rotation, Mat3, Pt3};
use rayon::prelude::*;

/// `rho_i = sum_j m_j W(X_i - X_j, h)` over the rest configuration,
/// including the self contribution.
pub fn sph_density(cloud: &ParticleCloud, masses: &[f64]) -> Vec<f64> {
    let h = cloud.kernel_radius;
    let w0 = kernel(&crate::math::Vec3::zeros(), h);
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let mut rho = masses[i] * w0;
            for &j in &cloud.neighbor_lists[i] {
                let d = cloud.rest_positions[i] - cloud.rest_positions[j];
                rho += masses[j] * kernel(&d, h);
            }
            rho
        })
        .collect()
}

/// Rotation factor of `A_i = sum_j m_j W(X_ij, h) (x_j - x_i)(X_j - X_i)^T`.
///
/// Falls back to `previous` (identity when absent) for particles whose
/// moment matrix has fewer than two independent directions.
pub fn extract_rotations(
    cloud: &ParticleCloud,
    positions: &[Pt3],
    masses: &[f64],
    previous: Option<&[Mat3]>,
) -> Vec<Mat3> {
    let h = cloud.kernel_radius;
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let mut a = Mat3::zeros();
            for &j in &cloud.neighbor_lists[i] {
                let rest = cloud.rest_positions[j] - cloud.rest_positions[i];
                let w = kernel(&(-rest), h);
                let cur = positions[j] - positions[i];
                a += masses[j] * w * cur * rest.transpose();
            }
            polar_rotation(&a, 1e-9).unwrap_or_else(|| match previous {
                Some(prev) => prev[i],
                None => Mat3::identity(),
            })
        })
        .collect()
}

/// Corotated deformation gradient per particle:
/// `F_i = I + (sum_j q_j u_ji grad_W(X_i - X_j)^T)^T` with
/// `u_ji = R_i^T (x_j - x_i) - (X_j - X_i)` and stencil weights `q_j`.
pub fn deformation_gradients(
    cloud: &ParticleCloud,
    positions: &[Pt3],
    rotations: &[Mat3],
    stencil_weights: &[f64],
) -> Vec<Mat3> {
    let h = cloud.kernel_radius;
    (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let r_t = rotations[i].transpose();
            let mut grad_u = Mat3::zeros();
            for &j in &cloud.neighbor_lists[i] {
                let rest = cloud.rest_positions[j] - cloud.rest_positions[i];
                let u = r_t * (positions[j] - positions[i]) - rest;
                let g = kernel_grad(&(-rest), h);
                grad_u += stencil_weights[j] * u * g.transpose();
            }
            Mat3::identity() + grad_u.transpose()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::testutil::grid_cloud;
    use crate::math::{Quat, Vec3};
    use approx::assert_relative_eq;

    #[test]
    fn single_particle_density_is_self_term() {
        let cloud = ParticleCloud::from_points(vec![Pt3::origin()], 1.0, 1.0);
        let rho = sph_density(&cloud, &[1.0]);
        assert_relative_eq!(rho[0], 1.0 / std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn density_is_linear_in_mass() {
        let cloud = grid_cloud(3, 0.1, 0.15);
        let m1 = vec![0.7; cloud.len()];
        let m2: Vec<f64> = m1.iter().map(|m| 2.0 * m).collect();
        let r1 = sph_density(&cloud, &m1);
        let r2 = sph_density(&cloud, &m2);
        for (a, b) in r1.iter().zip(&r2) {
            assert_relative_eq!(2.0 * a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn uniform_grid_density_matches_nominal() {
        // Brute-force sum on the center of an 11^3 grid; the estimate should
        // land within 5% of mass per voxel volume.
        let d = 0.1;
        let cloud = grid_cloud(11, d, 1.5 * d);
        let mass = 1.3e-3;
        let rho = sph_density(&cloud, &vec![mass; cloud.len()]);
        let center = cloud
            .rest_positions
            .iter()
            .position(|p| (p - Pt3::new(5.0 * d, 5.0 * d, 5.0 * d)).norm() < 1e-12)
            .unwrap();
        let nominal = mass / (d * d * d);
        assert!(
            (rho[center] - nominal).abs() / nominal < 0.05,
            "rho {} vs nominal {nominal}",
            rho[center]
        );
    }

    #[test]
    fn undeformed_rotations_are_identity() {
        let cloud = grid_cloud(4, 0.1, 0.15);
        let masses = vec![1e-3; cloud.len()];
        let rots = extract_rotations(&cloud, &cloud.rest_positions, &masses, None);
        for r in &rots {
            assert_relative_eq!((r - Mat3::identity()).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rigid_rotation_is_recovered() {
        let cloud = grid_cloud(4, 0.1, 0.15);
        let masses = vec![1e-3; cloud.len()];
        let q = Quat::from_euler_angles(0.4, -0.2, 0.9);
        let rot = q.to_rotation_matrix().into_inner();
        let shift = Vec3::new(0.3, -0.1, 0.2);
        let moved: Vec<Pt3> = cloud
            .rest_positions
            .iter()
            .map(|p| Pt3::from(rot * p.coords + shift))
            .collect();
        let rots = extract_rotations(&cloud, &moved, &masses, None);
        for r in &rots {
            assert!((r - rot).norm() < 1e-6);
        }
    }

    #[test]
    fn pure_stretch_rotation_is_identity() {
        // Axis-aligned stretch leaves the moment matrix symmetric wherever
        // the neighborhood is lattice-symmetric, i.e. on interior particles.
        let d = 0.1;
        let cloud = grid_cloud(7, d, 1.5 * d);
        let masses = vec![1e-3; cloud.len()];
        let stretched: Vec<Pt3> = cloud
            .rest_positions
            .iter()
            .map(|p| Pt3::new(2.0 * p.x, p.y, p.z))
            .collect();
        let rots = extract_rotations(&cloud, &stretched, &masses, None);
        let center = cloud
            .rest_positions
            .iter()
            .position(|p| (p - Pt3::new(3.0 * d, 3.0 * d, 3.0 * d)).norm() < 1e-12)
            .unwrap();
        assert!((rots[center] - Mat3::identity()).norm() < 1e-6);
    }

    #[test]
    fn isolated_particle_falls_back_to_previous() {
        let cloud = ParticleCloud::from_points(
            vec![Pt3::origin(), Pt3::new(10.0, 0.0, 0.0)],
            1.0,
            0.1,
        );
        let prev = vec![Quat::from_euler_angles(0.1, 0.2, 0.3).to_rotation_matrix().into_inner(); 2];
        let rots = extract_rotations(&cloud, &cloud.rest_positions, &[1.0, 1.0], Some(&prev));
        assert_eq!(rots[0], prev[0]);
        let rots_fresh = extract_rotations(&cloud, &cloud.rest_positions, &[1.0, 1.0], None);
        assert_eq!(rots_fresh[0], Mat3::identity());
    }

    fn stencil(cloud: &ParticleCloud, masses: &[f64]) -> Vec<f64> {
        let rho = sph_density(cloud, masses);
        masses.iter().zip(&rho).map(|(m, r)| m / r).collect()
    }

    #[test]
    fn identity_map_gives_identity_gradient() {
        let cloud = grid_cloud(4, 0.1, 0.15);
        let masses = vec![1e-3; cloud.len()];
        let rots = vec![Mat3::identity(); cloud.len()];
        let f = deformation_gradients(&cloud, &cloud.rest_positions, &rots, &stencil(&cloud, &masses));
        for fi in &f {
            assert_eq!(*fi, Mat3::identity());
        }
    }

    #[test]
    fn rigid_motion_gives_identity_gradient() {
        let cloud = grid_cloud(5, 0.1, 0.15);
        let masses = vec![1e-3; cloud.len()];
        let q = Quat::from_euler_angles(-0.7, 0.3, 0.5);
        let rot = q.to_rotation_matrix().into_inner();
        let moved: Vec<Pt3> = cloud
            .rest_positions
            .iter()
            .map(|p| Pt3::from(rot * p.coords + Vec3::new(0.05, -0.3, 0.12)))
            .collect();
        let rots = extract_rotations(&cloud, &moved, &masses, None);
        let f = deformation_gradients(&cloud, &moved, &rots, &stencil(&cloud, &masses));
        for fi in &f {
            assert!((fi - Mat3::identity()).norm() < 1e-5, "|F - I| = {}", (fi - Mat3::identity()).norm());
        }
    }

    #[test]
    fn uniform_scale_recovered_on_interior_particle() {
        let d = 0.1;
        let cloud = grid_cloud(9, d, 1.5 * d);
        let masses = vec![1e-3; cloud.len()];
        let scaled: Vec<Pt3> = cloud.rest_positions.iter().map(|p| Pt3::from(1.1 * p.coords)).collect();
        let rots = extract_rotations(&cloud, &scaled, &masses, None);
        let f = deformation_gradients(&cloud, &scaled, &rots, &stencil(&cloud, &masses));
        let center = cloud
            .rest_positions
            .iter()
            .position(|p| (p - Pt3::new(4.0 * d, 4.0 * d, 4.0 * d)).norm() < 1e-12)
            .unwrap();
        let target = 1.1 * Mat3::identity();
        let err = (f[center] - target).norm() / target.norm();
        assert!(err < 0.02, "relative error {err}");
    }
}

/// Pulls a per-particle cotangent on the extracted rotations back to the
/// positions.
///
/// With `A = R S` the polar factor moves as `dR = R [w]x` where the axial
/// vector solves `(tr(S) I - S) w = axial(Rᵀ dA - dAᵀ R)`; chaining a
/// cotangent through that relation gives `dL/dA = R [(tr(S) I - S)⁻¹ m]x`
/// with `m` the axial vector of the skew part of `Rᵀ dL/dR`. Particles with
/// a near-singular moment matrix used the fallback rotation in the forward
/// pass and contribute nothing.
pub fn rotation_vjp(
    cloud: &ParticleCloud,
    positions: &[Pt3],
    masses: &[f64],
    rotations: &[Mat3],
    cotangents: &[Mat3],
) -> Vec<crate::math::Vec3> {
    use crate::math::Vec3;
    let h = cloud.kernel_radius;
    let n = cloud.len();
    let axial = |k: &Mat3| Vec3::new(k[(2, 1)], k[(0, 2)], k[(1, 0)]);
    let cross = |w: &Vec3| crate::math::cross_matrix(w);

    // dL/dA_i per particle.
    let a_cots: Vec<Mat3> = (0..n)
        .into_par_iter()
        .map(|i| {
            if cotangents[i] == Mat3::zeros() {
                return Mat3::zeros();
            }
            let mut a = Mat3::zeros();
            for &j in &cloud.neighbor_lists[i] {
                let rest = cloud.rest_positions[j] - cloud.rest_positions[i];
                let w = kernel(&(-rest), h);
                let cur = positions[j] - positions[i];
                a += masses[j] * w * cur * rest.transpose();
            }
            let r = rotations[i];
            let s = r.transpose() * a;
            let s_sym = 0.5 * (s + s.transpose());
            let k = s_sym.trace() * Mat3::identity() - s_sym;
            // Singular when the moment matrix has rank <= 1: the forward pass
            // fell back to a constant rotation there.
            let det = k.determinant();
            let scale = k.norm();
            if !(det.abs() > 1e-12 * scale * scale * scale.max(1e-300)) {
                return Mat3::zeros();
            }
            let rt_w = r.transpose() * cotangents[i];
            let m_axial = Vec3::new(
                rt_w[(2, 1)] - rt_w[(1, 2)],
                rt_w[(0, 2)] - rt_w[(2, 0)],
                rt_w[(1, 0)] - rt_w[(0, 1)],
            );
            let Some(k_inv) = k.try_inverse() else { return Mat3::zeros() };
            let mu = k_inv * m_axial;
            let _ = axial;
            r * cross(&mu)
        })
        .collect();

    // Scatter dA back to the positions with a per-particle gather.
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec3::zeros();
            for &i in &cloud.neighbor_lists[k] {
                // Term with j = k in A_i's sum.
                let rest_ik = cloud.rest_positions[k] - cloud.rest_positions[i];
                let w_ik = kernel(&(-rest_ik), h);
                out += masses[k] * w_ik * (a_cots[i] * rest_ik);
                // Term with i = k, j = i in A_k's sum.
                let rest_ki = cloud.rest_positions[i] - cloud.rest_positions[k];
                let w_ki = kernel(&(-rest_ki), h);
                out -= masses[i] * w_ki * (a_cots[k] * rest_ki);
            }
            out
        })
        .collect()
}
