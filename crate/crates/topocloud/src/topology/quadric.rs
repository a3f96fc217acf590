//! Quadric signed-distance surface, `s(x) = xᵀAx + bᵀx + c` with symmetric
//! `A`: ten free parameters in total.

use super::{deterministic_param_accumulate, IndicatorField, TopologyError};
use crate::geometry::ParticleCloud;
use crate::math::{sigmoid, Mat3, Pt3, Vec3};
use rayon::prelude::*;

/// Parameter order: `[a11, a22, a33, a12, a13, a23, b1, b2, b3, c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadricSdf {
    pub a: Mat3,
    pub b: Vec3,
    pub c: f64,
    pub beta: f64,
}

impl QuadricSdf {
    pub fn zero(beta: f64) -> QuadricSdf {
        QuadricSdf { a: Mat3::zeros(), b: Vec3::zeros(), c: 0.0, beta }
    }

    /// Sphere level set `|x - center|² - radius²`, negative inside.
    pub fn sphere(center: Pt3, radius: f64, beta: f64) -> QuadricSdf {
        QuadricSdf {
            a: Mat3::identity(),
            b: -2.0 * center.coords,
            c: center.coords.norm_squared() - radius * radius,
            beta,
        }
    }

    /// Constant-field quadric with `s = c` everywhere; `c < 0` is solid.
    pub fn constant(c: f64, beta: f64) -> QuadricSdf {
        QuadricSdf { a: Mat3::zeros(), b: Vec3::zeros(), c, beta }
    }

    pub fn params(&self) -> [f64; 10] {
        [
            self.a[(0, 0)],
            self.a[(1, 1)],
            self.a[(2, 2)],
            self.a[(0, 1)],
            self.a[(0, 2)],
            self.a[(1, 2)],
            self.b.x,
            self.b.y,
            self.b.z,
            self.c,
        ]
    }

    pub fn set_params(&mut self, p: &[f64; 10]) {
        self.a = Mat3::new(p[0], p[3], p[4], p[3], p[1], p[5], p[4], p[5], p[2]);
        self.b = Vec3::new(p[6], p[7], p[8]);
        self.c = p[9];
    }

    pub fn sdf(&self, x: &Pt3) -> f64 {
        let v = x.coords;
        (v.transpose() * self.a * v)[(0, 0)] + self.b.dot(&v) + self.c
    }

    /// `ds/dparams` at `x` in the canonical parameter order. Off-diagonal
    /// entries of `A` appear twice in `xᵀAx`, hence the factor 2.
    pub fn sdf_param_grad(x: &Pt3) -> [f64; 10] {
        let v = x.coords;
        [
            v.x * v.x,
            v.y * v.y,
            v.z * v.z,
            2.0 * v.x * v.y,
            2.0 * v.x * v.z,
            2.0 * v.y * v.z,
            v.x,
            v.y,
            v.z,
            1.0,
        ]
    }

    pub fn eval(&self, cloud: &ParticleCloud) -> Result<IndicatorField, TopologyError> {
        let sdf: Vec<f64> = cloud.rest_positions.par_iter().map(|p| self.sdf(p)).collect();
        if let Some(i) = sdf.iter().position(|s| !s.is_finite()) {
            return Err(TopologyError::NonFinite { particle: i });
        }
        let values = sdf
            .iter()
            .map(|&s| super::clamp_indicator(sigmoid(-self.beta * s)))
            .collect();
        Ok(IndicatorField { values, sdf_values: Some(sdf), pinned: vec![false; cloud.len()] })
    }

    /// Chains `upstream · dr/ds · ds/dparams` with `dr/ds = -beta r (1-r)`.
    pub fn vjp(&self, cloud: &ParticleCloud, upstream: &[f64]) -> Result<Vec<f64>, TopologyError> {
        let beta = self.beta;
        let positions = &cloud.rest_positions;
        Ok(deterministic_param_accumulate(cloud.len(), 10, |i, acc| {
            let s = self.sdf(&positions[i]);
            let r = sigmoid(-beta * s);
            let dr_ds = -beta * r * (1.0 - r);
            let ds = Self::sdf_param_grad(&positions[i]);
            let scale = upstream[i] * dr_ds;
            for (a, d) in acc.iter_mut().zip(ds) {
                *a += scale * d;
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ParticleCloud;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn single_particle(p: Pt3) -> ParticleCloud {
        ParticleCloud::from_points(vec![p], 1.0, 0.1)
    }

    #[test]
    fn unit_sphere_quadric_values() {
        // A = I, b = 0, c = -0.25: the radius-0.5 sphere about the origin.
        let q = QuadricSdf {
            a: Mat3::identity(),
            b: Vec3::zeros(),
            c: -0.25,
            beta: 10.0,
        };
        let inside = q.eval(&single_particle(Pt3::origin())).unwrap();
        assert_relative_eq!(inside.sdf_values.as_ref().unwrap()[0], -0.25);
        assert_relative_eq!(inside.values[0], 0.9241418199787566, epsilon = 1e-12);
        let level = q.eval(&single_particle(Pt3::new(0.5, 0.0, 0.0))).unwrap();
        assert_relative_eq!(level.sdf_values.as_ref().unwrap()[0], 0.0);
        assert_relative_eq!(level.values[0], 0.5);
    }

    #[test]
    fn origin_gradient_only_reaches_c() {
        let grad = QuadricSdf::sdf_param_grad(&Pt3::origin());
        assert_eq!(&grad[0..9], &[0.0; 9]);
        assert_eq!(grad[9], 1.0);
    }

    #[test]
    fn param_gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let positions: Vec<Pt3> = (0..40)
            .map(|_| Pt3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let cloud = ParticleCloud::from_points(positions, 1e-3, 0.2);
        let mut q = QuadricSdf::sphere(Pt3::new(0.1, -0.2, 0.05), 0.6, 3.0);
        q.a[(0, 1)] += 0.15;
        q.a[(1, 0)] += 0.15;
        let upstream: Vec<f64> = (0..cloud.len()).map(|i| 0.3 + 0.01 * i as f64).collect();
        let analytic = q.vjp(&cloud, &upstream).unwrap();

        // Loss surrogate: L = sum_i upstream_i * r_i, differentiated by
        // central differences on each of the 10 parameters.
        let loss = |params: &[f64; 10]| {
            let mut probe = q.clone();
            probe.set_params(params);
            let ind = probe.eval(&cloud).unwrap();
            ind.values.iter().zip(&upstream).map(|(r, u)| r * u).sum::<f64>()
        };
        let base = q.params();
        let step = 1e-6;
        for k in 0..10 {
            let mut plus = base;
            plus[k] += step;
            let mut minus = base;
            minus[k] -= step;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * step);
            assert!(
                crate::math::rel_err(analytic[k], fd, 1e-12) <= 1e-6,
                "param {k}: analytic {} vs fd {fd}",
                analytic[k]
            );
        }
    }

    #[test]
    fn sharpness_limit_approaches_sign() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let positions: Vec<Pt3> = (0..100)
            .map(|_| Pt3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let cloud = ParticleCloud::from_points(positions, 1e-3, 0.2);
        let q = QuadricSdf::sphere(Pt3::origin(), 0.5, 1e4);
        let ind = q.eval(&cloud).unwrap();
        for (r, s) in ind.values.iter().zip(ind.sdf_values.as_ref().unwrap()) {
            if s.abs() > 1e-2 {
                let target = if *s < 0.0 { 1.0 } else { 0.0 };
                assert!((r - target).abs() < 1e-12, "r={r} s={s}");
            }
        }
    }
}
