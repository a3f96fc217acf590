//! Per-particle decision variables squashed through a sigmoid.

use super::{deterministic_param_accumulate, IndicatorField, TopologyError};
use crate::geometry::ParticleCloud;
use crate::math::sigmoid;
use rayon::prelude::*;

/// One scalar decision variable per particle; `r_i = sigmoid(beta * theta_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointField {
    pub theta: Vec<f64>,
    /// Sigmoid sharpness, strictly positive.
    pub beta: f64,
}

impl PointField {
    pub fn zeros(n: usize, beta: f64) -> PointField {
        PointField { theta: vec![0.0; n], beta }
    }

    /// Uniform value chosen so every particle starts at indicator `r`.
    pub fn uniform(n: usize, r: f64, beta: f64) -> PointField {
        let theta = (r / (1.0 - r)).ln() / beta;
        PointField { theta: vec![theta; n], beta }
    }

    pub fn eval(&self, cloud: &ParticleCloud) -> Result<IndicatorField, TopologyError> {
        if self.theta.len() != cloud.len() {
            return Err(TopologyError::SizeMismatch { field: self.theta.len(), cloud: cloud.len() });
        }
        let values: Vec<f64> = self
            .theta
            .par_iter()
            .map(|&t| super::clamp_indicator(sigmoid(self.beta * t)))
            .collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(TopologyError::NonFinite { particle: i });
        }
        Ok(IndicatorField { values, sdf_values: None, pinned: vec![false; cloud.len()] })
    }

    /// `dL/dtheta_i = upstream_i * beta * r_i * (1 - r_i)`; no cross-terms.
    pub fn vjp(&self, cloud: &ParticleCloud, upstream: &[f64]) -> Result<Vec<f64>, TopologyError> {
        let _ = cloud;
        let beta = self.beta;
        let theta = &self.theta;
        Ok(deterministic_param_accumulate(theta.len(), theta.len(), |i, acc| {
            let r = sigmoid(beta * theta[i]);
            acc[i] += upstream[i] * beta * r * (1.0 - r);
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::testutil::grid_cloud;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_theta_gives_half() {
        let cloud = grid_cloud(2, 0.1, 0.15);
        let field = PointField::zeros(cloud.len(), 4.0);
        let ind = field.eval(&cloud).unwrap();
        assert!(ind.values.iter().all(|&r| r == 0.5));
    }

    #[test]
    fn saturation_at_large_theta() {
        let cloud = grid_cloud(2, 0.1, 0.15);
        let mut field = PointField::zeros(cloud.len(), 1.0);
        field.theta[0] = 1e6;
        let ind = field.eval(&cloud).unwrap();
        assert!((1.0 - ind.values[0]).abs() < 1e-12);
        assert!(ind.values[0] < 1.0);
    }

    #[test]
    fn gradient_matches_scalar_finite_difference() {
        // beta = 2, theta = 0.5: r = sigmoid(1) ≈ 0.731059, dr/dtheta ≈ 0.393224.
        let cloud = ParticleCloud::from_points(vec![crate::math::Pt3::origin()], 1.0, 0.1);
        let field = PointField { theta: vec![0.5], beta: 2.0 };
        let ind = field.eval(&cloud).unwrap();
        assert_relative_eq!(ind.values[0], 0.7310585786300049, epsilon = 1e-12);
        let grad = field.vjp(&cloud, &[1.0]).unwrap();
        let step = 1e-6;
        let fd = (sigmoid(2.0 * (0.5 + step)) - sigmoid(2.0 * (0.5 - step))) / (2.0 * step);
        assert_relative_eq!(grad[0], fd, epsilon = 1e-9);
        assert_relative_eq!(grad[0], 0.3932238664829637, epsilon = 1e-12);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let cloud = grid_cloud(2, 0.1, 0.15);
        let field = PointField::zeros(3, 1.0);
        assert!(matches!(field.eval(&cloud), Err(TopologyError::SizeMismatch { .. })));
    }

    use crate::geometry::ParticleCloud;

    proptest! {
        #[test]
        fn indicator_strictly_increasing_in_theta(t1 in -5.0f64..5.0, dt in 1e-6f64..2.0, beta in 0.1f64..50.0) {
            // Strict monotonicity holds wherever the sigmoid has not
            // saturated past f64 resolution.
            prop_assume!((beta * (t1 + dt)).abs() < 30.0 && (beta * t1).abs() < 30.0);
            let r1 = sigmoid(beta * t1);
            let r2 = sigmoid(beta * (t1 + dt));
            prop_assert!(r2 > r1);
        }
    }
}
