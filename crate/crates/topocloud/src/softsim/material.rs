//! Per-particle material data derived from the topology indicator.

use super::sph_density;
use crate::geometry::ParticleCloud;

/// Lamé parameters in Pa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lame {
    pub mu: f64,
    pub lambda: f64,
}

impl Lame {
    pub fn from_young_poisson(young: f64, poisson: f64) -> Lame {
        Lame {
            mu: young / (2.0 * (1.0 + poisson)),
            lambda: young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson)),
        }
    }
}

/// How the indicator maps to per-particle stiffness and chamber weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialModel {
    /// Two solid phases: `lame(r) = soft + r (stiff - soft)`, no actuation
    /// chamber. `r = 1` is exactly the stiff phase, `r = 0` the soft one.
    Blend { soft: Lame, stiff: Lame },
    /// Solid plus pneumatic chamber: the hollow fraction `w = 1 - r` acts as
    /// the chamber, and chamber material keeps `stiffness_floor` times the
    /// solid stiffness so the cloud stays simulable.
    Chamber { solid: Lame, stiffness_floor: f64 },
}

impl MaterialModel {
    pub fn lame(&self, r: f64) -> Lame {
        match *self {
            MaterialModel::Blend { soft, stiff } => Lame {
                mu: soft.mu + r * (stiff.mu - soft.mu),
                lambda: soft.lambda + r * (stiff.lambda - soft.lambda),
            },
            MaterialModel::Chamber { solid, stiffness_floor } => {
                let s = stiffness_floor + (1.0 - stiffness_floor) * r;
                Lame { mu: solid.mu * s, lambda: solid.lambda * s }
            }
        }
    }

    /// The maps are affine in `r`, so the derivatives are constants.
    pub fn dlame_dr(&self) -> (f64, f64) {
        match *self {
            MaterialModel::Blend { soft, stiff } => (stiff.mu - soft.mu, stiff.lambda - soft.lambda),
            MaterialModel::Chamber { solid, stiffness_floor } => (
                solid.mu * (1.0 - stiffness_floor),
                solid.lambda * (1.0 - stiffness_floor),
            ),
        }
    }

    pub fn chamber_weight(&self, r: f64) -> f64 {
        match self {
            MaterialModel::Blend { .. } => 0.0,
            MaterialModel::Chamber { .. } => 1.0 - r,
        }
    }

    pub fn dweight_dr(&self) -> f64 {
        match self {
            MaterialModel::Blend { .. } => 0.0,
            MaterialModel::Chamber { .. } => -1.0,
        }
    }
}

/// Which weights multiply the kernel gradient in the deformation-gradient
/// stencil. The mass-over-density form is the reference; rest volumes are
/// exposed for comparison and agree when the SPH density is consistent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureWeights {
    SphMassDensity,
    RestVolume,
}

/// Per-particle masses, SPH densities, Lamé parameters and chamber weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMaterial {
    pub model: MaterialModel,
    pub rest_density: f64,
    pub masses: Vec<f64>,
    /// SPH density at rest, `rho_i = sum_j m_j W(X_ij, h)` including self.
    pub sph_density: Vec<f64>,
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
    pub chamber_weights: Vec<f64>,
    pub quadrature: QuadratureWeights,
}

impl SoftMaterial {
    /// Uniform mass `rho V_i`; stiffness and chamber weights from the
    /// indicator through the material model.
    pub fn from_indicator(
        cloud: &ParticleCloud,
        model: MaterialModel,
        rest_density: f64,
        indicator: &[f64],
    ) -> SoftMaterial {
        assert_eq!(indicator.len(), cloud.len());
        let masses: Vec<f64> = cloud.volumes.iter().map(|v| rest_density * v).collect();
        let density = sph_density(cloud, &masses);
        let mut mu = Vec::with_capacity(cloud.len());
        let mut lambda = Vec::with_capacity(cloud.len());
        let mut weights = Vec::with_capacity(cloud.len());
        for &r in indicator {
            let lame = model.lame(r);
            mu.push(lame.mu);
            lambda.push(lame.lambda);
            weights.push(model.chamber_weight(r));
        }
        SoftMaterial {
            model,
            rest_density,
            masses,
            sph_density: density,
            mu,
            lambda,
            chamber_weights: weights,
            quadrature: QuadratureWeights::SphMassDensity,
        }
    }

    /// Homogeneous material, no chamber.
    pub fn uniform(cloud: &ParticleCloud, lame: Lame, rest_density: f64) -> SoftMaterial {
        let r = vec![1.0; cloud.len()];
        SoftMaterial::from_indicator(
            cloud,
            MaterialModel::Blend { soft: lame, stiff: lame },
            rest_density,
            &r,
        )
    }

    /// Refreshes the indicator-derived fields in place (masses and SPH
    /// density depend only on the cloud and stay fixed).
    pub fn update_indicator(&mut self, indicator: &[f64]) {
        for (i, &r) in indicator.iter().enumerate() {
            let lame = self.model.lame(r);
            self.mu[i] = lame.mu;
            self.lambda[i] = lame.lambda;
            self.chamber_weights[i] = self.model.chamber_weight(r);
        }
    }

    /// Integration measure `m_i / rho_i` for energies defined per particle.
    pub fn measure(&self, i: usize) -> f64 {
        self.masses[i] / self.sph_density[i]
    }

    /// Stencil weight for particle `j` in the deformation-gradient sum.
    pub fn stencil_weight(&self, cloud: &ParticleCloud, j: usize) -> f64 {
        match self.quadrature {
            QuadratureWeights::SphMassDensity => self.masses[j] / self.sph_density[j],
            QuadratureWeights::RestVolume => cloud.volumes[j],
        }
    }
}
