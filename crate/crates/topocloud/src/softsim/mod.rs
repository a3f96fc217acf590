//! Hyperelastic particle-cloud simulation: SPH kernels, corotated Saint
//! Venant-Kirchhoff elasticity, pneumatic actuation, ground penalties, and
//! Leapfrog / implicit-Euler time integration.

mod energy;
mod field;
mod integrate;
pub mod kernel;
mod material;

pub use energy::{
    actuation_energy_forces, elastic_energy_forces, penalty_energy_forces, EnergyReport,
    ForceModel, GroundPlane,
};
pub use field::{deformation_gradients, extract_rotations, rotation_vjp, sph_density};
pub use integrate::{
    simulate_soft, step_implicit, step_leapfrog, ImplicitSettings, ImplicitStats, Integrator,
    PressureSchedule, SoftScene, SoftTrajectory,
};
pub use kernel::{kernel, kernel_grad};
pub use material::{Lame, MaterialModel, QuadratureWeights, SoftMaterial};

use crate::geometry::ParticleCloud;
use crate::math::{Mat3, Pt3, Vec3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SoftError {
    #[error("inverted element at particle {particle} (det F <= 0 under actuation)")]
    InvertedElement { particle: usize },
    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

/// Which strain measure feeds the stress energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrainKind {
    /// Green-Saint-Venant, `(JᵀJ - I)/2`: rotation invariant.
    Green,
    /// Linearized Cauchy, `(J + Jᵀ)/2 - I`: for small-strain checks.
    Cauchy,
}

/// Dynamic state of the soft body.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftState {
    pub positions: Vec<Pt3>,
    pub velocities: Vec<Vec3>,
    /// Per-particle rotation extracted at `positions`.
    pub rotations: Vec<Mat3>,
    /// Corotated deformation gradient at `positions`.
    pub def_grads: Vec<Mat3>,
    pub time: f64,
}

impl SoftState {
    /// Rest state: positions at `X_i`, zero velocity, identity frames.
    pub fn rest(cloud: &ParticleCloud) -> SoftState {
        SoftState {
            positions: cloud.rest_positions.clone(),
            velocities: vec![Vec3::zeros(); cloud.len()],
            rotations: vec![Mat3::identity(); cloud.len()],
            def_grads: vec![Mat3::identity(); cloud.len()],
            time: 0.0,
        }
    }

    /// Recomputes rotations and deformation gradients from the positions.
    pub fn refresh_frames(&mut self, cloud: &ParticleCloud, material: &SoftMaterial) {
        self.rotations =
            extract_rotations(cloud, &self.positions, &material.masses, Some(&self.rotations));
        let stencil: Vec<f64> =
            (0..cloud.len()).map(|j| material.stencil_weight(cloud, j)).collect();
        self.def_grads = deformation_gradients(cloud, &self.positions, &self.rotations, &stencil);
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().all(|p| p.coords.iter().all(|c| c.is_finite()))
            && self.velocities.iter().all(|v| v.iter().all(|c| c.is_finite()))
    }
}
