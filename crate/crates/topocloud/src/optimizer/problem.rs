//! The unit of an end-to-end run: scene, topology parameters, objective,
//! and optimizer settings.

use super::{AdamSettings, Bounds, LbfgsbSettings};
use crate::geometry::ParticleCloud;
use crate::math::{Pt3, Vec3};
use crate::objectives::{BendMarkers, PoseSequenceSpec, Track};
use crate::rigidsim::RigidScene;
use crate::softsim::{Integrator, MaterialModel, SoftScene};
use crate::topology::TopologyField;

/// Iteration and evaluation limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_iterations: usize,
    pub max_evaluations: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_iterations: 200, max_evaluations: 100_000 }
    }
}

/// Canonical initial guesses for each representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterInit {
    /// Indicator 0.5 everywhere: zero point field, zero quadric, zero net.
    Half,
    /// Indicator near 1 everywhere with usable gradients (r = 0.95).
    Solid,
    /// Quadric: centered sphere covering half the volume; others as `Half`.
    CenteredSphere,
}

/// Static objectives defined directly on the rigid properties.
#[derive(Debug, Clone, PartialEq)]
pub enum StaticObjective {
    ComTarget { target: Pt3 },
    PoseSequence { spec: PoseSequenceSpec },
}

/// Objectives on soft trajectories.
#[derive(Debug, Clone, PartialEq)]
pub enum SoftObjective {
    PivotTracks { references: Vec<Track> },
    BendAngle { markers: BendMarkers, target: f64 },
}

/// Rigid dynamic episode description: the body starts at rest, tilted about
/// the constraint axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidDynamicScene {
    pub scene: RigidScene,
    pub initial_tilt: f64,
    pub dt: f64,
    pub steps: usize,
}

/// What gets simulated and scored for one loss evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    RigidStatic {
        cloud: ParticleCloud,
        density: f64,
        objective: StaticObjective,
    },
    RigidDynamic {
        cloud: ParticleCloud,
        density: f64,
        dynamic: RigidDynamicScene,
        /// Oscillation target `(period, max tilt)` and loss weights.
        target_period: f64,
        target_max_tilt: f64,
        weights: (f64, f64),
    },
    Soft {
        cloud: ParticleCloud,
        model: MaterialModel,
        rest_density: f64,
        scene: SoftScene,
        dt: f64,
        steps: usize,
        integrator: Integrator,
        tracked: Vec<usize>,
        objective: SoftObjective,
        /// Initial velocity applied uniformly (the episode starts at rest
        /// positions).
        initial_velocity: Vec3,
    },
}

impl Scenario {
    pub fn cloud(&self) -> &ParticleCloud {
        match self {
            Scenario::RigidStatic { cloud, .. } => cloud,
            Scenario::RigidDynamic { cloud, .. } => cloud,
            Scenario::Soft { cloud, .. } => cloud,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    Adam(AdamSettings),
    Lbfgsb(LbfgsbSettings),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptProblem {
    pub scenario: Scenario,
    pub topology: TopologyField,
    pub bounds: Option<Bounds>,
    pub budget: Budget,
    pub continuation: super::ContinuationSchedule,
    pub algorithm: Algorithm,
    pub seed: u64,
}

impl OptProblem {
    pub fn validate(&self) -> Result<(), super::OptError> {
        if let Some(b) = &self.bounds {
            b.validate(self.topology.param_count())?;
        }
        if self.budget.max_evaluations == 0 {
            return Err(super::OptError::Invalid("evaluation budget must be positive".into()));
        }
        Ok(())
    }
}
