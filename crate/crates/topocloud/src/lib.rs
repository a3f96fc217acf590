//! Mesh-free interior topology inference.
//!
//! The pipeline works entirely on particle clouds, never on meshes:
//!
//! 1. [`geometry`] ingests a surface point cloud and fills its interior with
//!    volume-carrying particles on a voxel lattice.
//! 2. [`topology`] maps a parametric representation (per-particle field,
//!    quadric surface, or neural implicit surface) to a per-particle material
//!    indicator `r ∈ (0,1)`.
//! 3. [`rigidsim`] / [`softsim`] simulate the cloud as a rigid body
//!    (Newton-Euler, RK2) or a corotated hyperelastic solid (SPH kernels,
//!    Leapfrog or implicit Euler), with pneumatic actuation and ground
//!    collision penalties.
//! 4. [`objectives`] turns trajectories into scalar losses on motion features
//!    (balance point, oscillation period, bend angle, tracked points).
//! 5. [`adjoint`] backpropagates those losses through the simulation to the
//!    topology parameters and ships a finite-difference verification harness.
//! 6. [`optimizer`] runs Adam or box-constrained L-BFGS over the parameters.
//! 7. [`cli`] wires everything into a configuration-driven command surface.

pub mod adjoint;
pub mod cli;
pub mod geometry;
pub mod math;
pub mod objectives;
pub mod optimizer;
pub mod rigidsim;
pub mod softsim;
pub mod topology;

pub use geometry::{FillConfig, ParticleCloud, SurfaceCloud};
pub use topology::{IndicatorField, TopologyField};
