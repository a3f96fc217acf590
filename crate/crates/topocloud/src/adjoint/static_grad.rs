//! Exact analytic gradients for objectives that depend on the rigid
//! properties only: no time stepping, just the chain
//! `dL/dtheta = (dL/dc)(dc/dm_i)(dm_i/dr_i)(dr_i/dtheta)`.

use super::EvalError;
use crate::math::{Mat3, Vec3};
use crate::objectives::{loss_com, loss_pose_sequence};
use crate::optimizer::{Scenario, StaticObjective};
use crate::rigidsim::{rigid_props, rigid_props_vjp};
use crate::topology::TopologyField;

pub fn evaluate(scenario: &Scenario, topo: &TopologyField) -> Result<(f64, Vec<f64>), EvalError> {
    let Scenario::RigidStatic { cloud, density, objective } = scenario else {
        unreachable!("static gradient called on a dynamic scenario");
    };
    let indicator = topo.eval(cloud)?;
    match objective {
        StaticObjective::ComTarget { target } => {
            let props = rigid_props(cloud, &indicator.values, *density)?;
            let loss = loss_com(&props, target);
            let r_cot = rigid_props_vjp(
                cloud,
                *density,
                &props,
                0.0,
                &loss.cotangent,
                &Mat3::zeros(),
            );
            let grad = topo.vjp(cloud, &r_cot)?;
            Ok((loss.value, grad))
        }
        StaticObjective::PoseSequence { spec } => {
            let loss = loss_pose_sequence(cloud, &indicator.values, spec)?;
            let grad = topo.vjp(cloud, &loss.cotangent)?;
            Ok((loss.value, grad))
        }
    }
}

/// Shared helper for dynamic rigid scenarios: chains a props cotangent
/// `(mass, com, inertia as 6 parameters)` into the topology parameters.
pub fn props_cotangent_to_params(
    cloud: &crate::geometry::ParticleCloud,
    density: f64,
    props: &crate::rigidsim::RigidProps,
    props_cot: &[f64; 10],
    topo: &TopologyField,
) -> Result<Vec<f64>, EvalError> {
    let mass_cot = props_cot[0];
    let com_cot = Vec3::new(props_cot[1], props_cot[2], props_cot[3]);
    // The six inertia parameters are [xx, yy, zz, xy, xz, yz]; an
    // off-diagonal parameter feeds two symmetric matrix slots, so the
    // matrix cotangent carries half in each.
    let inertia_cot = Mat3::new(
        props_cot[4],
        props_cot[7] / 2.0,
        props_cot[8] / 2.0,
        props_cot[7] / 2.0,
        props_cot[5],
        props_cot[9] / 2.0,
        props_cot[8] / 2.0,
        props_cot[9] / 2.0,
        props_cot[6],
    );
    let r_cot = rigid_props_vjp(cloud, density, props, mass_cot, &com_cot, &inertia_cot);
    Ok(topo.vjp(cloud, &r_cot)?)
}
