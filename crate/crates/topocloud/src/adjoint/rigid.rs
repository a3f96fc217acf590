//! Discrete adjoint for rigid dynamic scenarios.
//!
//! The per-step Jacobians of the RK2 step map (with respect to the 13 state
//! components and the 10 rigid-property parameters) are formed by central
//! differences of the step itself, then applied transposed in a reverse
//! sweep. The rigid state is small enough to store every step outright.

use super::static_grad::props_cotangent_to_params;
use super::EvalError;
use crate::math::{Pt3, Quat, Vec3};
use crate::objectives::loss_oscillation;
use crate::optimizer::{RigidDynamicScene, Scenario};
use crate::rigidsim::{
    rigid_props, simulate_rigid, step_rigid_rk2, tilt_angle, RigidConstraint, RigidProps,
    RigidState,
};
use crate::topology::TopologyField;

const STATE_DIM: usize = 13;
const PROP_DIM: usize = 10;
const FD_EPS: f64 = 1e-7;

fn flat_of(state: &RigidState) -> [f64; STATE_DIM] {
    let q = state.orientation.into_inner();
    [
        state.position.x,
        state.position.y,
        state.position.z,
        state.linear_velocity.x,
        state.linear_velocity.y,
        state.linear_velocity.z,
        q.w,
        q.i,
        q.j,
        q.k,
        state.angular_velocity.x,
        state.angular_velocity.y,
        state.angular_velocity.z,
    ]
}

fn state_of(flat: &[f64; STATE_DIM], time: f64) -> RigidState {
    RigidState {
        position: Pt3::new(flat[0], flat[1], flat[2]),
        linear_velocity: Vec3::new(flat[3], flat[4], flat[5]),
        orientation: Quat::from_quaternion(nalgebra::Quaternion::new(
            flat[6], flat[7], flat[8], flat[9],
        )),
        angular_velocity: Vec3::new(flat[10], flat[11], flat[12]),
        time,
    }
}

fn props_of(p: &[f64; PROP_DIM]) -> RigidProps {
    RigidProps {
        mass: p[0],
        com: Pt3::new(p[1], p[2], p[3]),
        inertia: crate::math::vec6_to_sym(&[p[4], p[5], p[6], p[7], p[8], p[9]]),
    }
}

fn params_of(props: &RigidProps) -> [f64; PROP_DIM] {
    let i6 = crate::math::sym_to_vec6(&props.inertia);
    [
        props.mass, props.com.x, props.com.y, props.com.z, i6[0], i6[1], i6[2], i6[3], i6[4],
        i6[5],
    ]
}

/// Initial pose: tilted about the constraint axis (the y axis for pins),
/// at rest.
pub fn initial_state(props: &RigidProps, dynamic: &RigidDynamicScene) -> RigidState {
    match dynamic.scene.constraint {
        RigidConstraint::PivotAxis { point, axis } => {
            RigidState::tilted_about(props, &point, &axis, dynamic.initial_tilt)
        }
        RigidConstraint::PinPoint { anchor, attach } => {
            let q = Quat::from_axis_angle(&nalgebra::Unit::new_normalize(Vec3::y()), dynamic.initial_tilt);
            RigidState {
                position: anchor + q * (props.com - attach),
                orientation: q,
                linear_velocity: Vec3::zeros(),
                angular_velocity: Vec3::zeros(),
                time: 0.0,
            }
        }
        RigidConstraint::Free => RigidState::at_rest(props),
    }
}

fn step_flat(
    y: &[f64; STATE_DIM],
    p: &[f64; PROP_DIM],
    dynamic: &RigidDynamicScene,
) -> Result<[f64; STATE_DIM], crate::rigidsim::RigidError> {
    let props = props_of(p);
    let state = state_of(y, 0.0);
    let next = step_rigid_rk2(&state, &props, &dynamic.scene, dynamic.dt)?;
    Ok(flat_of(&next))
}

fn unpack(scenario: &Scenario) -> (&crate::geometry::ParticleCloud, f64, &RigidDynamicScene, f64, f64, (f64, f64)) {
    let Scenario::RigidDynamic { cloud, density, dynamic, target_period, target_max_tilt, weights } =
        scenario
    else {
        unreachable!("rigid adjoint called on a non-rigid scenario")
    };
    (cloud, *density, dynamic, *target_period, *target_max_tilt, *weights)
}

pub fn loss(scenario: &Scenario, topo: &TopologyField) -> Result<f64, EvalError> {
    let (cloud, density, dynamic, t_star, theta_star, weights) = unpack(scenario);
    let indicator = topo.eval(cloud)?;
    let props = rigid_props(cloud, &indicator.values, density)?;
    let initial = initial_state(&props, dynamic);
    let traj = simulate_rigid(&initial, &props, &dynamic.scene, dynamic.dt, dynamic.steps)?;
    let (loss, _) = loss_oscillation(&traj.times, &traj.tilt, t_star, theta_star, weights)?;
    Ok(loss.value)
}

pub fn evaluate(scenario: &Scenario, topo: &TopologyField) -> Result<(f64, Vec<f64>), EvalError> {
    let (cloud, density, dynamic, t_star, theta_star, weights) = unpack(scenario);
    let indicator = topo.eval(cloud)?;
    let props = rigid_props(cloud, &indicator.values, density)?;
    let p0 = params_of(&props);
    let initial = initial_state(&props, dynamic);
    let traj = simulate_rigid(&initial, &props, &dynamic.scene, dynamic.dt, dynamic.steps)?;
    let (loss, _) = loss_oscillation(&traj.times, &traj.tilt, t_star, theta_star, weights)?;

    let flats: Vec<[f64; STATE_DIM]> = traj.states.iter().map(flat_of).collect();
    let mut state_cot = [0.0; STATE_DIM];
    let mut prop_cot = [0.0; PROP_DIM];

    for k in (0..=dynamic.steps).rev() {
        // Loss touches the trajectory through the tilt channel.
        if loss.cotangent[k] != 0.0 {
            let dtilt = tilt_state_gradient(&flats[k], &dynamic.scene);
            for j in 0..STATE_DIM {
                state_cot[j] += loss.cotangent[k] * dtilt[j];
            }
        }
        if k > 0 {
            reverse_step(&flats[k - 1], &p0, dynamic, &mut state_cot, &mut prop_cot)
                .map_err(EvalError::Rigid)?;
        }
        if state_cot.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFiniteCotangent { step: k });
        }
    }

    // The initial state is built from the properties; chain through it.
    let init_flat = |p: &[f64; PROP_DIM]| flat_of(&initial_state(&props_of(p), dynamic));
    for j in 0..PROP_DIM {
        let eps = FD_EPS * (1.0 + p0[j].abs());
        let mut pp = p0;
        pp[j] += eps;
        let plus = init_flat(&pp);
        pp[j] = p0[j] - eps;
        let minus = init_flat(&pp);
        let mut acc = 0.0;
        for i in 0..STATE_DIM {
            acc += state_cot[i] * (plus[i] - minus[i]) / (2.0 * eps);
        }
        prop_cot[j] += acc;
    }

    let grad = props_cotangent_to_params(cloud, density, &props, &prop_cot, topo)?;
    Ok((loss.value, grad))
}

/// Pulls the cotangent back across one step: `state_cot <- J_yᵀ state_cot`,
/// `prop_cot += J_pᵀ state_cot`, with both Jacobians from central
/// differences of the step map.
fn reverse_step(
    y: &[f64; STATE_DIM],
    p: &[f64; PROP_DIM],
    dynamic: &RigidDynamicScene,
    state_cot: &mut [f64; STATE_DIM],
    prop_cot: &mut [f64; PROP_DIM],
) -> Result<(), crate::rigidsim::RigidError> {
    let mut new_state_cot = [0.0; STATE_DIM];
    for j in 0..STATE_DIM {
        let eps = FD_EPS * (1.0 + y[j].abs());
        let mut yp = *y;
        yp[j] += eps;
        let plus = step_flat(&yp, p, dynamic)?;
        yp[j] = y[j] - eps;
        let minus = step_flat(&yp, p, dynamic)?;
        let mut acc = 0.0;
        for i in 0..STATE_DIM {
            acc += state_cot[i] * (plus[i] - minus[i]) / (2.0 * eps);
        }
        new_state_cot[j] = acc;
    }
    for j in 0..PROP_DIM {
        let eps = FD_EPS * (1.0 + p[j].abs());
        let mut pp = *p;
        pp[j] += eps;
        let plus = step_flat(y, &pp, dynamic)?;
        pp[j] = p[j] - eps;
        let minus = step_flat(y, &pp, dynamic)?;
        let mut acc = 0.0;
        for i in 0..STATE_DIM {
            acc += state_cot[i] * (plus[i] - minus[i]) / (2.0 * eps);
        }
        prop_cot[j] += acc;
    }
    *state_cot = new_state_cot;
    Ok(())
}

fn tilt_state_gradient(y: &[f64; STATE_DIM], scene: &crate::rigidsim::RigidScene) -> [f64; STATE_DIM] {
    let mut out = [0.0; STATE_DIM];
    for j in 0..STATE_DIM {
        let eps = FD_EPS * (1.0 + y[j].abs());
        let mut yp = *y;
        yp[j] += eps;
        let plus = tilt_angle(&state_of(&yp, 0.0), scene);
        yp[j] = y[j] - eps;
        let minus = tilt_angle(&state_of(&yp, 0.0), scene);
        out[j] = (plus - minus) / (2.0 * eps);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjoint::{evaluate_loss, gradcheck};
    use crate::geometry::ParticleCloud;
    use crate::optimizer::StaticObjective;
    use crate::rigidsim::RigidScene;
    use crate::topology::{PointField, TopologyField};

    fn two_particle_pendulum() -> (ParticleCloud, RigidDynamicScene) {
        // Two point masses on a vertical rod below the pivot.
        let cloud = ParticleCloud::from_points(
            vec![Pt3::new(0.0, 0.0, -0.2), Pt3::new(0.0, 0.0, -0.5)],
            1e-4,
            0.3,
        );
        let dynamic = RigidDynamicScene {
            scene: RigidScene {
                constraint: RigidConstraint::PivotAxis { point: Pt3::origin(), axis: Vec3::y() },
                ..RigidScene::default()
            },
            initial_tilt: 0.1,
            dt: 5e-3,
            steps: 600,
        };
        (cloud, dynamic)
    }

    fn scenario(cloud: ParticleCloud, dynamic: RigidDynamicScene, t_star: f64) -> Scenario {
        Scenario::RigidDynamic {
            cloud,
            density: 1000.0,
            dynamic,
            target_period: t_star,
            target_max_tilt: 0.1,
            weights: (1.0, 0.0),
        }
    }

    #[test]
    fn zero_weights_give_zero_gradient() {
        let (cloud, dynamic) = two_particle_pendulum();
        let topo = TopologyField::point(PointField::zeros(2, 10.0));
        let s = Scenario::RigidDynamic {
            cloud,
            density: 1000.0,
            dynamic,
            target_period: 0.5,
            target_max_tilt: 0.1,
            weights: (0.0, 0.0),
        };
        let (value, grad) = evaluate(&s, &topo).unwrap();
        assert_eq!(value, 0.0);
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn pendulum_gradient_sign_matches_analytic_period_derivative() {
        // More mass at the far particle lengthens the period
        // (d(I/mL)/dm_far > 0 for a two-mass bob). With the target period
        // above the current one, the loss decreases as the period grows, so
        // the gradient on the far particle's theta must be negative.
        let (cloud, dynamic) = two_particle_pendulum();
        let topo = TopologyField::point(PointField::zeros(2, 10.0));
        // Current period is about 2 pi sqrt(I/(m g L)); pick a target well above.
        let s = scenario(cloud, dynamic, 3.0);
        let (_, grad) = evaluate(&s, &topo).unwrap();
        assert!(grad[1] < 0.0, "far-particle gradient {grad:?}");
        assert!(grad[0] > 0.0, "near-particle gradient {grad:?}");
    }

    #[test]
    fn pendulum_gradcheck_passes_dynamic_tolerance() {
        let (cloud, dynamic) = two_particle_pendulum();
        let topo =
            TopologyField::point(PointField { theta: vec![0.2, -0.1], beta: 6.0 });
        let s = scenario(cloud, dynamic, 1.1);
        let report = gradcheck(&s, &topo, &[1e-5, 1e-4], 10, 1e-3).unwrap();
        assert!(report.pass, "{}", report.summary());
    }

    #[test]
    fn forward_passes_are_bit_identical() {
        let (cloud, dynamic) = two_particle_pendulum();
        let topo = TopologyField::point(PointField { theta: vec![0.3, 0.1], beta: 5.0 });
        let s = scenario(cloud, dynamic, 1.0);
        let a = evaluate_loss(&s, &topo).unwrap();
        let b = evaluate_loss(&s, &topo).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let (_, g1) = evaluate(&s, &topo).unwrap();
        let (_, g2) = evaluate(&s, &topo).unwrap();
        assert!(g1.iter().zip(&g2).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn gradient_of_sum_is_sum_of_gradients() {
        // Static com objective under two different targets: linearity of
        // the chain means grad(L1) + grad(L2) matches the elementwise sum.
        let cloud = crate::geometry::testutil::grid_cloud(3, 0.05, 0.075);
        // Varied field: symmetric configurations put exactly-zero gradients
        // on central particles, where finite differences see only roundoff.
        let theta: Vec<f64> = (0..cloud.len()).map(|i| 0.05 * ((i * 7 % 13) as f64 - 6.0)).collect();
        let topo = TopologyField::point(PointField { theta, beta: 8.0 });
        let s1 = Scenario::RigidStatic {
            cloud: cloud.clone(),
            density: 1000.0,
            objective: StaticObjective::ComTarget { target: Pt3::new(0.02, 0.0, 0.0) },
        };
        let s2 = Scenario::RigidStatic {
            cloud,
            density: 1000.0,
            objective: StaticObjective::ComTarget { target: Pt3::new(0.0, 0.03, 0.01) },
        };
        let (v1, g1) = crate::adjoint::evaluate(&s1, &topo).unwrap();
        let (v2, g2) = crate::adjoint::evaluate(&s2, &topo).unwrap();
        let sum_value = v1 + v2;
        let sum_grad: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + b).collect();
        // FD of the summed loss.
        let params = topo.params();
        let mut probe = topo.clone();
        let report = crate::adjoint::gradcheck_fn(
            |p: &[f64]| {
                probe.set_params(p);
                crate::adjoint::evaluate_loss(&s1, &probe).unwrap()
                    + crate::adjoint::evaluate_loss(&s2, &probe).unwrap()
            },
            &params,
            &sum_grad,
            &[1e-5],
            30,
            1e-6,
        );
        assert!(report.pass, "{}", report.summary());
        assert!(sum_value > 0.0);
    }
}
