//! Rigid-body properties from the indicator field and Newton-Euler time
//! integration (midpoint RK2) with pin and pivot constraints.

use crate::geometry::ParticleCloud;
use crate::math::{cross_matrix, Mat3, Pt3, Quat, Vec3};
use nalgebra::Quaternion;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RigidError {
    #[error("vanishing mass: topology is fully hollow (total {total:.3e} below floor {floor:.3e})")]
    VanishingMass { total: f64, floor: f64 },
    #[error("no equilibrium defined: {0}")]
    NoEquilibrium(String),
    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

/// Mass, center of mass, and inertia about the center of mass, all in the
/// rest (body) frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidProps {
    pub mass: f64,
    pub com: Pt3,
    pub inertia: Mat3,
}

impl RigidProps {
    /// Checks positivity, symmetry and the triangle inequality on the
    /// principal moments.
    pub fn validate(&self) -> Result<(), RigidError> {
        if !(self.mass > 0.0) {
            return Err(RigidError::InvalidScene("mass must be positive".into()));
        }
        if (self.inertia - self.inertia.transpose()).norm() > 1e-9 * self.inertia.norm().max(1e-12) {
            return Err(RigidError::InvalidScene("inertia must be symmetric".into()));
        }
        let eig = self.inertia.symmetric_eigenvalues();
        let mut l = [eig[0], eig[1], eig[2]];
        l.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tol = 1e-9 * l[2].abs().max(1e-12);
        if l[0] < -tol {
            return Err(RigidError::InvalidScene("inertia must be positive semidefinite".into()));
        }
        if l[0] + l[1] < l[2] - tol {
            return Err(RigidError::InvalidScene(
                "principal moments violate the triangle inequality".into(),
            ));
        }
        Ok(())
    }

    /// Inertia about a body-frame point `p`, by the parallel-axis shift.
    pub fn inertia_about(&self, p: &Pt3) -> Mat3 {
        let d = self.com - p;
        self.inertia + self.mass * (d.norm_squared() * Mat3::identity() - d * d.transpose())
    }
}

/// `m_i = rho V_i r_i`, `c = sum m_i X_i / m`, and
/// `I = sum -m_i [X_i - c][X_i - c]` with `[.]` the cross-product matrix.
pub fn rigid_props(
    cloud: &ParticleCloud,
    indicator: &[f64],
    density: f64,
) -> Result<RigidProps, RigidError> {
    assert_eq!(indicator.len(), cloud.len());
    assert!(density > 0.0);
    let mut mass = 0.0;
    let mut first_moment = Vec3::zeros();
    for i in 0..cloud.len() {
        let m_i = density * cloud.volumes[i] * indicator[i];
        mass += m_i;
        first_moment += m_i * cloud.rest_positions[i].coords;
    }
    let floor = 1e-9 * density * cloud.total_volume();
    if mass < floor {
        return Err(RigidError::VanishingMass { total: mass, floor });
    }
    let com = Pt3::from(first_moment / mass);
    let mut inertia = Mat3::zeros();
    for i in 0..cloud.len() {
        let m_i = density * cloud.volumes[i] * indicator[i];
        let d = cloud.rest_positions[i] - com;
        inertia -= m_i * cross_matrix(&d) * cross_matrix(&d);
    }
    Ok(RigidProps { mass, com, inertia })
}

/// Chains cotangents on `(mass, com, inertia)` back to the indicator:
/// `r̄_i = rho V_i (m̄ + c̄·(X_i - c)/m + Ī : (|d_i|² I - d_i d_iᵀ))`.
/// The inertia's dependence on the center of mass drops out because the
/// first moment about the center vanishes.
pub fn rigid_props_vjp(
    cloud: &ParticleCloud,
    density: f64,
    props: &RigidProps,
    mass_cot: f64,
    com_cot: &Vec3,
    inertia_cot: &Mat3,
) -> Vec<f64> {
    let n = cloud.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let dm = density * cloud.volumes[i];
        let d = cloud.rest_positions[i] - props.com;
        let di_dm = d.norm_squared() * Mat3::identity() - d * d.transpose();
        let inertia_term = inertia_cot.component_mul(&di_dm).sum();
        let com_term = com_cot.dot(&d) / props.mass;
        out.push(dm * (mass_cot + com_term + inertia_term));
    }
    out
}

/// Six-DoF state: center-of-mass position, orientation (body to world),
/// linear velocity, and body-frame angular velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidState {
    pub position: Pt3,
    pub orientation: Quat,
    pub linear_velocity: Vec3,
    /// Angular velocity in the body frame.
    pub angular_velocity: Vec3,
    pub time: f64,
}

impl RigidState {
    /// Body at rest in its rest pose: position at the center of mass,
    /// identity orientation.
    pub fn at_rest(props: &RigidProps) -> RigidState {
        RigidState {
            position: props.com,
            orientation: Quat::identity(),
            linear_velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            time: 0.0,
        }
    }

    /// Rest pose rotated by `angle` about `axis` through the body-frame
    /// point `pivot`, at rest.
    pub fn tilted_about(props: &RigidProps, pivot: &Pt3, axis: &Vec3, angle: f64) -> RigidState {
        let q = Quat::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle);
        RigidState {
            position: pivot + q * (props.com - pivot),
            orientation: q,
            linear_velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            time: 0.0,
        }
    }
}

/// Kinematic constraint. Anchor and attach points are given in the rest
/// frame, which coincides with the world frame at identity orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RigidConstraint {
    Free,
    /// Ball joint: the body point `attach` is fixed at the world `anchor`.
    PinPoint { anchor: Pt3, attach: Pt3 },
    /// Hinge through a fixed world point with a fixed world axis; the body
    /// point initially coincident with `point` stays there.
    PivotAxis { point: Pt3, axis: Vec3 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidScene {
    pub gravity: Vec3,
    pub constraint: RigidConstraint,
    /// Linear damping rate (1/s) applied to both velocities.
    pub damping: f64,
}

impl Default for RigidScene {
    fn default() -> Self {
        RigidScene {
            gravity: Vec3::new(0.0, 0.0, -9.81),
            constraint: RigidConstraint::Free,
            damping: 0.0,
        }
    }
}

impl RigidScene {
    pub fn validate(&self) -> Result<(), RigidError> {
        if self.damping < 0.0 {
            return Err(RigidError::InvalidScene("damping must be >= 0".into()));
        }
        if let RigidConstraint::PivotAxis { axis, .. } = &self.constraint {
            if (axis.norm() - 1.0).abs() > 1e-9 {
                return Err(RigidError::InvalidScene("pivot axis must be unit length".into()));
            }
        }
        Ok(())
    }
}

/// Orientation that hangs the center of mass directly below the anchor of a
/// pin constraint, the minimum of the gravitational potential. Identity
/// when the offset already points along gravity; the antipodal case flips
/// about a deterministic horizontal axis.
pub fn equilibrium_pose(props: &RigidProps, scene: &RigidScene) -> Result<Quat, RigidError> {
    let RigidConstraint::PinPoint { attach, .. } = scene.constraint else {
        return Err(RigidError::InvalidScene(
            "equilibrium pose requires a pin-point constraint".into(),
        ));
    };
    let g = scene.gravity;
    if g.norm() == 0.0 {
        return Err(RigidError::NoEquilibrium("zero gravity".into()));
    }
    let down = g.normalize();
    let offset = props.com - attach;
    if offset.norm() < 1e-12 {
        return Err(RigidError::NoEquilibrium(
            "center of mass coincides with the attach point".into(),
        ));
    }
    let u = offset.normalize();
    let cos = u.dot(&down).clamp(-1.0, 1.0);
    if cos > 1.0 - 1e-14 {
        return Ok(Quat::identity());
    }
    if cos < -1.0 + 1e-14 {
        // Antipodal: rotate half a turn about any axis orthogonal to down;
        // pick the most stable coordinate axis projection.
        let trial = if down.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let axis = (trial - down * trial.dot(&down)).normalize();
        return Ok(Quat::from_axis_angle(&nalgebra::Unit::new_normalize(axis), std::f64::consts::PI));
    }
    let axis = u.cross(&down);
    Ok(Quat::from_axis_angle(&nalgebra::Unit::new_normalize(axis), cos.acos()))
}

/// Gravity torque about the anchor in the given pose; zero at equilibrium.
pub fn anchor_torque(props: &RigidProps, scene: &RigidScene, pose: &Quat) -> Result<Vec3, RigidError> {
    let RigidConstraint::PinPoint { attach, .. } = scene.constraint else {
        return Err(RigidError::InvalidScene("torque requires a pin-point constraint".into()));
    };
    let arm = pose * (props.com - attach);
    Ok(arm.cross(&(props.mass * scene.gravity)))
}

/// Body-frame offset from the constrained body point to the center of mass
/// for the current state. For a pin this is constant; for a pivot it is
/// recovered from the (satisfied) constraint.
fn constrained_arm(state: &RigidState, props: &RigidProps, scene: &RigidScene) -> Option<Vec3> {
    match scene.constraint {
        RigidConstraint::Free => None,
        RigidConstraint::PinPoint { attach, .. } => Some(props.com - attach),
        RigidConstraint::PivotAxis { point, .. } => {
            Some(state.orientation.inverse() * (state.position - point))
        }
    }
}

fn constraint_world_point(scene: &RigidScene) -> Option<Pt3> {
    match scene.constraint {
        RigidConstraint::Free => None,
        RigidConstraint::PinPoint { anchor, .. } => Some(anchor),
        RigidConstraint::PivotAxis { point, .. } => Some(point),
    }
}

#[derive(Clone, Copy)]
struct Derivative {
    dx: Vec3,
    dv: Vec3,
    dq: Quaternion<f64>,
    dw: Vec3,
}

/// Solves `I w = rhs` through the eigendecomposition, dropping directions
/// with vanishing moment (collinear mass distributions have a zero moment
/// about their own axis and accept no angular acceleration there).
fn solve_inertia(inertia: &Mat3, rhs: &Vec3) -> Vec3 {
    let eig = inertia.symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max <= 0.0 {
        return Vec3::zeros();
    }
    let mut out = Vec3::zeros();
    for k in 0..3 {
        let lambda = eig.eigenvalues[k];
        if lambda.abs() > 1e-12 * max {
            let axis = eig.eigenvectors.column(k);
            out += axis * (axis.dot(rhs) / lambda);
        }
    }
    out
}

fn dynamics(
    state_q: &Quat,
    omega: &Vec3,
    velocity: &Vec3,
    props: &RigidProps,
    scene: &RigidScene,
    arm: Option<&Vec3>,
) -> Derivative {
    let q = state_q;
    let dq = q.into_inner() * Quaternion::from_imag(*omega) * 0.5;
    match arm {
        None => {
            // Free body: gravity exerts no torque about the center of mass.
            let i_c = props.inertia;
            let torque_free = -omega.cross(&(i_c * omega));
            let dw = solve_inertia(&i_c, &torque_free) - scene.damping * omega;
            Derivative {
                dx: *velocity,
                dv: scene.gravity - scene.damping * velocity,
                dq,
                dw,
            }
        }
        Some(r_b) => {
            // Rotation about the fixed world point: inertia about the
            // constrained point, gravity torque through the lever arm.
            let i_a = props.inertia
                + props.mass * (r_b.norm_squared() * Mat3::identity() - r_b * r_b.transpose());
            let arm_w = q * r_b;
            let torque_b = q.inverse() * arm_w.cross(&(props.mass * scene.gravity));
            let rhs = torque_b - omega.cross(&(i_a * omega));
            let dw = solve_inertia(&i_a, &rhs) - scene.damping * omega;
            Derivative { dx: Vec3::zeros(), dv: Vec3::zeros(), dq, dw }
        }
    }
}

/// One midpoint RK2 step of the Newton-Euler equations. Constraints are
/// enforced by projection after the step: the constrained point is put back
/// on its anchor, the velocity follows the rotation, and a pivot keeps only
/// the axis component of the angular velocity.
pub fn step_rigid_rk2(
    state: &RigidState,
    props: &RigidProps,
    scene: &RigidScene,
    dt: f64,
) -> Result<RigidState, RigidError> {
    assert!(dt > 0.0);
    let arm = constrained_arm(state, props, scene);

    let k1 = dynamics(
        &state.orientation,
        &state.angular_velocity,
        &state.linear_velocity,
        props,
        scene,
        arm.as_ref(),
    );
    let q_mid = Quat::from_quaternion(state.orientation.into_inner() + 0.5 * dt * k1.dq);
    let w_mid = state.angular_velocity + 0.5 * dt * k1.dw;
    let v_mid = state.linear_velocity + 0.5 * dt * k1.dv;
    let k2 = dynamics(&q_mid, &w_mid, &v_mid, props, scene, arm.as_ref());

    let mut next = RigidState {
        position: state.position + dt * k2.dx,
        orientation: Quat::from_quaternion(state.orientation.into_inner() + dt * k2.dq),
        linear_velocity: state.linear_velocity + dt * k2.dv,
        angular_velocity: state.angular_velocity + dt * k2.dw,
        time: state.time + dt,
    };

    if let (Some(r_b), Some(world_point)) = (arm, constraint_world_point(scene)) {
        if let RigidConstraint::PivotAxis { axis, .. } = scene.constraint {
            let w_world = next.orientation * next.angular_velocity;
            let projected = axis * w_world.dot(&axis);
            next.angular_velocity = next.orientation.inverse() * projected;
        }
        let arm_w = next.orientation * r_b;
        next.position = world_point + arm_w;
        next.linear_velocity = (next.orientation * next.angular_velocity).cross(&arm_w);
    }

    let finite = next.position.coords.iter().all(|c| c.is_finite())
        && next.linear_velocity.iter().all(|c| c.is_finite())
        && next.angular_velocity.iter().all(|c| c.is_finite())
        && next.orientation.coords.iter().all(|c| c.is_finite());
    if !finite {
        return Err(RigidError::NonFinite { step: 0 });
    }
    Ok(next)
}

/// Pose time series with the tilt-angle channel used by oscillation losses.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<RigidState>,
    pub tilt: Vec<f64>,
}

impl RigidTrajectory {
    /// CSV rows `t,x,y,z,qw,qx,qy,qz,tilt_angle`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,z,qw,qx,qy,qz,tilt_angle\n");
        for (i, t) in self.times.iter().enumerate() {
            let s = &self.states[i];
            let q = s.orientation;
            out.push_str(&format!(
                "{t},{},{},{},{},{},{},{},{}\n",
                s.position.x,
                s.position.y,
                s.position.z,
                q.w,
                q.i,
                q.j,
                q.k,
                self.tilt[i]
            ));
        }
        out
    }
}

/// Tilt channel definition: signed angle about the pivot axis between the
/// gravity direction and the pivot-to-center arm for hinge scenes, the
/// unsigned hang angle for pins, zero for free bodies.
pub fn tilt_angle(state: &RigidState, scene: &RigidScene) -> f64 {
    match scene.constraint {
        RigidConstraint::Free => 0.0,
        RigidConstraint::PinPoint { anchor, .. } => {
            let d = state.position - anchor;
            let g = scene.gravity;
            if d.norm() < 1e-12 || g.norm() == 0.0 {
                0.0
            } else {
                d.normalize().dot(&g.normalize()).clamp(-1.0, 1.0).acos()
            }
        }
        RigidConstraint::PivotAxis { point, axis } => {
            signed_tilt(&state.position, &point, &scene.gravity, &axis)
        }
    }
}

pub fn signed_tilt(com: &Pt3, pivot: &Pt3, gravity: &Vec3, axis: &Vec3) -> f64 {
    let g = if gravity.norm() > 0.0 { gravity.normalize() } else { -Vec3::z() };
    let d = com - pivot;
    let d_p = d - axis * d.dot(axis);
    let g_p = g - axis * g.dot(axis);
    let sin = g_p.cross(&d_p).dot(axis);
    let cos = g_p.dot(&d_p);
    sin.atan2(cos)
}

/// Runs `steps` RK2 steps, recording the pose and tilt after each one
/// (including the initial state).
pub fn simulate_rigid(
    initial: &RigidState,
    props: &RigidProps,
    scene: &RigidScene,
    dt: f64,
    steps: usize,
) -> Result<RigidTrajectory, RigidError> {
    assert!(steps >= 1);
    scene.validate()?;
    props.validate()?;
    let mut traj = RigidTrajectory {
        times: vec![initial.time],
        states: vec![*initial],
        tilt: vec![tilt_angle(initial, scene)],
    };
    let mut state = *initial;
    for step in 0..steps {
        state = step_rigid_rk2(&state, props, scene, dt).map_err(|e| match e {
            RigidError::NonFinite { .. } => RigidError::NonFinite { step },
            other => other,
        })?;
        traj.times.push(state.time);
        traj.states.push(state);
        traj.tilt.push(tilt_angle(&state, scene));
    }
    Ok(traj)
}
