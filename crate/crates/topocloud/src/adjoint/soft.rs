//! Discrete adjoint for soft scenarios: reverse sweeps over Leapfrog and
//! implicit-Euler steps with checkpointed replay.
//!
//! Per-step transposed Jacobian products reduce to Hessian-vector and mixed
//! second-derivative products of the internal energy (rotations frozen at
//! each force evaluation, matching the forward pass). Both are formed by
//! central differences of the analytic first derivatives, so no
//! second-derivative code is required. Implicit steps are differentiated
//! through the optimality condition of the incremental potential: one
//! symmetric linear solve per reverse step.

use super::EvalError;
use crate::geometry::ParticleCloud;
use crate::math::{Pt3, Vec3};
use crate::objectives::{loss_bend_angle, loss_pivot_tracks};
use crate::optimizer::{Scenario, SoftObjective};
use crate::softsim::{
    step_implicit, step_leapfrog, ForceModel, ImplicitSettings, Integrator, SoftMaterial,
    SoftScene, SoftState,
};
use crate::topology::TopologyField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointSettings {
    /// Full states are checkpointed every this many steps and segments are
    /// replayed during the reverse sweep, bounding memory by
    /// O(interval x state size).
    pub checkpoint_interval: usize,
    /// Base step for the directional differences of the energy gradients.
    pub fd_epsilon: f64,
    /// Relative tolerance of the conjugate-gradient solve in the
    /// implicit-function step.
    pub cg_rel_tol: f64,
    pub implicit: ImplicitSettings,
}

impl Default for AdjointSettings {
    fn default() -> Self {
        AdjointSettings {
            checkpoint_interval: 25,
            fd_epsilon: 1e-6,
            cg_rel_tol: 1e-8,
            implicit: ImplicitSettings::default(),
        }
    }
}

struct Forward {
    /// `(step index, state)` at every checkpoint, starting at step 0.
    checkpoints: Vec<(usize, SoftState)>,
    times: Vec<f64>,
    tracked_rows: Vec<Vec<Pt3>>,
    final_state: SoftState,
}

struct Episode<'a> {
    cloud: &'a ParticleCloud,
    material: SoftMaterial,
    scene: &'a SoftScene,
    dt: f64,
    steps: usize,
    integrator: Integrator,
    tracked: Vec<usize>,
    pinned_mask: Vec<bool>,
}

fn build_episode<'a>(scenario: &'a Scenario, topo: &TopologyField) -> Result<Episode<'a>, EvalError> {
    let Scenario::Soft {
        cloud,
        model,
        rest_density,
        scene,
        dt,
        steps,
        integrator,
        tracked,
        objective,
        ..
    } = scenario
    else {
        unreachable!("soft adjoint called on a non-soft scenario")
    };
    let indicator = topo.eval(cloud)?;
    let material = SoftMaterial::from_indicator(cloud, *model, *rest_density, &indicator.values);
    let mut pinned_mask = vec![false; cloud.len()];
    for &i in &scene.pinned {
        pinned_mask[i] = true;
    }
    // Track everything the objective needs.
    let mut tracked = tracked.clone();
    if let SoftObjective::BendAngle { markers, .. } = objective {
        for id in [markers.base.0, markers.base.1, markers.tip.0, markers.tip.1] {
            if !tracked.contains(&id) {
                tracked.push(id);
            }
        }
    }
    Ok(Episode {
        cloud,
        material,
        scene,
        dt: *dt,
        steps: *steps,
        integrator: *integrator,
        tracked,
        pinned_mask,
    })
}

fn initial_state(episode: &Episode, scenario: &Scenario) -> SoftState {
    let Scenario::Soft { initial_velocity, .. } = scenario else { unreachable!() };
    let mut state = SoftState::rest(episode.cloud);
    state.velocities = vec![*initial_velocity; episode.cloud.len()];
    for (i, pinned) in episode.pinned_mask.iter().enumerate() {
        if *pinned {
            state.velocities[i] = Vec3::zeros();
        }
    }
    state
}

fn step_once(
    episode: &Episode,
    state: &SoftState,
    step: usize,
    settings: &AdjointSettings,
) -> Result<SoftState, EvalError> {
    let pressure = episode.scene.pressure.at(step, episode.steps);
    let next = match episode.integrator {
        Integrator::Leapfrog => step_leapfrog(
            episode.cloud,
            &episode.material,
            episode.scene,
            state,
            episode.dt,
            pressure,
        )?,
        Integrator::Implicit => {
            step_implicit(
                episode.cloud,
                &episode.material,
                episode.scene,
                state,
                episode.dt,
                pressure,
                &settings.implicit,
            )?
            .0
        }
    };
    Ok(next)
}

fn forward(
    episode: &Episode,
    initial: &SoftState,
    settings: &AdjointSettings,
) -> Result<Forward, EvalError> {
    let record = |s: &SoftState| episode.tracked.iter().map(|&i| s.positions[i]).collect();
    let mut fwd = Forward {
        checkpoints: vec![(0, initial.clone())],
        times: vec![initial.time],
        tracked_rows: vec![record(initial)],
        final_state: initial.clone(),
    };
    let mut state = initial.clone();
    for step in 0..episode.steps {
        state = step_once(episode, &state, step, settings)?;
        fwd.times.push(state.time);
        fwd.tracked_rows.push(record(&state));
        if (step + 1) % settings.checkpoint_interval == 0 && step + 1 < episode.steps {
            fwd.checkpoints.push((step + 1, state.clone()));
        }
    }
    fwd.final_state = state;
    Ok(fwd)
}

/// Loss of the episode and its cotangents as sparse per-step position
/// contributions `(particle, dL/dx)`.
fn loss_and_cotangents(
    scenario: &Scenario,
    episode: &Episode,
    fwd: &Forward,
) -> Result<(f64, Vec<Vec<(usize, Vec3)>>), EvalError> {
    let Scenario::Soft { objective, .. } = scenario else { unreachable!() };
    let rows = fwd.times.len();
    let mut cots: Vec<Vec<(usize, Vec3)>> = vec![Vec::new(); rows];
    match objective {
        SoftObjective::PivotTracks { references } => {
            let loss =
                loss_pivot_tracks(&fwd.times, &episode.tracked, &fwd.tracked_rows, references)?;
            for (row, per_slot) in loss.cotangent.iter().enumerate() {
                for (slot, cot) in per_slot.iter().enumerate() {
                    if cot.norm_squared() > 0.0 {
                        cots[row].push((episode.tracked[slot], *cot));
                    }
                }
            }
            Ok((loss.value, cots))
        }
        SoftObjective::BendAngle { markers, target } => {
            let loss = loss_bend_angle(&fwd.final_state.positions, markers, *target)?;
            for (particle, cot) in loss.cotangent {
                cots[rows - 1].push((particle, cot));
            }
            Ok((loss.value, cots))
        }
    }
}

pub fn loss(
    scenario: &Scenario,
    topo: &TopologyField,
    settings: &AdjointSettings,
) -> Result<f64, EvalError> {
    let episode = build_episode(scenario, topo)?;
    let initial = initial_state(&episode, scenario);
    let fwd = forward(&episode, &initial, settings)?;
    let (value, _) = loss_and_cotangents(scenario, &episode, &fwd)?;
    Ok(value)
}

pub fn evaluate(
    scenario: &Scenario,
    topo: &TopologyField,
    settings: &AdjointSettings,
) -> Result<(f64, Vec<f64>), EvalError> {
    let episode = build_episode(scenario, topo)?;
    let initial = initial_state(&episode, scenario);
    let fwd = forward(&episode, &initial, settings)?;
    let (value, cots) = loss_and_cotangents(scenario, &episode, &fwd)?;

    let n = episode.cloud.len();
    let mut x_cot = vec![Vec3::zeros(); n];
    let mut v_cot = vec![Vec3::zeros(); n];
    let mut r_cot = vec![0.0; n];
    for (particle, cot) in &cots[episode.steps] {
        x_cot[*particle] += *cot;
    }

    // Reverse sweep over checkpointed segments.
    for seg in (0..fwd.checkpoints.len()).rev() {
        let (start, ref cp_state) = fwd.checkpoints[seg];
        let end = if seg + 1 < fwd.checkpoints.len() {
            fwd.checkpoints[seg + 1].0
        } else {
            episode.steps
        };
        // Replay the segment, keeping every intermediate state.
        let mut states = Vec::with_capacity(end - start + 1);
        states.push(cp_state.clone());
        for step in start..end {
            let next = step_once(&episode, states.last().unwrap(), step, settings)?;
            states.push(next);
        }
        // Replay must reproduce the recorded forward pass bit for bit.
        let replayed = states.last().unwrap();
        let reference: &SoftState = if seg + 1 < fwd.checkpoints.len() {
            &fwd.checkpoints[seg + 1].1
        } else {
            &fwd.final_state
        };
        if replayed.positions != reference.positions || replayed.velocities != reference.velocities {
            return Err(EvalError::Determinism { step: end });
        }

        for local in (0..end - start).rev() {
            let step = start + local;
            let pressure = episode.scene.pressure.at(step, episode.steps);
            match episode.integrator {
                Integrator::Leapfrog => leapfrog_adjoint_step(
                    &episode,
                    &states[local],
                    &states[local + 1],
                    pressure,
                    settings,
                    &mut x_cot,
                    &mut v_cot,
                    &mut r_cot,
                )?,
                Integrator::Implicit => implicit_adjoint_step(
                    &episode,
                    &states[local],
                    &states[local + 1],
                    pressure,
                    settings,
                    &mut x_cot,
                    &mut v_cot,
                    &mut r_cot,
                )?,
            }
            if x_cot.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
                return Err(EvalError::NonFiniteCotangent { step });
            }
            for (particle, cot) in &cots[step] {
                x_cot[*particle] += *cot;
            }
        }
    }

    let grad = topo.vjp(episode.cloud, &r_cot)?;
    Ok((value, grad))
}

/// Directional derivative scale for the gradient differences.
fn directional_eps(base: f64, positions: &[Pt3], direction: &[Vec3]) -> Option<f64> {
    let dir_norm = direction.iter().fold(0.0f64, |m, v| m.max(v.amax()));
    if dir_norm == 0.0 {
        return None;
    }
    let x_norm = positions.iter().fold(0.0f64, |m, p| m.max(p.coords.amax()));
    Some(base * (1.0 + x_norm) / dir_norm)
}

/// Second-order products of the internal energy at frozen rotations, by
/// central differences of the analytic first derivatives along `direction`:
/// the Hessian product `H u`, the indicator-mixed product
/// `(d/dr)(grad_x E · u)`, and the rotation-mixed product
/// `(d/dR)(grad_x E · u)` per particle.
fn second_order_products(
    model: &ForceModel,
    positions: &[Pt3],
    rotations: &[crate::math::Mat3],
    direction: &[Vec3],
    eps: f64,
) -> Result<(Vec<Vec3>, Vec<f64>, Vec<crate::math::Mat3>), EvalError> {
    let n = positions.len();
    let shifted = |sign: f64| -> Vec<Pt3> {
        (0..n).map(|i| positions[i] + sign * eps * direction[i]).collect()
    };
    let (gx_p, gr_p, grot_p) = model.energy_grads_full(&shifted(1.0), rotations)?;
    let (gx_m, gr_m, grot_m) = model.energy_grads_full(&shifted(-1.0), rotations)?;
    let hvp: Vec<Vec3> = gx_p
        .iter()
        .zip(&gx_m)
        .map(|(p, m)| (p - m) / (2.0 * eps))
        .collect();
    let mixed: Vec<f64> = gr_p
        .iter()
        .zip(&gr_m)
        .map(|(p, m)| (p - m) / (2.0 * eps))
        .collect();
    let mixed_rot: Vec<crate::math::Mat3> = grot_p
        .iter()
        .zip(&grot_m)
        .map(|(p, m)| (p - m) / (2.0 * eps))
        .collect();
    Ok((hvp, mixed, mixed_rot))
}

/// Transposed Jacobian product of one kick-drift-kick step.
#[allow(clippy::too_many_arguments)]
fn leapfrog_adjoint_step(
    episode: &Episode,
    state_k: &SoftState,
    state_k1: &SoftState,
    pressure: f64,
    settings: &AdjointSettings,
    x_cot: &mut [Vec3],
    v_cot: &mut [Vec3],
    r_cot: &mut [f64],
) -> Result<(), EvalError> {
    let n = episode.cloud.len();
    let dt = episode.dt;
    let model = episode.scene.force_model(episode.cloud, &episode.material, pressure);
    // Pinned particles hold position and zero velocity.
    for (i, pinned) in episode.pinned_mask.iter().enumerate() {
        if *pinned {
            v_cot[i] = Vec3::zeros();
        }
    }

    // Second kick: v' = v_half + dt/2 f(x_{k+1})/m. The force was evaluated
    // at rotations re-extracted from x_{k+1}, so the pullback carries both
    // the frozen-rotation Hessian and the rotation-extraction chain.
    let u2: Vec<Vec3> = (0..n)
        .map(|i| {
            if episode.pinned_mask[i] {
                Vec3::zeros()
            } else {
                0.5 * dt / episode.material.masses[i] * v_cot[i]
            }
        })
        .collect();
    if let Some(eps) = directional_eps(settings.fd_epsilon, &state_k1.positions, &u2) {
        let (hvp, mixed, mixed_rot) =
            second_order_products(&model, &state_k1.positions, &state_k1.rotations, &u2, eps)?;
        let rot_chain = crate::softsim::rotation_vjp(
            episode.cloud,
            &state_k1.positions,
            &episode.material.masses,
            &state_k1.rotations,
            &mixed_rot,
        );
        for i in 0..n {
            x_cot[i] -= hvp[i] + rot_chain[i];
            r_cot[i] -= mixed[i];
        }
    }

    // Drift: x_{k+1} = x_k + dt v_half; then first kick mirrors the second.
    let v_half_cot: Vec<Vec3> = (0..n).map(|i| v_cot[i] + dt * x_cot[i]).collect();
    let u1: Vec<Vec3> = (0..n)
        .map(|i| {
            if episode.pinned_mask[i] {
                Vec3::zeros()
            } else {
                0.5 * dt / episode.material.masses[i] * v_half_cot[i]
            }
        })
        .collect();
    if let Some(eps) = directional_eps(settings.fd_epsilon, &state_k.positions, &u1) {
        let (hvp, mixed, mixed_rot) =
            second_order_products(&model, &state_k.positions, &state_k.rotations, &u1, eps)?;
        let rot_chain = crate::softsim::rotation_vjp(
            episode.cloud,
            &state_k.positions,
            &episode.material.masses,
            &state_k.rotations,
            &mixed_rot,
        );
        for i in 0..n {
            x_cot[i] -= hvp[i] + rot_chain[i];
            r_cot[i] -= mixed[i];
        }
    }
    for i in 0..n {
        v_cot[i] = if episode.pinned_mask[i] { Vec3::zeros() } else { v_half_cot[i] };
    }
    Ok(())
}

/// Implicit-function differentiation of one implicit-Euler step: solves the
/// transposed optimality system `(H + M/dt²) λ = x̄'` on the free degrees of
/// freedom, then distributes the cotangent to `x_k`, `v_k` and the
/// indicator.
#[allow(clippy::too_many_arguments)]
fn implicit_adjoint_step(
    episode: &Episode,
    state_k: &SoftState,
    state_k1: &SoftState,
    pressure: f64,
    settings: &AdjointSettings,
    x_cot: &mut [Vec3],
    v_cot: &mut [Vec3],
    r_cot: &mut [f64],
) -> Result<(), EvalError> {
    let n = episode.cloud.len();
    let dt = episode.dt;
    let model = episode.scene.force_model(episode.cloud, &episode.material, pressure);
    // Rotations were frozen at the step start by the forward pass.
    let rotations = crate::softsim::extract_rotations(
        episode.cloud,
        &state_k.positions,
        &episode.material.masses,
        Some(&state_k.rotations),
    );
    let free: Vec<usize> = (0..n).filter(|i| !episode.pinned_mask[*i]).collect();
    let dof = free.len() * 3;

    for (i, pinned) in episode.pinned_mask.iter().enumerate() {
        if *pinned {
            v_cot[i] = Vec3::zeros();
        }
    }

    // v' = (x' - x_k)/dt feeds both x' and x_k.
    let mut x1_cot: Vec<Vec3> = x_cot.to_vec();
    let mut xk_cot = vec![Vec3::zeros(); n];
    for &i in &free {
        x1_cot[i] += v_cot[i] / dt;
        xk_cot[i] -= v_cot[i] / dt;
    }
    // Pinned particles pass position through unchanged.
    for i in 0..n {
        if episode.pinned_mask[i] {
            xk_cot[i] += x1_cot[i];
        }
    }

    // Solve (H + M/dt²) λ = x̄' on free DoFs with a matrix-free operator.
    let rhs: Vec<f64> = free
        .iter()
        .flat_map(|&i| [x1_cot[i].x, x1_cot[i].y, x1_cot[i].z])
        .collect();
    let positions = &state_k1.positions;
    let apply = |u_flat: &[f64]| -> Vec<f64> {
        let mut direction = vec![Vec3::zeros(); n];
        for (k, &i) in free.iter().enumerate() {
            direction[i] = Vec3::new(u_flat[3 * k], u_flat[3 * k + 1], u_flat[3 * k + 2]);
        }
        let out = match directional_eps(settings.fd_epsilon, positions, &direction) {
            Some(eps) => {
                match second_order_products(&model, positions, &rotations, &direction, eps) {
                    Ok((hvp, _, _)) => hvp,
                    Err(_) => vec![Vec3::zeros(); n],
                }
            }
            None => vec![Vec3::zeros(); n],
        };
        free.iter()
            .enumerate()
            .flat_map(|(k, &i)| {
                let inertia = episode.material.masses[i] / (dt * dt);
                [
                    out[i].x + inertia * u_flat[3 * k],
                    out[i].y + inertia * u_flat[3 * k + 1],
                    out[i].z + inertia * u_flat[3 * k + 2],
                ]
            })
            .collect()
    };
    let lambda_flat =
        crate::math::conjugate_gradient(apply, &rhs, settings.cg_rel_tol, 20 * dof.max(1));
    let mut lambda = vec![Vec3::zeros(); n];
    for (k, &i) in free.iter().enumerate() {
        lambda[i] = Vec3::new(lambda_flat[3 * k], lambda_flat[3 * k + 1], lambda_flat[3 * k + 2]);
    }

    // Mixed second derivatives along λ feed the indicator directly and,
    // through the rotations frozen at the step start, the previous
    // positions.
    if let Some(eps) = directional_eps(settings.fd_epsilon, positions, &lambda) {
        let (_, mixed, mixed_rot) =
            second_order_products(&model, positions, &rotations, &lambda, eps)?;
        let rot_chain = crate::softsim::rotation_vjp(
            episode.cloud,
            &state_k.positions,
            &episode.material.masses,
            &rotations,
            &mixed_rot,
        );
        for i in 0..n {
            r_cot[i] -= mixed[i];
            xk_cot[i] -= rot_chain[i];
        }
    }

    // y = x_k + dt v_k + dt² g: the inertial target carries M/dt².
    for &i in &free {
        let y_cot = episode.material.masses[i] / (dt * dt) * lambda[i];
        xk_cot[i] += y_cot;
        v_cot[i] = dt * y_cot;
    }
    for i in 0..n {
        if episode.pinned_mask[i] {
            v_cot[i] = Vec3::zeros();
        }
        x_cot[i] = xk_cot[i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjoint::gradcheck;
    use crate::geometry::testutil::grid_cloud;
    use crate::math::Mat3;
    use crate::objectives::{BendMarkers, Track};
    use crate::softsim::{GroundPlane, Lame, MaterialModel, PressureSchedule, StrainKind};
    use crate::topology::{PointField, TopologyField};

    fn drop_scenario(steps: usize) -> Scenario {
        let cloud = grid_cloud(2, 0.02, 0.03);
        let tracked = vec![0, 3, 7];
        let references: Vec<Track> = tracked
            .iter()
            .map(|&p| Track {
                particle: p,
                times: vec![0.0, steps as f64 * 5e-4],
                points: vec![cloud.rest_positions[p], cloud.rest_positions[p]],
            })
            .collect();
        Scenario::Soft {
            cloud,
            model: MaterialModel::Blend {
                soft: Lame::from_young_poisson(5e4, 0.4),
                stiff: Lame::from_young_poisson(5e5, 0.4),
            },
            rest_density: 1000.0,
            scene: SoftScene {
                ground: Some(GroundPlane {
                    point: Pt3::new(0.0, 0.0, -0.0008),
                    normal: Vec3::z(),
                }),
                penalty_stiffness: 2e6,
                clearance: 1e-3,
                strain: StrainKind::Green,
                ..SoftScene::default()
            },
            dt: 5e-4,
            steps,
            integrator: Integrator::Leapfrog,
            tracked,
            objective: SoftObjective::PivotTracks { references },
            initial_velocity: Vec3::new(0.0, 0.0, -0.05),
        }
    }

    fn actuated_scenario(steps: usize) -> Scenario {
        let cloud = grid_cloud(2, 0.02, 0.03);
        let markers = BendMarkers { base: (0, 4), tip: (3, 7), axis: Vec3::y() };
        let pinned = vec![0, 1, 2, 3];
        Scenario::Soft {
            cloud,
            model: MaterialModel::Chamber {
                solid: Lame::from_young_poisson(2e5, 0.4),
                stiffness_floor: 1e-3,
            },
            rest_density: 1000.0,
            scene: SoftScene {
                gravity: Vec3::zeros(),
                pressure: PressureSchedule::LinearRamp { end: 2e4 },
                pinned,
                strain: StrainKind::Green,
                ..SoftScene::default()
            },
            dt: 2e-3,
            steps,
            integrator: Integrator::Implicit,
            tracked: vec![],
            objective: SoftObjective::BendAngle { markers, target: 0.15 },
            initial_velocity: Vec3::zeros(),
        }
    }

    #[test]
    fn leapfrog_gradcheck_small_drop() {
        let scenario = drop_scenario(12);
        let topo = TopologyField::point(PointField::zeros(8, 6.0));
        let report = gradcheck(&scenario, &topo, &[1e-5, 1e-4], 10, 1e-3).unwrap();
        assert!(report.pass, "{}", report.summary());
    }

    #[test]
    fn implicit_gradcheck_small_actuated_scene() {
        let scenario = actuated_scenario(5);
        let topo = TopologyField::point(PointField::uniform(8, 0.7, 6.0));
        let report = gradcheck(&scenario, &topo, &[1e-5, 1e-4], 10, 1e-3).unwrap();
        assert!(report.pass, "{}", report.summary());
    }

    #[test]
    fn checkpoint_interval_does_not_change_the_gradient() {
        let scenario = drop_scenario(14);
        let topo = TopologyField::point(PointField::uniform(8, 0.6, 6.0));
        let coarse = AdjointSettings { checkpoint_interval: 25, ..AdjointSettings::default() };
        let fine = AdjointSettings { checkpoint_interval: 3, ..AdjointSettings::default() };
        let (va, ga) = evaluate(&scenario, &topo, &coarse).unwrap();
        let (vb, gb) = evaluate(&scenario, &topo, &fine).unwrap();
        assert_eq!(va.to_bits(), vb.to_bits());
        for (a, b) in ga.iter().zip(&gb) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn implicit_function_check_on_one_dof() {
        // Scalar spring: x' = y / (1 + w² dt²). The adjoint's linear solve
        // must satisfy the transposed optimality system (H + M/dt²) dx = x̄
        // to tight tolerance.
        let k = 50.0;
        let m = 2.0;
        let dt = 0.05;
        let kappa = k + m / (dt * dt);
        let x_bar = 0.7;
        let apply = |u: &[f64]| vec![kappa * u[0]];
        let lambda = crate::math::conjugate_gradient(apply, &[x_bar], 1e-12, 100);
        let residual = (kappa * lambda[0] - x_bar).abs();
        assert!(residual <= 1e-6, "residual {residual}");
        // dx'/dy = (M/dt²)/(k + M/dt²): the adjoint reproduces it.
        let dy = m / (dt * dt) * lambda[0] / x_bar;
        let analytic = (m / (dt * dt)) / kappa;
        assert!((dy - analytic).abs() <= 1e-12);
    }

    #[test]
    fn soft_forward_is_deterministic() {
        let scenario = drop_scenario(10);
        let topo = TopologyField::point(PointField::uniform(8, 0.5, 6.0));
        let a = loss(&scenario, &topo, &AdjointSettings::default()).unwrap();
        let b = loss(&scenario, &topo, &AdjointSettings::default()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

