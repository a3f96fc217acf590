//! Time integration: symplectic Leapfrog for passive scenes and implicit
//! Euler via incremental-potential minimization for actuated ones.

use super::energy::{ForceModel, GroundPlane};
use super::material::SoftMaterial;
use super::{extract_rotations, SoftError, SoftState, StrainKind};
use crate::geometry::ParticleCloud;
use crate::math::{Pt3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Leapfrog,
    Implicit,
}

/// Actuation pressure over the episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureSchedule {
    Constant(f64),
    /// Ramps linearly from zero to `end`, reaching it on the last step.
    LinearRamp { end: f64 },
}

impl PressureSchedule {
    pub fn at(&self, step: usize, steps: usize) -> f64 {
        match *self {
            PressureSchedule::Constant(p) => p,
            PressureSchedule::LinearRamp { end } => {
                if steps == 0 {
                    end
                } else {
                    end * (step + 1) as f64 / steps as f64
                }
            }
        }
    }
}

/// Boundary conditions and load terms for a soft episode.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftScene {
    pub gravity: Vec3,
    pub ground: Option<GroundPlane>,
    pub penalty_stiffness: f64,
    /// Contact clearance in meters; the penalty activates below it.
    pub clearance: f64,
    pub pressure: PressureSchedule,
    /// Particles held fixed with zero velocity.
    pub pinned: Vec<usize>,
    pub strain: StrainKind,
}

impl Default for SoftScene {
    fn default() -> Self {
        SoftScene {
            gravity: Vec3::new(0.0, 0.0, -9.81),
            ground: None,
            penalty_stiffness: 1e5,
            clearance: 1e-3,
            pressure: PressureSchedule::Constant(0.0),
            pinned: Vec::new(),
            strain: StrainKind::Green,
        }
    }
}

impl SoftScene {
    pub fn validate(&self, n_particles: usize) -> Result<(), SoftError> {
        if self.penalty_stiffness < 0.0 {
            return Err(SoftError::InvalidScene("penalty stiffness must be >= 0".into()));
        }
        if self.clearance < 0.0 {
            return Err(SoftError::InvalidScene("clearance must be >= 0".into()));
        }
        if let Some(g) = &self.ground {
            if (g.normal.norm() - 1.0).abs() > 1e-9 {
                return Err(SoftError::InvalidScene("ground normal must be unit length".into()));
            }
        }
        if self.pinned.iter().any(|&i| i >= n_particles) {
            return Err(SoftError::InvalidScene("pinned index out of range".into()));
        }
        Ok(())
    }

    pub fn force_model<'a>(
        &self,
        cloud: &'a ParticleCloud,
        material: &'a SoftMaterial,
        pressure: f64,
    ) -> ForceModel<'a> {
        ForceModel {
            cloud,
            material,
            strain: self.strain,
            ground: self.ground,
            penalty_stiffness: self.penalty_stiffness,
            clearance: self.clearance,
            gravity: self.gravity,
            pressure,
        }
    }
}

/// Kick-drift-kick over flat coordinate arrays. Pinned coordinates carry
/// zero inverse mass and zero velocity, so they stay exactly in place.
pub(crate) fn leapfrog_flat<F>(
    x: &mut [f64],
    v: &mut [f64],
    inv_mass: &[f64],
    dt: f64,
    mut force: F,
) -> Result<(), SoftError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, SoftError>,
{
    let f1 = force(x)?;
    for i in 0..x.len() {
        v[i] += 0.5 * dt * f1[i] * inv_mass[i];
        x[i] += dt * v[i];
    }
    let f2 = force(x)?;
    for i in 0..x.len() {
        v[i] += 0.5 * dt * f2[i] * inv_mass[i];
    }
    Ok(())
}

fn flat_of_points(points: &[Pt3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len() * 3);
    for p in points {
        out.extend_from_slice(&[p.x, p.y, p.z]);
    }
    out
}

fn points_of_flat(flat: &[f64]) -> Vec<Pt3> {
    flat.chunks_exact(3).map(|c| Pt3::new(c[0], c[1], c[2])).collect()
}

/// One Leapfrog step; forces (and rotations) are re-evaluated at both the
/// start and the drifted positions.
pub fn step_leapfrog(
    cloud: &ParticleCloud,
    material: &SoftMaterial,
    scene: &SoftScene,
    state: &SoftState,
    dt: f64,
    pressure: f64,
) -> Result<SoftState, SoftError> {
    assert!(dt > 0.0);
    let model = scene.force_model(cloud, material, pressure);
    let n = cloud.len();
    let mut pinned_mask = vec![false; n];
    for &i in &scene.pinned {
        pinned_mask[i] = true;
    }
    let mut inv_mass = Vec::with_capacity(3 * n);
    for i in 0..n {
        let im = if pinned_mask[i] { 0.0 } else { 1.0 / material.masses[i] };
        inv_mass.extend_from_slice(&[im, im, im]);
    }

    let mut x = flat_of_points(&state.positions);
    let mut v = Vec::with_capacity(3 * n);
    for (i, vel) in state.velocities.iter().enumerate() {
        if pinned_mask[i] {
            v.extend_from_slice(&[0.0, 0.0, 0.0]);
        } else {
            v.extend_from_slice(&[vel.x, vel.y, vel.z]);
        }
    }

    let mut rotations = state.rotations.clone();
    leapfrog_flat(&mut x, &mut v, &inv_mass, dt, |flat| {
        let positions = points_of_flat(flat);
        rotations = extract_rotations(cloud, &positions, &material.masses, Some(&rotations));
        let forces = model.total_forces(&positions, &rotations)?;
        let mut out = Vec::with_capacity(3 * n);
        for f in &forces {
            out.extend_from_slice(&[f.x, f.y, f.z]);
        }
        Ok(out)
    })?;

    let mut next = SoftState {
        positions: points_of_flat(&x),
        velocities: v.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect(),
        rotations: state.rotations.clone(),
        def_grads: state.def_grads.clone(),
        time: state.time + dt,
    };
    if !next.is_finite() {
        return Err(SoftError::NonFinite { step: 0 });
    }
    next.refresh_frames(cloud, material);
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitSettings {
    pub max_iterations: usize,
    /// Convergence is declared at gradient infinity norm below
    /// `tolerance_scale * mean(m) * |g|` (9.81 stands in for zero gravity).
    pub tolerance_scale: f64,
    pub max_line_search: usize,
    pub cg_relative_tol: f64,
}

impl Default for ImplicitSettings {
    fn default() -> Self {
        ImplicitSettings {
            max_iterations: 50,
            tolerance_scale: 1e-6,
            max_line_search: 40,
            cg_relative_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitStats {
    pub iterations: usize,
    pub converged: bool,
    /// Infinity norm of the incremental-potential gradient at acceptance.
    pub residual: f64,
    pub tolerance: f64,
}

/// Minimizes `phi` by damped Newton with a gradient-descent fallback and
/// Armijo backtracking. The Hessian is applied through central differences
/// of the gradient inside conjugate-gradient iterations. Closures return
/// `None` for invalid configurations (treated as infinite energy).
pub(crate) fn minimize_incremental<E, G>(
    x0: Vec<f64>,
    tolerance: f64,
    settings: &ImplicitSettings,
    energy: E,
    grad: G,
) -> (Vec<f64>, ImplicitStats)
where
    E: Fn(&[f64]) -> Option<f64>,
    G: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0;
    let mut stats = ImplicitStats {
        iterations: 0,
        converged: false,
        residual: f64::INFINITY,
        tolerance,
    };
    let mut e_cur = match energy(&x) {
        Some(e) => e,
        None => return (x, stats),
    };
    for it in 0..settings.max_iterations {
        stats.iterations = it;
        let g = match grad(&x) {
            Some(g) => g,
            None => break,
        };
        let res = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        stats.residual = res;
        if res <= tolerance {
            stats.converged = true;
            return (x, stats);
        }

        // Newton direction by CG on (H d = -g); H applied via central
        // differences of the gradient along each CG direction.
        let hvp = |u: &[f64]| -> Option<Vec<f64>> {
            let u_norm = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if u_norm == 0.0 {
                return Some(vec![0.0; n]);
            }
            let x_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let eps = 1e-6 * (1.0 + x_norm) / u_norm;
            let xp: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + eps * b).collect();
            let xm: Vec<f64> = x.iter().zip(u).map(|(a, b)| a - eps * b).collect();
            let gp = grad(&xp)?;
            let gm = grad(&xm)?;
            Some(gp.iter().zip(&gm).map(|(p, m)| (p - m) / (2.0 * eps)).collect())
        };
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut d = cg_fallible(&hvp, &rhs, settings.cg_relative_tol, 4 * n)
            .unwrap_or_else(|| rhs.clone());
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) || d.iter().any(|v| !v.is_finite()) {
            d = rhs.clone();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }

        // Armijo backtracking.
        let c1 = 1e-4;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..settings.max_line_search {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            if let Some(et) = energy(&xt) {
                if et <= e_cur + c1 * alpha * slope {
                    x = xt;
                    e_cur = et;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if let Some(g) = grad(&x) {
        stats.residual = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        stats.converged = stats.residual <= tolerance;
    }
    (x, stats)
}

/// Conjugate gradient that aborts (returning `None`) when the operator
/// fails or loses positive definiteness before any progress.
fn cg_fallible<F>(apply: &F, b: &[f64], rel_tol: f64, max_iter: usize) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let b_norm2: f64 = b.iter().map(|v| v * v).sum();
    if b_norm2 == 0.0 {
        return Some(x);
    }
    let mut r_norm2 = b_norm2;
    let stop = rel_tol * rel_tol * b_norm2;
    let mut progressed = false;
    for _ in 0..max_iter {
        if r_norm2 <= stop {
            break;
        }
        let ap = apply(&p)?;
        let p_ap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(p_ap > 0.0) {
            return if progressed { Some(x) } else { None };
        }
        let alpha = r_norm2 / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        progressed = true;
        let r_new2: f64 = r.iter().map(|v| v * v).sum();
        let beta = r_new2 / r_norm2;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        r_norm2 = r_new2;
    }
    Some(x)
}

/// One implicit-Euler step: minimizes the incremental potential
/// `E(x) + (x - y)ᵀ M (x - y) / (2 dt²)` with `y = x_k + dt v_k + dt² g`,
/// rotations frozen at the step start, then sets `v = (x' - x_k)/dt`.
pub fn step_implicit(
    cloud: &ParticleCloud,
    material: &SoftMaterial,
    scene: &SoftScene,
    state: &SoftState,
    dt: f64,
    pressure: f64,
    settings: &ImplicitSettings,
) -> Result<(SoftState, ImplicitStats), SoftError> {
    assert!(dt > 0.0);
    let n = cloud.len();
    let model = scene.force_model(cloud, material, pressure);
    let rotations = extract_rotations(cloud, &state.positions, &material.masses, Some(&state.rotations));

    let mut pinned_mask = vec![false; n];
    for &i in &scene.pinned {
        pinned_mask[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|i| !pinned_mask[*i]).collect();
    let dof = free.len() * 3;

    let mut y = vec![0.0; dof];
    let mut m_dof = vec![0.0; dof];
    for (k, &i) in free.iter().enumerate() {
        let yi = state.positions[i].coords + dt * state.velocities[i] + dt * dt * scene.gravity;
        for a in 0..3 {
            y[3 * k + a] = yi[a];
            m_dof[3 * k + a] = material.masses[i];
        }
    }

    let assemble = |z: &[f64]| -> Vec<Pt3> {
        let mut positions = state.positions.clone();
        for (k, &i) in free.iter().enumerate() {
            positions[i] = Pt3::new(z[3 * k], z[3 * k + 1], z[3 * k + 2]);
        }
        positions
    };
    let inertia = |z: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..dof {
            let d = z[i] - y[i];
            acc += 0.5 * m_dof[i] * d * d / (dt * dt);
        }
        acc
    };
    let energy = |z: &[f64]| -> Option<f64> {
        let positions = assemble(z);
        match model.internal_energy(&positions, &rotations) {
            Ok(e) if e.is_finite() => Some(e + inertia(z)),
            _ => None,
        }
    };
    let grad = |z: &[f64]| -> Option<Vec<f64>> {
        let positions = assemble(z);
        let forces = model.internal_forces(&positions, &rotations).ok()?;
        let mut g = vec![0.0; dof];
        for (k, &i) in free.iter().enumerate() {
            for a in 0..3 {
                let gi = -forces[i][a] + m_dof[3 * k + a] * (z[3 * k + a] - y[3 * k + a]) / (dt * dt);
                if !gi.is_finite() {
                    return None;
                }
                g[3 * k + a] = gi;
            }
        }
        Some(g)
    };

    let mean_mass = material.masses.iter().sum::<f64>() / n.max(1) as f64;
    let g_scale = if scene.gravity.norm() > 0.0 { scene.gravity.norm() } else { 9.81 };
    let tolerance = settings.tolerance_scale * mean_mass * g_scale;

    // Start from the inertial prediction y; fall back to the current
    // positions if y is already invalid (e.g. inverted under actuation).
    let start = if energy(&y).is_some() {
        y.clone()
    } else {
        let x0 = flat_free(&state.positions, &free);
        if energy(&x0).is_none() {
            return Err(SoftError::NonFinite { step: 0 });
        }
        x0
    };
    let (z, stats) = minimize_incremental(start, tolerance, settings, energy, grad);
    if z.iter().any(|v| !v.is_finite()) {
        return Err(SoftError::NonFinite { step: 0 });
    }

    let positions = assemble(&z);
    let mut velocities = vec![Vec3::zeros(); n];
    for &i in &free {
        velocities[i] = (positions[i] - state.positions[i]) / dt;
    }
    let mut next = SoftState {
        positions,
        velocities,
        rotations,
        def_grads: state.def_grads.clone(),
        time: state.time + dt,
    };
    next.refresh_frames(cloud, material);
    Ok((next, stats))
}

fn flat_free(positions: &[Pt3], free: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(free.len() * 3);
    for &i in free {
        out.extend_from_slice(&[positions[i].x, positions[i].y, positions[i].z]);
    }
    out
}

/// Positions of tracked particles over time, plus the applied pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftTrajectory {
    pub times: Vec<f64>,
    pub tracked: Vec<usize>,
    /// One row per recorded time, one entry per tracked particle.
    pub positions: Vec<Vec<Pt3>>,
    pub pressures: Vec<f64>,
    /// Final full state of the episode.
    pub final_state: SoftState,
    /// Implicit-solver statistics per step (empty for Leapfrog).
    pub implicit_stats: Vec<ImplicitStats>,
}

impl SoftTrajectory {
    /// CSV rows `t,particle,x,y,z` for the tracked particles.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,particle,x,y,z\n");
        for (row, t) in self.times.iter().enumerate() {
            for (col, &p) in self.tracked.iter().enumerate() {
                let pos = self.positions[row][col];
                out.push_str(&format!("{t},{p},{},{},{}\n", pos.x, pos.y, pos.z));
            }
        }
        out
    }
}

/// Steps the scene `steps` times, recording tracked particle positions at
/// the initial state and after every step.
pub fn simulate_soft(
    cloud: &ParticleCloud,
    material: &SoftMaterial,
    scene: &SoftScene,
    initial: &SoftState,
    dt: f64,
    steps: usize,
    integrator: Integrator,
    tracked: &[usize],
) -> Result<SoftTrajectory, SoftError> {
    assert!(steps >= 1);
    scene.validate(cloud.len())?;
    let settings = ImplicitSettings::default();
    let record = |state: &SoftState| -> Vec<Pt3> {
        tracked.iter().map(|&i| state.positions[i]).collect()
    };
    let mut traj = SoftTrajectory {
        times: vec![initial.time],
        tracked: tracked.to_vec(),
        positions: vec![record(initial)],
        pressures: vec![0.0],
        final_state: initial.clone(),
        implicit_stats: Vec::new(),
    };
    let mut state = initial.clone();
    for step in 0..steps {
        let pressure = scene.pressure.at(step, steps);
        state = match integrator {
            Integrator::Leapfrog => step_leapfrog(cloud, material, scene, &state, dt, pressure)
                .map_err(|e| at_step(e, step))?,
            Integrator::Implicit => {
                let (next, stats) =
                    step_implicit(cloud, material, scene, &state, dt, pressure, &settings)
                        .map_err(|e| at_step(e, step))?;
                traj.implicit_stats.push(stats);
                next
            }
        };
        traj.times.push(state.time);
        traj.positions.push(record(&state));
        traj.pressures.push(pressure);
    }
    traj.final_state = state;
    Ok(traj)
}

fn at_step(e: SoftError, step: usize) -> SoftError {
    match e {
        SoftError::NonFinite { .. } => SoftError::NonFinite { step },
        other => other,
    }
}
