//! Energies and their exact position gradients: hyperelastic stress,
//! pneumatic actuation, and the ground penalty.
//!
//! Rotations are lagged: each force evaluation treats the extracted `R_i`
//! as constants, which is what the corotated formulation differentiates.

use super::field::deformation_gradients;
use super::kernel::kernel_grad;
use super::material::SoftMaterial;
use super::{SoftError, StrainKind};
use crate::geometry::ParticleCloud;
use crate::math::{Mat3, Pt3, Vec3};
use rayon::prelude::*;

/// Ground half-space: signed distance is positive on the `normal` side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundPlane {
    pub point: Pt3,
    pub normal: Vec3,
}

/// Energy bookkeeping for one configuration.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub elastic: f64,
    pub actuation: f64,
    pub penalty: f64,
    /// Elastic energy density per particle (J/m³).
    pub energy_density: Vec<f64>,
    /// First Piola stress per particle (Pa).
    pub piola_stress: Vec<Mat3>,
}

pub struct ElasticOutput {
    pub energy: f64,
    pub forces: Vec<Vec3>,
    pub energy_density: Vec<f64>,
    pub piola: Vec<Mat3>,
    pub def_grads: Vec<Mat3>,
    /// `dE/dmu_i` and `dE/dlambda_i`, for chaining into the indicator.
    pub denergy_dmu: Vec<f64>,
    pub denergy_dlambda: Vec<f64>,
}

fn strain_of(f: &Mat3, kind: StrainKind) -> Mat3 {
    match kind {
        StrainKind::Green => 0.5 * (f.transpose() * f - Mat3::identity()),
        StrainKind::Cauchy => 0.5 * (f + f.transpose()) - Mat3::identity(),
    }
}

/// dPsi/dF for `Psi = mu eps:eps + lambda/2 tr(eps)^2`.
fn piola_of(f: &Mat3, eps: &Mat3, mu: f64, lambda: f64, kind: StrainKind) -> Mat3 {
    let s = 2.0 * mu * eps + lambda * eps.trace() * Mat3::identity();
    match kind {
        StrainKind::Green => f * s,
        StrainKind::Cauchy => s,
    }
}

/// Saint Venant-Kirchhoff energy and its exact negative position gradient
/// (with the rotations held fixed).
pub fn elastic_energy_forces(
    cloud: &ParticleCloud,
    material: &SoftMaterial,
    positions: &[Pt3],
    rotations: &[Mat3],
    strain: StrainKind,
) -> ElasticOutput {
    let n = cloud.len();
    let h = cloud.kernel_radius;
    let stencil: Vec<f64> = (0..n).map(|j| material.stencil_weight(cloud, j)).collect();
    let def_grads = deformation_gradients(cloud, positions, rotations, &stencil);

    let mut energy_density = vec![0.0; n];
    let mut piola = vec![Mat3::zeros(); n];
    let mut denergy_dmu = vec![0.0; n];
    let mut denergy_dlambda = vec![0.0; n];
    let mut energy = 0.0;
    for i in 0..n {
        let eps = strain_of(&def_grads[i], strain);
        let eps_sq = eps.component_mul(&eps).sum();
        let tr = eps.trace();
        let psi = material.mu[i] * eps_sq + 0.5 * material.lambda[i] * tr * tr;
        let measure = material.measure(i);
        energy_density[i] = psi;
        piola[i] = piola_of(&def_grads[i], &eps, material.mu[i], material.lambda[i], strain);
        denergy_dmu[i] = measure * eps_sq;
        denergy_dlambda[i] = measure * 0.5 * tr * tr;
        energy += measure * psi;
    }

    // f_k = sum_j (q_j D_k + q_k D_j) gradW(X_k - X_j),
    // D_i = measure_i R_i P_i^T. Antisymmetric under k<->j, so internal
    // forces sum to zero exactly.
    let weighted: Vec<Mat3> = (0..n)
        .map(|i| material.measure(i) * rotations[i] * piola[i].transpose())
        .collect();
    let forces: Vec<Vec3> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut f = Vec3::zeros();
            for &j in &cloud.neighbor_lists[k] {
                let g = kernel_grad(&(cloud.rest_positions[k] - cloud.rest_positions[j]), h);
                f += (stencil[j] * weighted[k] + stencil[k] * weighted[j]) * g;
            }
            f
        })
        .collect();

    ElasticOutput {
        energy,
        forces,
        energy_density,
        piola,
        def_grads,
        denergy_dmu,
        denergy_dlambda,
    }
}

#[derive(Debug)]
pub struct ActuationOutput {
    pub energy: f64,
    pub forces: Vec<Vec3>,
    /// `dE_a/dw_i = p det(F_i) V_i`.
    pub denergy_dweight: Vec<f64>,
}

/// Pneumatic volume energy `E_a = sum_i p w_i det(F_i) V_i` and its exact
/// negative position gradient. Inverted elements under an active chamber
/// weight are an error.
pub fn actuation_energy_forces(
    cloud: &ParticleCloud,
    material: &SoftMaterial,
    positions: &[Pt3],
    rotations: &[Mat3],
    pressure: f64,
) -> Result<ActuationOutput, SoftError> {
    let n = cloud.len();
    let h = cloud.kernel_radius;
    if pressure == 0.0 || material.chamber_weights.iter().all(|&w| w == 0.0) {
        return Ok(ActuationOutput {
            energy: 0.0,
            forces: vec![Vec3::zeros(); n],
            denergy_dweight: vec![0.0; n],
        });
    }
    let stencil: Vec<f64> = (0..n).map(|j| material.stencil_weight(cloud, j)).collect();
    let def_grads = deformation_gradients(cloud, positions, rotations, &stencil);

    let mut energy = 0.0;
    let mut denergy_dweight = vec![0.0; n];
    let mut weighted = vec![Mat3::zeros(); n];
    for i in 0..n {
        let det = def_grads[i].determinant();
        let w = material.chamber_weights[i];
        if w > 1e-12 && det <= 0.0 {
            return Err(SoftError::InvertedElement { particle: i });
        }
        denergy_dweight[i] = pressure * det * cloud.volumes[i];
        energy += w * denergy_dweight[i];
        if w != 0.0 && det > 0.0 {
            // dE_a/dF_i = p w_i V_i det(F_i) F_i^{-T}
            let b = pressure * w * cloud.volumes[i] * det
                * def_grads[i].try_inverse().ok_or(SoftError::InvertedElement { particle: i })?.transpose();
            weighted[i] = rotations[i] * b.transpose();
        }
    }

    let forces: Vec<Vec3> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut f = Vec3::zeros();
            for &j in &cloud.neighbor_lists[k] {
                let g = kernel_grad(&(cloud.rest_positions[k] - cloud.rest_positions[j]), h);
                f += (stencil[j] * weighted[k] + stencil[k] * weighted[j]) * g;
            }
            f
        })
        .collect();

    Ok(ActuationOutput { energy, forces, denergy_dweight })
}

pub struct PenaltyOutput {
    pub energy: f64,
    pub forces: Vec<Vec3>,
    pub per_particle: Vec<f64>,
}

/// Quadratic hinge penalty against a ground plane, integrated per particle
/// with measure `m_i / rho_i`: active where the signed distance drops below
/// the clearance.
pub fn penalty_energy_forces(
    positions: &[Pt3],
    measures: &[f64],
    ground: &GroundPlane,
    stiffness: f64,
    clearance: f64,
) -> PenaltyOutput {
    let normal = ground.normal;
    let n = positions.len();
    let mut energy = 0.0;
    let mut per_particle = vec![0.0; n];
    let mut forces = vec![Vec3::zeros(); n];
    for i in 0..n {
        let d = (positions[i] - ground.point).dot(&normal);
        let pen = (clearance - d).max(0.0);
        if pen > 0.0 {
            let e = measures[i] * 0.5 * stiffness * pen * pen;
            per_particle[i] = e;
            energy += e;
            forces[i] = measures[i] * stiffness * pen * normal;
        }
    }
    PenaltyOutput { energy, forces, per_particle }
}

/// One scene's internal-energy terms, bundled for the integrators and the
/// reverse sweep. `pressure` is the current actuation pressure.
pub struct ForceModel<'a> {
    pub cloud: &'a ParticleCloud,
    pub material: &'a SoftMaterial,
    pub strain: StrainKind,
    pub ground: Option<GroundPlane>,
    pub penalty_stiffness: f64,
    pub clearance: f64,
    pub gravity: Vec3,
    pub pressure: f64,
}

impl ForceModel<'_> {
    fn measures(&self) -> Vec<f64> {
        (0..self.cloud.len()).map(|i| self.material.measure(i)).collect()
    }

    /// Elastic + actuation + penalty energy at fixed rotations.
    pub fn internal_energy(&self, positions: &[Pt3], rotations: &[Mat3]) -> Result<f64, SoftError> {
        let elastic = elastic_energy_forces(self.cloud, self.material, positions, rotations, self.strain);
        let act = actuation_energy_forces(self.cloud, self.material, positions, rotations, self.pressure)?;
        let pen = match &self.ground {
            Some(g) => {
                penalty_energy_forces(positions, &self.measures(), g, self.penalty_stiffness, self.clearance).energy
            }
            None => 0.0,
        };
        Ok(elastic.energy + act.energy + pen)
    }

    /// Negative gradient of the internal energy (no gravity).
    pub fn internal_forces(&self, positions: &[Pt3], rotations: &[Mat3]) -> Result<Vec<Vec3>, SoftError> {
        let elastic = elastic_energy_forces(self.cloud, self.material, positions, rotations, self.strain);
        let act = actuation_energy_forces(self.cloud, self.material, positions, rotations, self.pressure)?;
        let mut forces = elastic.forces;
        for (f, a) in forces.iter_mut().zip(&act.forces) {
            *f += a;
        }
        if let Some(g) = &self.ground {
            let pen = penalty_energy_forces(positions, &self.measures(), g, self.penalty_stiffness, self.clearance);
            for (f, p) in forces.iter_mut().zip(&pen.forces) {
                *f += p;
            }
        }
        Ok(forces)
    }

    /// Internal forces plus gravity `m_i g`.
    pub fn total_forces(&self, positions: &[Pt3], rotations: &[Mat3]) -> Result<Vec<Vec3>, SoftError> {
        let mut forces = self.internal_forces(positions, rotations)?;
        for (f, m) in forces.iter_mut().zip(&self.material.masses) {
            *f += *m * self.gravity;
        }
        Ok(forces)
    }

    /// `(∇_x E, ∇_r E)` in one assembly: the position gradient of the
    /// internal energy and, through the affine material maps, its gradient
    /// with respect to the per-particle indicator.
    pub fn energy_grads(
        &self,
        positions: &[Pt3],
        rotations: &[Mat3],
    ) -> Result<(Vec<Vec3>, Vec<f64>), SoftError> {
        let (gx, gr, _) = self.energy_grads_full(positions, rotations)?;
        Ok((gx, gr))
    }

    /// Like [`ForceModel::energy_grads`] but also returns `dE/dR_i`: the
    /// sensitivity of the internal energy to each particle's frozen
    /// rotation, needed by the reverse sweep to chain through the rotation
    /// extraction. With `W_i = measure_i P_i + B_i` (elastic plus actuation
    /// work conjugates of `F_i`), `dE/dR_i = sum_j q_j d_ji g_ijᵀ W_i`.
    pub fn energy_grads_full(
        &self,
        positions: &[Pt3],
        rotations: &[Mat3],
    ) -> Result<(Vec<Vec3>, Vec<f64>, Vec<Mat3>), SoftError> {
        let elastic = elastic_energy_forces(self.cloud, self.material, positions, rotations, self.strain);
        let act = actuation_energy_forces(self.cloud, self.material, positions, rotations, self.pressure)?;
        let mut grad_x: Vec<Vec3> = elastic.forces.iter().zip(&act.forces).map(|(e, a)| -(e + a)).collect();
        if let Some(g) = &self.ground {
            let pen = penalty_energy_forces(positions, &self.measures(), g, self.penalty_stiffness, self.clearance);
            for (gx, p) in grad_x.iter_mut().zip(&pen.forces) {
                *gx -= p;
            }
        }
        let (dmu, dlambda) = self.material.model.dlame_dr();
        let dweight = self.material.model.dweight_dr();
        let grad_r: Vec<f64> = (0..self.cloud.len())
            .map(|i| {
                elastic.denergy_dmu[i] * dmu
                    + elastic.denergy_dlambda[i] * dlambda
                    + act.denergy_dweight[i] * dweight
            })
            .collect();

        let n = self.cloud.len();
        let h = self.cloud.kernel_radius;
        let stencil: Vec<f64> = (0..n).map(|j| self.material.stencil_weight(self.cloud, j)).collect();
        let with_actuation = self.pressure != 0.0
            && self.material.chamber_weights.iter().any(|&w| w > 1e-12);
        use rayon::prelude::*;
        let grad_rot: Vec<Mat3> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut w_i = self.material.measure(i) * elastic.piola[i];
                if with_actuation && self.material.chamber_weights[i] != 0.0 {
                    let det = elastic.def_grads[i].determinant();
                    if det > 0.0 {
                        if let Some(f_inv) = elastic.def_grads[i].try_inverse() {
                            w_i += self.pressure
                                * self.material.chamber_weights[i]
                                * self.cloud.volumes[i]
                                * det
                                * f_inv.transpose();
                        }
                    }
                }
                let mut out = Mat3::zeros();
                for &j in &self.cloud.neighbor_lists[i] {
                    let rest = self.cloud.rest_positions[j] - self.cloud.rest_positions[i];
                    let g = kernel_grad(&(-rest), h);
                    let d = positions[j] - positions[i];
                    out += stencil[j] * d * (g.transpose() * w_i);
                }
                out
            })
            .collect();
        Ok((grad_x, grad_r, grad_rot))
    }

    /// Full report for diagnostics and exports.
    pub fn energy_report(&self, positions: &[Pt3], rotations: &[Mat3]) -> Result<EnergyReport, SoftError> {
        let elastic = elastic_energy_forces(self.cloud, self.material, positions, rotations, self.strain);
        let act = actuation_energy_forces(self.cloud, self.material, positions, rotations, self.pressure)?;
        let pen = match &self.ground {
            Some(g) => {
                penalty_energy_forces(positions, &self.measures(), g, self.penalty_stiffness, self.clearance).energy
            }
            None => 0.0,
        };
        Ok(EnergyReport {
            elastic: elastic.energy,
            actuation: act.energy,
            penalty: pen,
            energy_density: elastic.energy_density,
            piola_stress: elastic.piola,
        })
    }
}
