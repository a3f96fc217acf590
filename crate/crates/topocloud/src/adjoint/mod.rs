//! End-to-end gradients of scalar losses with respect to topology
//! parameters: an exact analytic chain for static objectives and a discrete
//! adjoint (reverse sweep with transposed per-step Jacobian products) for
//! dynamic ones, plus a finite-difference verification harness.

mod rigid;
mod soft;
mod static_grad;

pub use soft::AdjointSettings;

use crate::objectives::ObjectiveError;
use crate::optimizer::{Scenario, StaticObjective};
use crate::rigidsim::RigidError;
use crate::softsim::SoftError;
use crate::topology::{TopologyError, TopologyField};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Rigid(#[from] RigidError),
    #[error(transparent)]
    Soft(#[from] SoftError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("determinism violation: replay diverged from the recorded state at step {step}")]
    Determinism { step: usize },
    #[error("non-finite cotangent at step {step}")]
    NonFiniteCotangent { step: usize },
}

/// Forward pass only: the scalar loss of the scenario under the given
/// topology. This is the function the finite-difference oracle probes; it
/// never touches the adjoint path.
pub fn evaluate_loss(scenario: &Scenario, topo: &TopologyField) -> Result<f64, EvalError> {
    match scenario {
        Scenario::RigidStatic { cloud, density, objective } => {
            let indicator = topo.eval(cloud)?;
            match objective {
                StaticObjective::ComTarget { target } => {
                    let props = crate::rigidsim::rigid_props(cloud, &indicator.values, *density)?;
                    Ok(crate::objectives::loss_com(&props, target).value)
                }
                StaticObjective::PoseSequence { spec } => {
                    Ok(crate::objectives::loss_pose_sequence(cloud, &indicator.values, spec)?.value)
                }
            }
        }
        Scenario::RigidDynamic { .. } => rigid::loss(scenario, topo),
        Scenario::Soft { .. } => soft::loss(scenario, topo, &AdjointSettings::default()),
    }
}

/// Loss and its gradient with respect to the topology parameters.
pub fn evaluate(scenario: &Scenario, topo: &TopologyField) -> Result<(f64, Vec<f64>), EvalError> {
    evaluate_with(scenario, topo, &AdjointSettings::default())
}

pub fn evaluate_with(
    scenario: &Scenario,
    topo: &TopologyField,
    settings: &AdjointSettings,
) -> Result<(f64, Vec<f64>), EvalError> {
    match scenario {
        Scenario::RigidStatic { .. } => static_grad::evaluate(scenario, topo),
        Scenario::RigidDynamic { .. } => rigid::evaluate(scenario, topo),
        Scenario::Soft { .. } => soft::evaluate(scenario, topo, settings),
    }
}

/// One row of the finite-difference comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct GradEntry {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
    pub step: f64,
}

/// Result of [`gradcheck`]: the analytic gradient, the sampled comparison
/// table, and the pass verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub gradient: Vec<f64>,
    pub entries: Vec<GradEntry>,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl GradReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,analytic,numeric,rel_err,step\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.index, e.analytic, e.numeric, e.rel_err, e.step
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "gradcheck {}: {} parameters checked, max rel err {:.3e} (tolerance {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.entries.len(),
            self.max_rel_err,
            self.tolerance
        )
    }
}

/// Relative error with the documented floor.
pub fn grad_rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

/// Generic checker: central differences of `loss_fn` at each step size per
/// sampled parameter, keeping the best-agreeing step.
pub fn gradcheck_fn<F>(
    mut loss_fn: F,
    params: &[f64],
    analytic: &[f64],
    step_sizes: &[f64],
    max_params: usize,
    tolerance: f64,
) -> GradReport
where
    F: FnMut(&[f64]) -> f64,
{
    let n = params.len();
    let sampled: Vec<usize> = if n <= max_params {
        (0..n).collect()
    } else {
        // Deterministic evenly spaced subset.
        (0..max_params).map(|k| k * n / max_params).collect()
    };
    let mut work = params.to_vec();
    let mut entries = Vec::with_capacity(sampled.len());
    let mut max_rel_err = 0.0f64;
    for &i in &sampled {
        let mut best: Option<GradEntry> = None;
        for &h in step_sizes {
            let saved = work[i];
            work[i] = saved + h;
            let fp = loss_fn(&work);
            work[i] = saved - h;
            let fm = loss_fn(&work);
            work[i] = saved;
            let numeric = (fp - fm) / (2.0 * h);
            let rel_err = grad_rel_err(analytic[i], numeric);
            if best.as_ref().map_or(true, |b| rel_err < b.rel_err) {
                best = Some(GradEntry { index: i, analytic: analytic[i], numeric, rel_err, step: h });
            }
        }
        let entry = best.expect("at least one step size");
        max_rel_err = max_rel_err.max(entry.rel_err);
        entries.push(entry);
    }
    GradReport {
        gradient: analytic.to_vec(),
        entries,
        max_rel_err,
        tolerance,
        pass: max_rel_err <= tolerance,
    }
}

/// Problem-level harness: compares the adjoint gradient of the scenario
/// against central finite differences of the forward loss.
pub fn gradcheck(
    scenario: &Scenario,
    topo: &TopologyField,
    step_sizes: &[f64],
    max_params: usize,
    tolerance: f64,
) -> Result<GradReport, EvalError> {
    let (_, analytic) = evaluate(scenario, topo)?;
    let params = topo.params();
    let mut probe = topo.clone();
    let report = gradcheck_fn(
        |p: &[f64]| {
            probe.set_params(p);
            evaluate_loss(scenario, &probe).unwrap_or(f64::NAN)
        },
        &params,
        &analytic,
        step_sizes,
        max_params,
        tolerance,
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradcheck_fn_is_exact_on_quadratics() {
        // f(theta) = |theta|^2: central differences are exact to roundoff.
        let params = vec![0.3, -0.7, 1.2, 0.0];
        let analytic: Vec<f64> = params.iter().map(|p| 2.0 * p).collect();
        let report = gradcheck_fn(
            |p: &[f64]| p.iter().map(|v| v * v).sum(),
            &params,
            &analytic,
            &[1e-4, 1e-5],
            100,
            1e-10,
        );
        assert!(report.pass, "max rel err {}", report.max_rel_err);
        assert!(report.max_rel_err <= 1e-10);
    }

    #[test]
    fn gradcheck_fn_detects_corruption() {
        let params = vec![0.5, -0.8];
        // Deliberately corrupted gradient (x 1.01).
        let corrupted: Vec<f64> = params.iter().map(|p| 2.0 * p * 1.01).collect();
        let report = gradcheck_fn(
            |p: &[f64]| p.iter().map(|v| v * v).sum(),
            &params,
            &corrupted,
            &[1e-5],
            100,
            1e-6,
        );
        assert!(!report.pass);
        assert!(report.max_rel_err > 5e-3);
    }

    #[test]
    fn gradcheck_samples_large_parameter_vectors() {
        let n = 2000;
        let params = vec![0.1; n];
        let analytic = vec![0.2; n];
        let report = gradcheck_fn(
            |p: &[f64]| p.iter().map(|v| v * v).sum(),
            &params,
            &analytic,
            &[1e-5],
            500,
            1e-8,
        );
        assert_eq!(report.entries.len(), 500);
        assert!(report.pass);
    }

    #[test]
    fn report_csv_shape() {
        let report = gradcheck_fn(
            |p: &[f64]| p[0] * p[0],
            &[1.0],
            &[2.0],
            &[1e-5],
            10,
            1e-8,
        );
        let csv = report.to_csv();
        assert!(csv.starts_with("param,analytic,numeric,rel_err,step\n"));
        assert_eq!(csv.lines().count(), 2);
        assert!(report.summary().contains("PASS"));
    }
}
