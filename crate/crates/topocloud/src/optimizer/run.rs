//! End-to-end optimization driver: evaluates losses and gradients through
//! the adjoint, restarts the chosen optimizer across sharpness-continuation
//! phases, and tracks the best iterate.

use super::problem::{Algorithm, OptProblem};
use super::{adam, lbfgsb, OptError, OptTrace, Termination};
use crate::adjoint;
use crate::topology::TopologyField;

/// Sharpness continuation: multiply the sigmoid sharpness by `factor` every
/// `every` iterations of the outer loop, capped at `beta_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationSchedule {
    pub enabled: bool,
    pub factor: f64,
    pub every: usize,
    pub beta_max: f64,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        ContinuationSchedule { enabled: false, factor: 2.0, every: 50, beta_max: 1e3 }
    }
}

/// Runs the problem to its budget, applying beta continuation between
/// optimizer restarts. Returns the merged trace and the topology holding
/// the best parameters found.
pub fn run(problem: &OptProblem) -> Result<(OptTrace, TopologyField), OptError> {
    problem.validate()?;
    let mut topo = problem.topology.clone();
    let mut merged = OptTrace {
        iterations: Vec::new(),
        best_params: topo.params(),
        best_loss: f64::INFINITY,
        termination: Termination::Budget,
        evaluations: 0,
    };
    let mut remaining = problem.budget.max_iterations;
    let mut phase_start = 0usize;
    loop {
        let phase_iters = if problem.continuation.enabled {
            remaining.min(problem.continuation.every)
        } else {
            remaining
        };
        let beta = topo.beta();
        let scenario = &problem.scenario;
        let probe = std::cell::RefCell::new(topo.clone());
        let eval = |params: &[f64]| -> super::EvalResult {
            let mut t = probe.borrow_mut();
            t.set_params(params);
            adjoint::evaluate(scenario, &t).map_err(|e| e.to_string())
        };
        let x0 = topo.params();
        let trace = match &problem.algorithm {
            Algorithm::Adam(settings) => {
                adam(eval, x0, problem.bounds.as_ref(), settings, phase_iters, beta)?
            }
            Algorithm::Lbfgsb(settings) => {
                lbfgsb(eval, x0, problem.bounds.as_ref(), settings, phase_iters, beta)?
            }
        };

        // Merge the phase into the global trace with shifted indices.
        merged.evaluations += trace.evaluations;
        for mut record in trace.iterations {
            record.iteration += phase_start;
            merged.iterations.push(record);
        }
        if trace.best_loss < merged.best_loss {
            merged.best_loss = trace.best_loss;
            merged.best_params = trace.best_params.clone();
        }
        merged.termination = trace.termination;
        topo.set_params(&trace.best_params);

        let used = phase_iters;
        remaining = remaining.saturating_sub(used);
        phase_start += used;
        let continue_phases = problem.continuation.enabled
            && remaining > 0
            && topo.beta() * problem.continuation.factor <= problem.continuation.beta_max
            && trace.termination == Termination::Budget;
        if !continue_phases {
            break;
        }
        topo.set_beta(topo.beta() * problem.continuation.factor);
    }
    topo.set_params(&merged.best_params);
    Ok((merged, topo))
}
