//! Gradient-based outer loop over topology parameters: Adam and
//! box-constrained limited-memory BFGS, plus the problem description and
//! the continuation-driven run loop.

mod lbfgsb;
mod problem;
mod run;

pub use lbfgsb::{lbfgsb, LbfgsbSettings};
pub use problem::{
    Budget, OptProblem, ParameterInit, RigidDynamicScene, Scenario, SoftObjective, StaticObjective,
};
pub use run::{run, ContinuationSchedule};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptError {
    #[error("loss evaluation failed: {0}")]
    Eval(String),
    #[error("non-finite loss persisted after {retries} learning-rate halvings")]
    NonFinite { retries: usize },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

/// Loss/gradient provider. Implementations return `Err` with a message when
/// the forward model cannot be evaluated at the iterate.
pub type EvalResult = Result<(f64, Vec<f64>), String>;

/// Box constraints, one interval per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Bounds {
        Bounds { lower: vec![lo; n], upper: vec![hi; n] }
    }

    pub fn validate(&self, n: usize) -> Result<(), OptError> {
        if self.lower.len() != n || self.upper.len() != n {
            return Err(OptError::Invalid("bounds length mismatch".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l > u) {
            return Err(OptError::Invalid("lower bound above upper bound".into()));
        }
        Ok(())
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamSettings {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamSettings {
    fn default() -> Self {
        AdamSettings { learning_rate: 1e-2, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamSettings {
    /// Learning rate used for neural surfaces at full scale.
    pub fn neural_default() -> AdamSettings {
        AdamSettings { learning_rate: 3e-6, ..AdamSettings::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Converged,
    Budget,
    LineSearchStall,
    NonFinite,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::Budget => "budget",
            Termination::LineSearchStall => "line search stall",
            Termination::NonFinite => "non-finite loss",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub step_norm: f64,
    pub beta: f64,
    pub wall_time_s: f64,
}

/// Record of one optimization run. The best-so-far sequence is monotone by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct OptTrace {
    pub iterations: Vec<IterRecord>,
    pub best_params: Vec<f64>,
    pub best_loss: f64,
    pub termination: Termination,
    pub evaluations: usize,
}

impl OptTrace {
    fn new(x0: &[f64]) -> OptTrace {
        OptTrace {
            iterations: Vec::new(),
            best_params: x0.to_vec(),
            best_loss: f64::INFINITY,
            termination: Termination::Budget,
            evaluations: 0,
        }
    }

    fn record(
        &mut self,
        iteration: usize,
        loss: f64,
        grad_norm: f64,
        step_norm: f64,
        beta: f64,
        started: std::time::Instant,
        x: &[f64],
    ) {
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_params = x.to_vec();
        }
        self.iterations.push(IterRecord {
            iteration,
            loss,
            grad_norm,
            step_norm,
            beta,
            wall_time_s: started.elapsed().as_secs_f64(),
        });
    }

    /// Deterministic CSV (no timing column; wall time goes to the event
    /// log so outputs hash identically across runs).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,loss,grad_norm,step_norm,beta\n");
        for r in &self.iterations {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iteration, r.loss, r.grad_norm, r.step_norm, r.beta
            ));
        }
        out
    }

    /// JSON-lines event log including wall-clock timings.
    pub fn to_events(&self) -> String {
        let mut out = String::new();
        for r in &self.iterations {
            out.push_str(&format!(
                "{{\"iteration\":{},\"loss\":{},\"grad_norm\":{},\"step_norm\":{},\"beta\":{},\"wall_time_s\":{}}}\n",
                r.iteration, r.loss, r.grad_norm, r.step_norm, r.beta, r.wall_time_s
            ));
        }
        out.push_str(&format!(
            "{{\"termination\":\"{}\",\"best_loss\":{},\"evaluations\":{}}}\n",
            self.termination.as_str(),
            self.best_loss,
            self.evaluations
        ));
        out
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Adam with bias correction; parameters are clamped to the bounds after
/// every step. A non-finite or failed evaluation halves the learning rate
/// and retries the step from the previous iterate, up to five times.
pub fn adam<F>(
    mut eval: F,
    x0: Vec<f64>,
    bounds: Option<&Bounds>,
    settings: &AdamSettings,
    max_iters: usize,
    beta_tag: f64,
) -> Result<OptTrace, OptError>
where
    F: FnMut(&[f64]) -> EvalResult,
{
    let started = std::time::Instant::now();
    let n = x0.len();
    if let Some(b) = bounds {
        b.validate(n)?;
    }
    let mut x = x0;
    if let Some(b) = bounds {
        b.clamp(&mut x);
    }
    let mut trace = OptTrace::new(&x);
    if max_iters == 0 {
        trace.termination = Termination::Budget;
        return Ok(trace);
    }

    let finite = |l: f64, g: &[f64]| l.is_finite() && g.iter().all(|v| v.is_finite());
    let (mut loss, mut grad) = match eval(&x) {
        Ok((l, g)) if finite(l, &g) => (l, g),
        Ok(_) | Err(_) => {
            trace.termination = Termination::NonFinite;
            trace.evaluations = 1;
            return Ok(trace);
        }
    };
    trace.evaluations = 1;
    trace.record(0, loss, inf_norm(&grad), 0.0, beta_tag, started, &x);

    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    for it in 1..=max_iters {
        let t = it as f64;
        for i in 0..n {
            m[i] = settings.beta1 * m[i] + (1.0 - settings.beta1) * grad[i];
            v[i] = settings.beta2 * v[i] + (1.0 - settings.beta2) * grad[i] * grad[i];
        }
        let bc1 = 1.0 - settings.beta1.powf(t);
        let bc2 = 1.0 - settings.beta2.powf(t);

        let mut lr = settings.learning_rate;
        let mut accepted = false;
        for _retry in 0..=5 {
            let mut x_try = x.clone();
            for i in 0..n {
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                x_try[i] -= lr * m_hat / (v_hat.sqrt() + settings.eps);
            }
            if let Some(b) = bounds {
                b.clamp(&mut x_try);
            }
            trace.evaluations += 1;
            match eval(&x_try) {
                Ok((l, g)) if finite(l, &g) => {
                    let step_norm =
                        x_try.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    x = x_try;
                    loss = l;
                    grad = g;
                    trace.record(it, loss, inf_norm(&grad), step_norm, beta_tag, started, &x);
                    accepted = true;
                    break;
                }
                _ => lr *= 0.5,
            }
        }
        if !accepted {
            trace.termination = Termination::NonFinite;
            return Ok(trace);
        }
    }
    trace.termination = Termination::Budget;
    Ok(trace)
}
