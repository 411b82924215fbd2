use std::fmt;
use std::time::Duration;

use nalgebra::DVector;

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Converged,
    MaxIters,
    Stagnation,
    CallbackFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIters => "max_iters",
            Self::Stagnation => "stagnation",
            Self::CallbackFailure => "callback_failure",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evaluation counters shared by every solver in the crate.
///
/// `n_f` counts full function evaluations (for shooting problems: one
/// rollout plus cost), `n_grad` gradient evaluations and `n_jac` full
/// linearizations / Jacobian-transpose products.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub n_f: usize,
    pub n_grad: usize,
    pub n_jac: usize,
}

impl std::ops::AddAssign for Counters {
    fn add_assign(&mut self, rhs: Self) {
        self.n_f += rhs.n_f;
        self.n_grad += rhs.n_grad;
        self.n_jac += rhs.n_jac;
    }
}

/// Traces and counters of one solve.
///
/// The traces are aligned: entry `k` of each describes iterate `k`.
/// `x_trace` is left empty when iterate tracing is switched off.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x_trace: Vec<DVector<f64>>,
    pub f_trace: Vec<f64>,
    /// Per iterate, one residual `||g_i(x) - P_i(g_i(x))||_inf` per constraint block.
    pub constraint_residual_trace: Vec<Vec<f64>>,
    pub counters: Counters,
    pub iterations: usize,
    pub wall_time: Duration,
    pub termination: Termination,
    /// Free-form diagnostic attached on abnormal termination.
    pub message: Option<String>,
}

impl SolveReport {
    pub(crate) fn new() -> Self {
        Self {
            x_trace: Vec::new(),
            f_trace: Vec::new(),
            constraint_residual_trace: Vec::new(),
            counters: Counters::default(),
            iterations: 0,
            wall_time: Duration::ZERO,
            termination: Termination::MaxIters,
            message: None,
        }
    }

    pub(crate) fn record(&mut self, x: &DVector<f64>, f: f64, residuals: Vec<f64>) {
        self.x_trace.push(x.clone());
        self.f_trace.push(f);
        self.constraint_residual_trace.push(residuals);
    }

    /// Like `record`, but only stores `x` when `keep_x` holds.
    pub(crate) fn record_traced(&mut self, keep_x: bool, x: &DVector<f64>, f: f64, residuals: Vec<f64>) {
        if keep_x {
            self.x_trace.push(x.clone());
        }
        self.f_trace.push(f);
        self.constraint_residual_trace.push(residuals);
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// Largest constraint residual at the final iterate (0 without constraints).
    pub fn final_residual(&self) -> f64 {
        self.constraint_residual_trace
            .last()
            .map_or(0.0, |r| r.iter().copied().fold(0.0, f64::max))
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.f_trace.last().copied()
    }
}
