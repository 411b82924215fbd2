//! Spectral projected gradient descent with a nonmonotone line search.
//!
//! Each iteration projects a scaled gradient step onto the feasible set,
//! `d = P(x - gamma * grad f(x)) - x`, searches along `d` with an Armijo test
//! against the largest of the last `M` objective values, and refreshes the
//! scalar stepsize `gamma` from the secant pair `(s, y)`.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DVector;

use crate::projection::{ProjectionError, ProjectionSet};
use crate::report::{Counters, SolveReport, Termination};

/// Smallest line-search step before the search is declared stagnant.
pub const ALPHA_FLOOR: f64 = 1e-12;

/// Smooth objective with gradient.
///
/// Methods take `&mut self` so implementations can cache work shared by a
/// value and a gradient at the same point.
pub trait Objective {
    fn value(&mut self, x: &DVector<f64>) -> f64;
    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64>;
}

impl<F, G> Objective for (F, G)
where
    F: FnMut(&DVector<f64>) -> f64,
    G: FnMut(&DVector<f64>) -> DVector<f64>,
{
    fn value(&mut self, x: &DVector<f64>) -> f64 {
        (self.0)(x)
    }

    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64> {
        (self.1)(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpgOptions {
    /// Stop when `||P(x - grad f(x)) - x||_inf <= epsilon`.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Length `M` of the objective history used by the line search.
    pub memory: usize,
    /// Sufficient-decrease parameter.
    pub beta: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Probe length for the initial stepsize; `None` picks a scale-aware value.
    pub gamma_small: Option<f64>,
    /// Keep every iterate in the report's `x_trace`; turn off for large
    /// problems (objective values are always traced).
    pub trace_iterates: bool,
}

impl Default for SpgOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_iters: 10_000,
            memory: 10,
            beta: 1e-4,
            gamma_min: 1e-10,
            gamma_max: 1e10,
            gamma_small: None,
            trace_iterates: true,
        }
    }
}

impl SpgOptions {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.epsilon > 0.0) {
            return Err(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.memory == 0 {
            return Err("memory must be at least 1".into());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(format!("beta must be in (0, 1), got {}", self.beta));
        }
        if !(self.gamma_min > 0.0 && self.gamma_min <= self.gamma_max) {
            return Err("need 0 < gamma_min <= gamma_max".into());
        }
        if let Some(g) = self.gamma_small {
            if !(g > 0.0) {
                return Err(format!("gamma_small must be positive, got {g}"));
            }
        }
        Ok(())
    }

    pub fn clamp_gamma(&self, gamma: f64) -> f64 {
        gamma.clamp(self.gamma_min, self.gamma_max)
    }
}

/// The two spectral quotients of a secant pair and the alternation choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralStep {
    /// `s^T s / s^T y`
    pub long: f64,
    /// `s^T y / y^T y`
    pub short: f64,
    /// Clamped stepsize selected for the next iteration.
    pub gamma: f64,
}

/// Spectral stepsize from a secant pair.
///
/// Uses the short quotient when `long < 2 short`, otherwise `long - short/2`,
/// clamped to `[gamma_min, gamma_max]`. Nonpositive curvature `s^T y <= 0`
/// resets to `gamma_max`.
pub fn spectral_stepsize_update(s: &DVector<f64>, y: &DVector<f64>, opts: &SpgOptions) -> SpectralStep {
    let sy = s.dot(y);
    if !(sy > 0.0) {
        return SpectralStep {
            long: f64::INFINITY,
            short: 0.0,
            gamma: opts.gamma_max,
        };
    }
    let long = s.norm_squared() / sy;
    let short = sy / y.norm_squared();
    let raw = if long < 2.0 * short {
        short
    } else {
        long - 0.5 * short
    };
    let gamma = if raw.is_finite() {
        opts.clamp_gamma(raw)
    } else {
        opts.gamma_max
    };
    SpectralStep { long, short, gamma }
}

/// Initial stepsize from a probe step `x0 - gamma_small * grad f(x0)`.
///
/// Costs exactly one extra gradient evaluation, except at a stationary point
/// (zero gradient) where `1` is returned without probing.
pub fn initial_stepsize<O: Objective + ?Sized>(
    objective: &mut O,
    x0: &DVector<f64>,
    grad0: &DVector<f64>,
    opts: &SpgOptions,
    counters: &mut Counters,
) -> f64 {
    let gnorm = grad0.amax();
    if gnorm == 0.0 {
        return 1.0;
    }
    let probe = opts
        .gamma_small
        .unwrap_or_else(|| 1e-4 * x0.amax().max(1.0) / gnorm.max(1.0));
    let x_bar = x0 - grad0 * probe;
    let g_bar = objective.gradient(&x_bar);
    counters.n_grad += 1;
    if !g_bar.iter().all(|v| v.is_finite()) {
        return 1.0;
    }
    let s = &x_bar - x0;
    let y = g_bar - grad0;
    spectral_stepsize_update(&s, &y, opts).gamma
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearchOutcome {
    Accepted { alpha: f64, value: f64 },
    /// `grad^T d >= 0`.
    NotDescent,
    /// Step shrank below [`ALPHA_FLOOR`].
    Stagnated,
    /// The objective returned NaN/Inf at every tried step.
    NonFinite,
}

/// Nonmonotone Armijo search along `d` from `x`.
///
/// `slope` is `grad f(x)^T d`, `f_x` the value at `x` and `f_max` the largest
/// value in the recent history. Rejected steps are shortened by the safeguarded
/// quadratic interpolation `-0.5 a^2 c / (f(x+ad) - f(x) - a c)` when it falls in
/// `[0.1, 0.9]`, else halved.
pub fn nonmonotone_linesearch<O: Objective + ?Sized>(
    objective: &mut O,
    x: &DVector<f64>,
    d: &DVector<f64>,
    slope: f64,
    f_x: f64,
    f_max: f64,
    beta: f64,
    counters: &mut Counters,
) -> LineSearchOutcome {
    if !(slope < 0.0) {
        return LineSearchOutcome::NotDescent;
    }
    let mut alpha = 1.0;
    loop {
        let trial = x + d * alpha;
        let f_trial = objective.value(&trial);
        counters.n_f += 1;
        if f_trial.is_finite() && f_trial <= f_max + alpha * beta * slope {
            return LineSearchOutcome::Accepted {
                alpha,
                value: f_trial,
            };
        }
        let interpolated = if f_trial.is_finite() {
            -0.5 * alpha * alpha * slope / (f_trial - f_x - alpha * slope)
        } else {
            f64::NAN
        };
        alpha = if (0.1..=0.9).contains(&interpolated) {
            interpolated
        } else {
            alpha * 0.5
        };
        if alpha < ALPHA_FLOOR {
            return if f_trial.is_finite() {
                LineSearchOutcome::Stagnated
            } else {
                LineSearchOutcome::NonFinite
            };
        }
    }
}

/// Mutable state of one SPG run.
#[derive(Debug, Clone)]
pub struct SpgState {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad: DVector<f64>,
    pub gamma: f64,
    pub f_history: VecDeque<f64>,
    pub counters: Counters,
    pub iterations: usize,
    /// Direction used by the last step.
    pub last_direction: Option<DVector<f64>>,
    /// Spectral quotients computed after the last step.
    pub last_spectral: Option<SpectralStep>,
}

impl SpgState {
    pub fn f_max(&self) -> f64 {
        self.f_history.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Result of a single [`Spg::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Continue,
    Done(Termination),
}

/// Spectral projected gradient solver over one [`ProjectionSet`].
pub struct Spg<'a, O: Objective> {
    objective: O,
    set: &'a ProjectionSet,
    opts: SpgOptions,
    state: SpgState,
    report: SolveReport,
    started: Instant,
    done: Option<Termination>,
}

impl<'a, O: Objective> Spg<'a, O> {
    /// Cold start: projects `x0`, evaluates it and probes the initial stepsize.
    pub fn new(
        objective: O,
        set: &'a ProjectionSet,
        x0: &DVector<f64>,
        opts: SpgOptions,
    ) -> Result<Self, ProjectionError> {
        Self::start(objective, set, x0, opts, None)
    }

    /// Warm start from a known stepsize; no probe gradient is spent.
    pub fn warm(
        objective: O,
        set: &'a ProjectionSet,
        x0: &DVector<f64>,
        gamma: f64,
        opts: SpgOptions,
    ) -> Result<Self, ProjectionError> {
        Self::start(objective, set, x0, opts, Some(gamma))
    }

    fn start(
        mut objective: O,
        set: &'a ProjectionSet,
        x0: &DVector<f64>,
        opts: SpgOptions,
        gamma: Option<f64>,
    ) -> Result<Self, ProjectionError> {
        if let Err(msg) = opts.validate() {
            return Err(ProjectionError::InvalidSet(format!("SPG options: {msg}")));
        }
        let started = Instant::now();
        let x = set.project(x0)?;
        let mut counters = Counters::default();
        let value = objective.value(&x);
        counters.n_f += 1;
        let grad = objective.gradient(&x);
        counters.n_grad += 1;
        let mut done = None;
        let mut report = SolveReport::new();
        let finite = value.is_finite() && grad.iter().all(|v| v.is_finite());
        if !finite {
            done = Some(Termination::CallbackFailure);
            report.message = Some("objective or gradient not finite at the initial point".into());
        }
        let gamma = match gamma {
            Some(g) => opts.clamp_gamma(g),
            None if finite => initial_stepsize(&mut objective, &x, &grad, &opts, &mut counters),
            None => 1.0,
        };
        let mut f_history = VecDeque::with_capacity(opts.memory);
        f_history.push_back(value);
        report.record_traced(opts.trace_iterates, &x, value, Vec::new());
        Ok(Self {
            objective,
            set,
            opts,
            state: SpgState {
                x,
                value,
                grad,
                gamma,
                f_history,
                counters,
                iterations: 0,
                last_direction: None,
                last_spectral: None,
            },
            report,
            started,
            done,
        })
    }

    pub fn state(&self) -> &SpgState {
        &self.state
    }

    pub fn objective(&self) -> &O {
        &self.objective
    }

    /// `||P(x - grad f(x)) - x||_inf` at the current iterate.
    pub fn projected_gradient_residual(&self) -> f64 {
        let mut p = &self.state.x - &self.state.grad;
        self.set.project_in_place(&mut p);
        (p - &self.state.x).amax()
    }

    /// Direction `P(x - gamma grad) - x` at the current iterate.
    pub fn direction(&self) -> DVector<f64> {
        let mut p = &self.state.x - &self.state.grad * self.state.gamma;
        self.set.project_in_place(&mut p);
        p - &self.state.x
    }

    fn finish(&mut self, termination: Termination, message: Option<String>) -> StepStatus {
        self.done = Some(termination);
        if message.is_some() {
            self.report.message = message;
        }
        StepStatus::Done(termination)
    }

    /// Runs one SPG iteration (or detects termination).
    pub fn step(&mut self) -> StepStatus {
        if let Some(t) = self.done {
            return StepStatus::Done(t);
        }
        if self.projected_gradient_residual() <= self.opts.epsilon {
            return self.finish(Termination::Converged, None);
        }
        if self.state.iterations >= self.opts.max_iters {
            return self.finish(Termination::MaxIters, None);
        }

        let mut d = self.direction();
        let mut slope = self.state.grad.dot(&d);
        // Nonconvex sets can yield non-descent directions; shorten gamma.
        let mut retries = 0;
        while !(slope < 0.0) && retries < 30 {
            self.state.gamma = (self.state.gamma * 0.1).max(self.opts.gamma_min);
            d = self.direction();
            slope = self.state.grad.dot(&d);
            retries += 1;
            if self.state.gamma <= self.opts.gamma_min {
                break;
            }
        }
        let f_max = self.state.f_max();
        let outcome = nonmonotone_linesearch(
            &mut self.objective,
            &self.state.x,
            &d,
            slope,
            self.state.value,
            f_max,
            self.opts.beta,
            &mut self.state.counters,
        );
        let (alpha, mut value) = match outcome {
            LineSearchOutcome::Accepted { alpha, value } => (alpha, value),
            LineSearchOutcome::NotDescent => {
                return self.finish(
                    Termination::Stagnation,
                    Some("no descent direction after resetting the stepsize".into()),
                )
            }
            LineSearchOutcome::Stagnated => {
                return self.finish(
                    Termination::Stagnation,
                    Some(format!("line search step fell below {ALPHA_FLOOR:e}")),
                )
            }
            LineSearchOutcome::NonFinite => {
                return self.finish(
                    Termination::CallbackFailure,
                    Some("objective not finite along the search direction".into()),
                )
            }
        };

        let mut x_next = &self.state.x + &d * alpha;
        if alpha < 1.0 && !self.set.is_convex() {
            self.set.project_in_place(&mut x_next);
            value = self.objective.value(&x_next);
            self.state.counters.n_f += 1;
        }
        let grad_next = self.objective.gradient(&x_next);
        self.state.counters.n_grad += 1;
        if !value.is_finite() || !grad_next.iter().all(|v| v.is_finite()) {
            return self.finish(
                Termination::CallbackFailure,
                Some(format!(
                    "non-finite objective or gradient at iteration {}",
                    self.state.iterations + 1
                )),
            );
        }

        let s = &x_next - &self.state.x;
        let y = &grad_next - &self.state.grad;
        let spectral = spectral_stepsize_update(&s, &y, &self.opts);

        self.state.x = x_next;
        self.state.value = value;
        self.state.grad = grad_next;
        self.state.gamma = spectral.gamma;
        self.state.last_direction = Some(d);
        self.state.last_spectral = Some(spectral);
        if self.state.f_history.len() == self.opts.memory {
            self.state.f_history.pop_front();
        }
        self.state.f_history.push_back(value);
        self.state.iterations += 1;
        self.report
            .record_traced(self.opts.trace_iterates, &self.state.x, value, Vec::new());
        StepStatus::Continue
    }

    /// Iterates until termination and returns the final iterate and report.
    pub fn run(mut self) -> SpgSolution {
        let termination = loop {
            if let StepStatus::Done(t) = self.step() {
                break t;
            }
        };
        self.into_solution(termination)
    }

    fn into_solution(self, termination: Termination) -> SpgSolution {
        let mut report = self.report;
        report.termination = termination;
        report.counters = self.state.counters;
        report.iterations = self.state.iterations;
        report.wall_time = self.started.elapsed();
        SpgSolution {
            x: self.state.x,
            gamma: self.state.gamma,
            report,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpgSolution {
    pub x: DVector<f64>,
    /// Spectral stepsize at exit, usable for a warm restart.
    pub gamma: f64,
    pub report: SolveReport,
}

/// Minimizes `objective` over `set` from `x0`.
pub fn spg_minimize<O: Objective>(
    objective: O,
    set: &ProjectionSet,
    x0: &DVector<f64>,
    opts: SpgOptions,
) -> Result<SpgSolution, ProjectionError> {
    Ok(Spg::new(objective, set, x0, opts)?.run())
}
