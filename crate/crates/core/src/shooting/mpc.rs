use std::time::{Duration, Instant};

use nalgebra::DVector;

use super::{Dynamics, OcProblem, ShootingError, TrajectoryCost};
use crate::al::{alspg_solve_warm, AlspgOptions, Problem};
use crate::report::{Counters, Termination};

/// Result of one horizon solve inside the receding-horizon loop.
#[derive(Debug, Clone)]
pub struct HorizonSolve {
    /// Stacked `T * n` controls.
    pub controls: DVector<f64>,
    pub objective: f64,
    /// Largest constraint residual of the plan.
    pub residual: f64,
    pub counters: Counters,
    pub termination: Termination,
}

/// A solver that plans over a fixed horizon from a measured state.
pub trait HorizonSolver {
    fn horizon(&self) -> usize;
    fn control_dim(&self) -> usize;
    /// Plans from `x0` starting at the stacked guess `warm`. An `Err` makes
    /// the loop hold the previous control.
    fn solve(&mut self, x0: &DVector<f64>, warm: &DVector<f64>) -> Result<HorizonSolve, String>;
}

/// ALSPG on a shooting problem, re-targeted at each measured state.
/// The spectral stepsize is carried from one step to the next.
pub struct AlspgHorizonSolver<D, C> {
    pub problem: OcProblem<D, C>,
    pub options: AlspgOptions,
    gamma: Option<f64>,
}

impl<D: Dynamics, C: TrajectoryCost> AlspgHorizonSolver<D, C> {
    pub fn new(problem: OcProblem<D, C>, options: AlspgOptions) -> Self {
        Self {
            problem,
            options,
            gamma: None,
        }
    }
}

impl<D: Dynamics, C: TrajectoryCost> HorizonSolver for AlspgHorizonSolver<D, C> {
    fn horizon(&self) -> usize {
        self.problem.horizon()
    }

    fn control_dim(&self) -> usize {
        self.problem.model().control_dim()
    }

    fn solve(&mut self, x0: &DVector<f64>, warm: &DVector<f64>) -> Result<HorizonSolve, String> {
        self.problem.set_initial_state(x0.clone());
        let sol = alspg_solve_warm(&self.problem, warm, None, self.gamma, &self.options).map_err(|e| e.to_string())?;
        if sol.report.termination == Termination::CallbackFailure {
            self.gamma = None;
            return Err(sol.report.message.unwrap_or_else(|| "callback failure".into()));
        }
        self.gamma = Some(sol.gamma);
        let objective = self.problem.evaluate(&sol.x).objective;
        Ok(HorizonSolve {
            residual: sol.report.final_residual(),
            controls: sol.x,
            objective,
            counters: sol.report.counters,
            termination: sol.report.termination,
        })
    }
}

/// One closed-loop step.
#[derive(Debug, Clone)]
pub struct MpcStep {
    pub step: usize,
    /// Measured state the plan started from.
    pub state: DVector<f64>,
    pub applied: DVector<f64>,
    pub solve_time: Duration,
    pub counters: Counters,
    pub objective: f64,
    pub residual: f64,
    /// `None` when the solve failed and the previous control was held.
    pub termination: Option<Termination>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct MpcLog {
    pub steps: Vec<MpcStep>,
    /// Measured states `x_0..x_K` (one more than steps).
    pub states: Vec<DVector<f64>>,
    pub total: Counters,
    /// Whether `stop` fired before the step budget ran out.
    pub stopped_early: bool,
}

impl MpcLog {
    pub fn final_state(&self) -> Option<&DVector<f64>> {
        self.states.last()
    }

    pub fn held_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.termination.is_none()).count()
    }
}

/// Receding-horizon loop: plan, apply the first control through `plant`,
/// shift the plan one step (repeating the last control) as the next warm
/// start, repeat. `plant(k, x, u)` returns the next measured state; `stop`
/// is checked on every measured state.
pub fn mpc_loop<S, P, Q>(
    solver: &mut S,
    mut plant: P,
    x_init: DVector<f64>,
    u_init: Option<DVector<f64>>,
    steps: usize,
    mut stop: Q,
) -> Result<MpcLog, ShootingError>
where
    S: HorizonSolver + ?Sized,
    P: FnMut(usize, &DVector<f64>, &DVector<f64>) -> DVector<f64>,
    Q: FnMut(&DVector<f64>) -> bool,
{
    let (horizon, n) = (solver.horizon(), solver.control_dim());
    if horizon < 2 {
        return Err(ShootingError::Dimension {
            what: "MPC horizon (at least 2)",
            expected: 2,
            got: horizon,
        });
    }
    let mut warm = u_init.unwrap_or_else(|| DVector::zeros(horizon * n));
    if warm.len() != horizon * n {
        return Err(ShootingError::Dimension {
            what: "initial control guess",
            expected: horizon * n,
            got: warm.len(),
        });
    }

    let mut log = MpcLog::default();
    let mut x = x_init;
    let mut held = DVector::zeros(n);
    log.states.push(x.clone());
    for k in 0..steps {
        if stop(&x) {
            log.stopped_early = true;
            break;
        }
        let started = Instant::now();
        let outcome = solver.solve(&x, &warm);
        let solve_time = started.elapsed();
        let (applied, entry) = match outcome {
            Ok(plan) if plan.controls.iter().all(|v| v.is_finite()) => {
                let u0 = plan.controls.rows(0, n).into_owned();
                warm = shift(&plan.controls, n);
                log.total += plan.counters;
                let entry = MpcStep {
                    step: k,
                    state: x.clone(),
                    applied: u0.clone(),
                    solve_time,
                    counters: plan.counters,
                    objective: plan.objective,
                    residual: plan.residual,
                    termination: Some(plan.termination),
                    failure: None,
                };
                (u0, entry)
            }
            failed => {
                let reason = match failed {
                    Err(e) => e,
                    Ok(_) => "non-finite plan".to_string(),
                };
                warm = shift(&warm, n);
                let entry = MpcStep {
                    step: k,
                    state: x.clone(),
                    applied: held.clone(),
                    solve_time,
                    counters: Counters::default(),
                    objective: f64::NAN,
                    residual: f64::NAN,
                    termination: None,
                    failure: Some(reason),
                };
                (held.clone(), entry)
            }
        };
        log.steps.push(entry);
        x = plant(k, &x, &applied);
        held = applied;
        log.states.push(x.clone());
    }
    if !log.stopped_early && stop(&x) {
        log.stopped_early = true;
    }
    Ok(log)
}

/// Drops the first control block and repeats the last one.
fn shift(controls: &DVector<f64>, n: usize) -> DVector<f64> {
    let len = controls.len();
    let mut out = DVector::zeros(len);
    out.rows_mut(0, len - n).copy_from(&controls.rows(n, len - n));
    out.rows_mut(len - n, n).copy_from(&controls.rows(len - n, n));
    out
}
