//! Builds solver problems from a [`ProblemConfig`] and runs them.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use alspg::al::block_residual;
use alspg::ilqr::IlqrHorizonSolver;
use alspg::models::{
    constrained_ik, robust_ik, satisfaction_rate, ArmKinematics, ChanceConstraintMap, DoubleIntegrator2D,
    EndEffectorPath, PenetrationSum, PlanarArm, PusherSlider, ReachingCost, RectObstacle,
};
use alspg::projection::ProjectionSet;
use alspg::shooting::{wrap_angle, AlspgHorizonSolver, HorizonSolver};
use alspg::{
    alspg_solve, ilqr_solve, mpc_loop, spg_solve_problem, Counters, Dynamics, OcProblem, QuadraticCost, SolveReport,
    StateSelector, Termination, Trajectory, TrajectoryCost,
};
use nalgebra::{DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{CostSpec, ModelSpec, ProblemConfig, ProblemKind, SelectorSpec, SetSpec, SolverKind, Timesteps};
use crate::error::BenchError;

pub type BoxedProblem = OcProblem<Box<dyn Dynamics>, Box<dyn TrajectoryCost>>;

/// Result of one scenario run, before serialization.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub termination: String,
    pub converged: bool,
    pub iterations: usize,
    pub counters: Counters,
    pub final_objective: Option<f64>,
    pub final_residual: f64,
    pub message: Option<String>,
    /// Scalar results (pose errors, satisfaction rate, ...).
    pub metrics: BTreeMap<String, f64>,
    /// Equal-length per-iteration (or per-MPC-step) series.
    pub traces: BTreeMap<String, Vec<f64>>,
    /// Returned decision variables and derived trajectories.
    pub solution: BTreeMap<String, Vec<f64>>,
    pub notes: Vec<String>,
    pub wall_time: Duration,
}

impl Outcome {
    fn from_report(report: &SolveReport) -> Self {
        let mut traces = BTreeMap::new();
        traces.insert("objective".to_string(), report.f_trace.clone());
        traces.insert(
            "residual".to_string(),
            report
                .constraint_residual_trace
                .iter()
                .map(|r| r.iter().copied().fold(0.0, f64::max))
                .collect(),
        );
        Self {
            termination: report.termination.as_str().to_string(),
            converged: report.converged(),
            iterations: report.iterations,
            counters: report.counters,
            final_objective: report.final_objective(),
            final_residual: report.final_residual(),
            message: report.message.clone(),
            traces,
            wall_time: report.wall_time,
            ..Self::default()
        }
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    fn solution(&mut self, name: &str, value: &DVector<f64>) {
        self.solution.insert(name.to_string(), value.as_slice().to_vec());
    }
}

/// Runs the configured problem.
pub fn run(config: &ProblemConfig) -> Result<Outcome, BenchError> {
    config
        .validate()
        .map_err(|e| BenchError::validation(config.display_name(), e))?;
    match config.kind {
        ProblemKind::Ik => run_ik(config),
        ProblemKind::RobustIk => run_robust_ik(config),
        ProblemKind::Planning => run_planning(config),
        ProblemKind::Mpc => run_mpc(config),
    }
}

fn solver_err(e: impl std::fmt::Display) -> BenchError {
    BenchError::Solver(e.to_string())
}

fn vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn run_ik(config: &ProblemConfig) -> Result<Outcome, BenchError> {
    let arm = config.model.arm().map_err(|e| BenchError::validation(config.display_name(), e))?;
    let set = config.constraints[0]
        .set
        .build("constraints[0].set")
        .map_err(|e| BenchError::validation(config.display_name(), e))?;
    let q0 = vector(&config.initial_state);
    let sol = constrained_ik(&arm, &q0, set, None, &config.options.alspg()).map_err(solver_err)?;
    let mut out = Outcome::from_report(&sol.report);
    out.metric("task_residual", sol.residual);
    let p = arm.fk(&sol.q);
    out.metric("end_effector_x", p[0]);
    out.metric("end_effector_y", p[1]);
    out.metric("joint_displacement", (&sol.q - &q0).norm());
    out.solution("q", &sol.q);
    Ok(out)
}

fn run_robust_ik(config: &ProblemConfig) -> Result<Outcome, BenchError> {
    let arm = config.model.arm().map_err(|e| BenchError::validation(config.display_name(), e))?;
    let chance = config.chance.as_ref().expect("validated");
    let seed = config.seed.expect("validated");
    let map = ChanceConstraintMap::new(arm.clone(), chance.mu(), chance.sigma_sqrt(), chance.eta)
        .map_err(|e| BenchError::validation(config.display_name(), crate::error::ValidationError::new("chance", e.to_string())))?;
    let q0 = vector(&config.initial_state);
    let sol = robust_ik(&arm, &q0, &map, &config.options.alspg()).map_err(solver_err)?;
    let mut out = Outcome::from_report(&sol.report);
    let samples = slope_samples(chance.mu(), &chance.sigma_sqrt(), chance.samples, seed);
    out.metric("satisfaction_rate", satisfaction_rate(&arm, &sol.q, samples));
    out.metric("chance_margin", map.margin(&sol.q));
    out.metric("joint_displacement", (&sol.q - &q0).norm());
    out.solution("q", &sol.q);
    Ok(out)
}

/// Seeded slope samples `mu + S xi`, `xi ~ N(0, I)`.
pub fn slope_samples(
    mu: DVector<f64>,
    sigma_sqrt: &nalgebra::DMatrix<f64>,
    count: usize,
    seed: u64,
) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let xi = DVector::from_fn(mu.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
            &mu + sigma_sqrt * xi
        })
        .collect()
}

fn build_model(spec: &ModelSpec) -> Result<Box<dyn Dynamics>, BenchError> {
    let invalid = |e: alspg::models::ModelError| BenchError::validation("model", crate::error::ValidationError::new("model", e.to_string()));
    Ok(match spec {
        ModelSpec::PlanarArm { dt, .. } => {
            let arm = spec.arm().map_err(|e| BenchError::validation("model", e))?;
            Box::new(ArmKinematics::new(arm, *dt).map_err(invalid)?)
        }
        ModelSpec::DoubleIntegrator { dt } => Box::new(DoubleIntegrator2D::new(*dt).map_err(invalid)?),
        ModelSpec::PusherSlider {
            half_length,
            half_width,
            mu_contact,
            mu_ground,
            dt,
        } => {
            let d = PusherSlider::default();
            Box::new(
                PusherSlider::new(
                    half_length.unwrap_or(d.half_length),
                    half_width.unwrap_or(d.half_width),
                    mu_contact.unwrap_or(d.mu_contact),
                    mu_ground.unwrap_or(d.mu_ground),
                    dt.unwrap_or(d.dt),
                )
                .map_err(invalid)?,
            )
        }
    })
}

/// Cost target after the seeded jitter (if any).
pub fn effective_target(config: &ProblemConfig) -> Option<DVector<f64>> {
    let Some(CostSpec::Quadratic { target, target_jitter, .. }) = &config.cost else {
        return None;
    };
    let mut target = vector(target);
    if let (Some(jitter), Some(seed)) = (target_jitter, config.seed) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (t, j) in target.iter_mut().zip(jitter) {
            *t += if *j > 0.0 { rng.random_range(-j..=*j) } else { 0.0 };
        }
    }
    Some(target)
}

fn build_cost(config: &ProblemConfig) -> Result<Box<dyn TrajectoryCost>, BenchError> {
    let cost = config.cost.as_ref().expect("validated");
    Ok(match cost {
        CostSpec::Reaching {
            goal,
            terminal_weight,
            running_weight,
            control_weight,
        } => {
            let arm = config.model.arm().map_err(|e| BenchError::validation("model", e))?;
            let mut c = ReachingCost::new(arm, vector(goal), *terminal_weight, *control_weight);
            c.running_weight = *running_weight;
            Box::new(c)
        }
        CostSpec::Quadratic {
            running,
            terminal,
            control,
            angles,
            ..
        } => {
            let m = terminal.len();
            let running = running.as_deref().map(vector).unwrap_or_else(|| DVector::zeros(m));
            let target = effective_target(config).expect("quadratic cost");
            Box::new(QuadraticCost::new(target, running, vector(terminal), vector(control)).with_angles(angles.clone()))
        }
    })
}

fn control_domain(config: &ProblemConfig) -> Result<ProjectionSet, BenchError> {
    let horizon = config.horizon();
    let (_, n) = config.model.dims();
    Ok(match &config.control_bounds {
        Some(b) => ProjectionSet::repeated(
            ProjectionSet::bounds(vector(&b.lower), vector(&b.upper)).map_err(solver_err)?,
            horizon,
        ),
        None => ProjectionSet::unbounded(n * horizon),
    })
}

fn initial_controls(config: &ProblemConfig) -> DVector<f64> {
    let (_, n) = config.model.dims();
    let per_step = config.initial_control.clone().unwrap_or_else(|| vec![0.0; n]);
    DVector::from_fn(n * config.horizon(), |i, _| per_step[i % n])
}

/// A constraint resolved against the horizon: where it looks and which set
/// each selected point must lie in.
struct ResolvedConstraint {
    selector: SelectorSpec,
    timesteps: Vec<usize>,
    point_set: ProjectionSet,
    spec: SetSpec,
}

fn resolve_constraints(config: &ProblemConfig) -> Result<Vec<ResolvedConstraint>, BenchError> {
    config
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let point_set = c
                .set
                .build(&format!("constraints[{i}].set"))
                .map_err(|e| BenchError::validation(config.display_name(), e))?;
            let timesteps = match &c.selector {
                SelectorSpec::State { timesteps, .. } | SelectorSpec::EndEffector { timesteps } => {
                    timesteps.resolve(config.horizon())
                }
            };
            Ok(ResolvedConstraint {
                selector: c.selector.clone(),
                timesteps,
                point_set,
                spec: c.set.clone(),
            })
        })
        .collect()
}

impl ResolvedConstraint {
    /// Selected point of a single state.
    fn point(&self, arm: Option<&PlanarArm>, x: &DVector<f64>) -> DVector<f64> {
        match &self.selector {
            SelectorSpec::State { components, .. } => DVector::from_iterator(components.len(), components.iter().map(|&c| x[c])),
            SelectorSpec::EndEffector { .. } => arm.expect("end_effector needs an arm").fk(x),
        }
    }

    /// Outside-rectangle constraint on positions at every timestep, which
    /// `alspg_noproj` rewrites as a penetration sum.
    fn obstacle(&self, horizon: usize) -> Option<RectObstacle> {
        let SetSpec::Rectangle {
            center,
            length,
            width,
            theta,
            outside: true,
        } = self.spec
        else {
            return None;
        };
        let on_positions = matches!(&self.selector, SelectorSpec::State { components, timesteps: Timesteps::All } if components == &[0, 1]);
        if !on_positions || self.timesteps.len() != horizon {
            return None;
        }
        RectObstacle::new(center, length, width, theta).ok()
    }
}

fn arm_of(config: &ProblemConfig) -> Option<PlanarArm> {
    config.model.arm().ok()
}

/// Builds the shooting problem. `penetration` rewrites outside-rectangle
/// position constraints as scalar penetration sums.
pub fn build_problem(config: &ProblemConfig, penetration: bool) -> Result<BoxedProblem, BenchError> {
    let horizon = config.horizon();
    let mut problem = OcProblem::new(
        build_model(&config.model)?,
        vector(&config.initial_state),
        horizon,
        build_cost(config)?,
        control_domain(config)?,
    )
    .map_err(solver_err)?;
    let arm = arm_of(config);
    for c in resolve_constraints(config)? {
        let stacked = ProjectionSet::repeated(c.point_set.clone(), c.timesteps.len());
        problem = match (&c.selector, c.obstacle(horizon).filter(|_| penetration)) {
            (_, Some(obstacle)) => problem.with_path_constraint(PenetrationSum { obstacle }, ProjectionSet::point(DVector::zeros(1))),
            (SelectorSpec::State { components, .. }, None) => {
                problem.with_state_constraint(StateSelector::new(c.timesteps.clone(), components.clone()), stacked)
            }
            (SelectorSpec::EndEffector { .. }, None) => problem.with_path_constraint(
                EndEffectorPath {
                    arm: arm.clone().expect("validated"),
                    timesteps: c.timesteps.clone(),
                },
                stacked,
            ),
        }
        .map_err(solver_err)?;
    }
    Ok(problem)
}

/// Largest residual of any configured constraint at any selected timestep,
/// measured pointwise on a trajectory.
fn trajectory_violation(constraints: &[ResolvedConstraint], arm: Option<&PlanarArm>, traj: &Trajectory) -> f64 {
    constraints
        .iter()
        .flat_map(|c| c.timesteps.iter().map(move |&t| block_residual(&c.point(arm, &traj.state(t)), &c.point_set)))
        .fold(0.0, f64::max)
}

fn state_violation(constraints: &[ResolvedConstraint], arm: Option<&PlanarArm>, x: &DVector<f64>) -> f64 {
    constraints
        .iter()
        .map(|c| block_residual(&c.point(arm, x), &c.point_set))
        .fold(0.0, f64::max)
}

/// Goal errors of a final state against the cost target.
fn goal_metrics(config: &ProblemConfig, x: &DVector<f64>, out: &mut Outcome) {
    match &config.cost {
        Some(CostSpec::Reaching { goal, .. }) => {
            if let Some(arm) = arm_of(config) {
                let p = arm.fk(x);
                out.metric("end_effector_error", (Vector2::new(p[0], p[1]) - Vector2::new(goal[0], goal[1])).norm());
            }
        }
        Some(CostSpec::Quadratic { angles, .. }) => {
            let target = effective_target(config).expect("quadratic cost");
            out.solution("target", &target);
            if let ModelSpec::PusherSlider { .. } | ModelSpec::DoubleIntegrator { .. } = config.model {
                out.metric("position_error", (x[0] - target[0]).hypot(x[1] - target[1]));
            }
            let angle_err = angles.iter().map(|&c| wrap_angle(x[c] - target[c]).abs()).fold(0.0, f64::max);
            if !angles.is_empty() {
                out.metric("angle_error", angle_err);
            }
            let state_err = (0..x.len())
                .map(|i| {
                    let d = x[i] - target[i];
                    if angles.contains(&i) { wrap_angle(d) } else { d }
                })
                .map(f64::abs)
                .fold(0.0, f64::max);
            out.metric("state_error_inf", state_err);
        }
        None => {}
    }
}

fn run_planning(config: &ProblemConfig) -> Result<Outcome, BenchError> {
    let u0 = initial_controls(config);
    let constraints = resolve_constraints(config)?;
    let arm = arm_of(config);
    let (mut out, traj) = match config.solver {
        SolverKind::Alspg | SolverKind::AlspgNoproj => {
            let penetration = config.solver == SolverKind::AlspgNoproj;
            let problem = build_problem(config, penetration)?;
            if penetration && constraints.iter().all(|c| c.obstacle(config.horizon()).is_none()) {
                return Err(BenchError::validation(
                    config.display_name(),
                    crate::error::ValidationError::new("solver", "alspg_noproj needs at least one outside rectangle on state components [0, 1] at all timesteps"),
                ));
            }
            let sol = alspg_solve(&problem, &u0, &config.options.alspg()).map_err(solver_err)?;
            let traj = problem.rollout(&sol.x).map_err(solver_err)?;
            (Outcome::from_report(&sol.report), traj)
        }
        SolverKind::Spg => {
            let problem = build_problem(config, false)?;
            let sol = spg_solve_problem(&problem, &u0, config.options.spg()).map_err(solver_err)?;
            let traj = problem.rollout(&sol.x).map_err(solver_err)?;
            (Outcome::from_report(&sol.report), traj)
        }
        SolverKind::Ilqr => {
            let model = build_model(&config.model)?;
            let cost = build_cost(config)?;
            let x0 = vector(&config.initial_state);
            let sol = ilqr_solve(&model, &x0, &cost, &u0, &config.options.ilqr()).map_err(solver_err)?;
            let mut out = Outcome::from_report(&sol.report);
            if config.control_bounds.is_some() {
                out.notes.push("ilqr is unconstrained: control_bounds ignored".into());
            }
            (out, sol.trajectory)
        }
    };
    let xf = traj.final_state();
    goal_metrics(config, &xf, &mut out);
    if !constraints.is_empty() {
        out.metric("constraint_violation", trajectory_violation(&constraints, arm.as_ref(), &traj));
    }
    let obstacles: Vec<RectObstacle> = constraints.iter().filter_map(|c| c.obstacle(config.horizon())).collect();
    if !obstacles.is_empty() {
        let m = traj.state_dim();
        let depth = (0..traj.horizon())
            .flat_map(|t| {
                let p = [traj.states[t * m], traj.states[t * m + 1]];
                obstacles.iter().map(move |o| o.depth(&p))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        out.metric("max_penetration", depth);
    }
    out.solution("controls", &traj.controls);
    out.solution("final_state", &xf);
    Ok(out)
}

fn run_mpc(config: &ProblemConfig) -> Result<Outcome, BenchError> {
    let mpc = config.mpc.as_ref().expect("validated");
    let constraints = resolve_constraints(config)?;
    let arm = arm_of(config);
    let plant_model = build_model(&config.model)?;
    let x0 = vector(&config.initial_state);
    let u0 = initial_controls(config);
    let target = effective_target(config);

    let mut solver: Box<dyn HorizonSolver> = match config.solver {
        SolverKind::Alspg => Box::new(AlspgHorizonSolver::new(build_problem(config, false)?, config.options.alspg())),
        SolverKind::Ilqr => Box::new(IlqrHorizonSolver {
            model: build_model(&config.model)?,
            cost: build_cost(config)?,
            horizon: config.horizon(),
            options: config.options.ilqr(),
        }),
        _ => unreachable!("validated"),
    };
    let plant = |k: usize, x: &DVector<f64>, u: &DVector<f64>| {
        let mut next = plant_model.step(x, u);
        for d in mpc.disturbances.iter().filter(|d| d.step == k) {
            next += vector(&d.delta);
        }
        next
    };
    let stop = |x: &DVector<f64>| match (&mpc.stop, &target) {
        (Some(stop), Some(target)) => {
            let pos = stop.position_components.iter().map(|&c| (x[c] - target[c]).powi(2)).sum::<f64>().sqrt();
            let angle_ok = match (stop.angle_component, stop.angle_tol) {
                (Some(c), Some(tol)) => wrap_angle(x[c] - target[c]).abs() <= tol,
                _ => true,
            };
            pos <= stop.position_tol && angle_ok
        }
        _ => false,
    };

    let started = Instant::now();
    let log = mpc_loop(solver.as_mut(), plant, x0.clone(), Some(u0), mpc.steps, stop).map_err(solver_err)?;
    let wall_time = started.elapsed();

    let held = log.held_steps();
    let reached = mpc.stop.is_none() || log.stopped_early;
    let measured: Vec<f64> = log.states.iter().map(|x| state_violation(&constraints, arm.as_ref(), x)).collect();
    let mut traces = BTreeMap::new();
    traces.insert("n_f".to_string(), log.steps.iter().map(|s| s.counters.n_f as f64).collect());
    traces.insert("n_jac".to_string(), log.steps.iter().map(|s| s.counters.n_jac as f64).collect());
    traces.insert("objective".to_string(), log.steps.iter().map(|s| s.objective).collect());
    traces.insert("plan_residual".to_string(), log.steps.iter().map(|s| s.residual).collect());
    // Residual of the measured state each plan started from.
    traces.insert("measured_residual".to_string(), measured[..log.steps.len()].to_vec());

    let termination = if held > 0 {
        Termination::CallbackFailure
    } else if reached {
        Termination::Converged
    } else {
        Termination::MaxIters
    };
    let mut out = Outcome {
        termination: termination.as_str().to_string(),
        converged: reached && held == 0,
        iterations: log.steps.len(),
        counters: log.total,
        final_objective: log.steps.last().map(|s| s.objective),
        final_residual: measured.last().copied().unwrap_or(0.0),
        message: log.steps.iter().find_map(|s| s.failure.clone()).map(|f| format!("held the previous control: {f}")),
        traces,
        wall_time,
        ..Outcome::default()
    };
    let xf = log.final_state().cloned().unwrap_or(x0);
    goal_metrics(config, &xf, &mut out);
    out.metric("steps", log.steps.len() as f64);
    out.metric("held_steps", held as f64);
    out.metric("stopped_early", if log.stopped_early { 1.0 } else { 0.0 });
    if !constraints.is_empty() {
        out.metric("max_measured_residual", measured.iter().copied().fold(0.0, f64::max));
        if let Some(last) = mpc.disturbances.iter().map(|d| d.step).max() {
            // States after the disturbance start at index last + 1.
            let recovery = measured
                .iter()
                .enumerate()
                .skip(last + 1)
                .find(|(_, r)| **r < mpc.recovery_tol)
                .map(|(k, _)| (k - last - 1) as f64)
                .unwrap_or(f64::INFINITY);
            out.metric("recovery_steps", recovery);
        }
    }
    if config.solver == SolverKind::Ilqr && config.control_bounds.is_some() {
        out.notes.push("ilqr is unconstrained: control_bounds ignored".into());
    }
    out.solution("final_state", &xf);
    out.solution("applied", &DVector::from_iterator(log.steps.len() * config.model.dims().1, log.steps.iter().flat_map(|s| s.applied.iter().copied())));
    Ok(out)
}
