//! Augmented-Lagrangian outer loop over SPG.
//!
//! Solves `min_{x in D} f(x)` subject to `g_i(x) in C_i` for any number of
//! blocks, where `D` and every `C_i` are [`ProjectionSet`]s. Each block
//! contributes the shifted penalty
//! `rho_i/2 ||g_i(x) + lambda_i/rho_i - P_i(g_i(x) + lambda_i/rho_i)||^2`,
//! whose gradient only needs `J_i^T` times a vector; projections are never
//! differentiated.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use thiserror::Error;

use crate::projection::{ProjectionError, ProjectionSet};
use crate::report::{Counters, SolveReport, Termination};
use crate::spg::{Objective, Spg, SpgOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlError {
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("non-finite value from {0}")]
    NonFinite(&'static str),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("expected {expected} constraint blocks, got {got}")]
    BlockCount { expected: usize, got: usize },
}

/// Objective and constraint values at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub constraints: Vec<DVector<f64>>,
}

impl Evaluation {
    fn is_finite(&self) -> bool {
        self.objective.is_finite()
            && self
                .constraints
                .iter()
                .all(|g| g.iter().all(|v| v.is_finite()))
    }
}

/// A constrained problem `min_{x in D} f(x) s.t. g_i(x) in C_i`.
pub trait Problem {
    fn dim(&self) -> usize;
    fn domain(&self) -> &ProjectionSet;
    fn num_blocks(&self) -> usize;
    fn block_set(&self, i: usize) -> &ProjectionSet;
    /// `f(x)` and every `g_i(x)`: one function evaluation.
    fn evaluate(&self, x: &DVector<f64>) -> Evaluation;
    /// `grad f(x) + sum_i J_i(x)^T w_i`: one Jacobian evaluation.
    fn gradient(&self, x: &DVector<f64>, weights: &[DVector<f64>]) -> DVector<f64>;
}

/// Differentiable map `x -> g(x)` exposing Jacobian-transpose products.
pub trait ConstraintMap: Send + Sync {
    fn output_dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `J(x)^T y`
    fn jacobian_transpose_product(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64>;
}

type VecFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type VjpFn = Box<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
type ScalarFn = Box<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

/// [`ConstraintMap`] from a pair of closures.
pub struct FnMap {
    output_dim: usize,
    value: VecFn,
    vjp: VjpFn,
}

impl FnMap {
    pub fn new(
        output_dim: usize,
        value: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        vjp: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            output_dim,
            value: Box::new(value),
            vjp: Box::new(vjp),
        }
    }

    /// The identity map `g(x) = x`.
    pub fn identity(dim: usize) -> Self {
        Self::new(dim, |x| x.clone(), |_, y| y.clone())
    }
}

impl ConstraintMap for FnMap {
    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.value)(x)
    }

    fn jacobian_transpose_product(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        (self.vjp)(x, y)
    }
}

/// One constraint `g(x) in C`.
pub struct ConstraintBlock {
    pub map: Box<dyn ConstraintMap>,
    pub set: ProjectionSet,
}

impl ConstraintBlock {
    pub fn new(map: impl ConstraintMap + 'static, set: ProjectionSet) -> Self {
        Self {
            map: Box::new(map),
            set,
        }
    }
}

/// Problem assembled from closures.
pub struct NlpProblem {
    objective: ScalarFn,
    gradient: VecFn,
    domain: ProjectionSet,
    constraints: Vec<ConstraintBlock>,
}

impl NlpProblem {
    pub fn new(
        objective: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        domain: ProjectionSet,
    ) -> Self {
        Self {
            objective: Box::new(objective),
            gradient: Box::new(gradient),
            domain,
            constraints: Vec::new(),
        }
    }

    pub fn with_constraint(mut self, block: ConstraintBlock) -> Self {
        self.constraints.push(block);
        self
    }

    pub fn push_constraint(&mut self, block: ConstraintBlock) {
        self.constraints.push(block);
    }

    pub fn constraints(&self) -> &[ConstraintBlock] {
        &self.constraints
    }
}

impl Problem for NlpProblem {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &ProjectionSet {
        &self.domain
    }

    fn num_blocks(&self) -> usize {
        self.constraints.len()
    }

    fn block_set(&self, i: usize) -> &ProjectionSet {
        &self.constraints[i].set
    }

    fn evaluate(&self, x: &DVector<f64>) -> Evaluation {
        Evaluation {
            objective: (self.objective)(x),
            constraints: self.constraints.iter().map(|c| c.map.value(x)).collect(),
        }
    }

    fn gradient(&self, x: &DVector<f64>, weights: &[DVector<f64>]) -> DVector<f64> {
        let mut grad = (self.gradient)(x);
        for (block, w) in self.constraints.iter().zip(weights) {
            if w.iter().any(|&v| v != 0.0) {
                grad += block.map.jacobian_transpose_product(x, w);
            }
        }
        grad
    }
}

/// Multiplier, penalty and last auxiliary value of one constraint block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    pub lambda: DVector<f64>,
    pub rho: f64,
    pub v_prev: f64,
}

impl BlockState {
    pub fn new(dim: usize, rho: f64) -> Self {
        Self {
            lambda: DVector::zeros(dim),
            rho,
            v_prev: f64::INFINITY,
        }
    }

    /// `g + lambda/rho` and its projection.
    fn shifted(&self, g: &DVector<f64>, set: &ProjectionSet) -> (DVector<f64>, DVector<f64>) {
        let shifted = g + &self.lambda / self.rho;
        let mut proj = shifted.clone();
        set.project_in_place(&mut proj);
        (shifted, proj)
    }
}

fn check_blocks<P: Problem + ?Sized>(
    problem: &P,
    blocks: &[BlockState],
    eval: &Evaluation,
) -> Result<(), AlError> {
    if blocks.len() != problem.num_blocks() {
        return Err(AlError::BlockCount {
            expected: problem.num_blocks(),
            got: blocks.len(),
        });
    }
    for (i, g) in eval.constraints.iter().enumerate() {
        let expected = problem.block_set(i).dim();
        if g.len() != expected {
            return Err(ProjectionError::DimensionMismatch {
                expected,
                got: g.len(),
            }
            .into());
        }
    }
    Ok(())
}

fn penalty_value<P: Problem + ?Sized>(problem: &P, blocks: &[BlockState], eval: &Evaluation) -> f64 {
    let mut value = eval.objective;
    for (i, (g, state)) in eval.constraints.iter().zip(blocks).enumerate() {
        let (shifted, proj) = state.shifted(g, problem.block_set(i));
        value += 0.5 * state.rho * (shifted - proj).norm_squared();
    }
    value
}

fn penalty_weights<P: Problem + ?Sized>(
    problem: &P,
    blocks: &[BlockState],
    eval: &Evaluation,
) -> Vec<DVector<f64>> {
    eval.constraints
        .iter()
        .zip(blocks)
        .enumerate()
        .map(|(i, (g, state))| {
            let (shifted, proj) = state.shifted(g, problem.block_set(i));
            (shifted - proj) * state.rho
        })
        .collect()
}

/// Augmented Lagrangian `f(x) + sum_i rho_i/2 ||g_i + lambda_i/rho_i - P_i(g_i + lambda_i/rho_i)||^2`.
pub fn al_value<P: Problem + ?Sized>(
    problem: &P,
    blocks: &[BlockState],
    x: &DVector<f64>,
) -> Result<f64, AlError> {
    check_dim(problem, x)?;
    let eval = problem.evaluate(x);
    if !eval.is_finite() {
        return Err(AlError::NonFinite("objective or constraint callback"));
    }
    check_blocks(problem, blocks, &eval)?;
    Ok(penalty_value(problem, blocks, &eval))
}

/// Gradient of [`al_value`]: `grad f + sum_i rho_i J_i^T (g_i + lambda_i/rho_i - P_i(.))`.
pub fn al_gradient<P: Problem + ?Sized>(
    problem: &P,
    blocks: &[BlockState],
    x: &DVector<f64>,
) -> Result<DVector<f64>, AlError> {
    check_dim(problem, x)?;
    let eval = problem.evaluate(x);
    if !eval.is_finite() {
        return Err(AlError::NonFinite("objective or constraint callback"));
    }
    check_blocks(problem, blocks, &eval)?;
    let weights = penalty_weights(problem, blocks, &eval);
    let grad = problem.gradient(x, &weights);
    if !grad.iter().all(|v| v.is_finite()) {
        return Err(AlError::NonFinite("gradient callback"));
    }
    Ok(grad)
}

/// `V = ||g(x) - P(g(x) + lambda/rho)||`.
pub fn auxiliary_v(g: &DVector<f64>, set: &ProjectionSet, state: &BlockState) -> f64 {
    let (_, proj) = state.shifted(g, set);
    (g - proj).norm()
}

/// Residual `||g - P(g)||_inf` of one block.
pub fn block_residual(g: &DVector<f64>, set: &ProjectionSet) -> f64 {
    let mut proj = g.clone();
    set.project_in_place(&mut proj);
    (g - proj).amax()
}

fn check_dim<P: Problem + ?Sized>(problem: &P, x: &DVector<f64>) -> Result<(), AlError> {
    if x.len() != problem.dim() {
        return Err(ProjectionError::DimensionMismatch {
            expected: problem.dim(),
            got: x.len(),
        }
        .into());
    }
    Ok(())
}

/// The augmented Lagrangian as an SPG objective, caching the last evaluation
/// so a gradient at an already evaluated point does not re-evaluate.
struct AugmentedObjective<'a, P: Problem + ?Sized> {
    problem: &'a P,
    blocks: &'a [BlockState],
    cache: Option<(DVector<f64>, Evaluation)>,
    counters: Counters,
}

impl<'a, P: Problem + ?Sized> AugmentedObjective<'a, P> {
    fn evaluation(&mut self, x: &DVector<f64>) -> &Evaluation {
        let hit = matches!(&self.cache, Some((cx, _)) if cx == x);
        if !hit {
            let eval = self.problem.evaluate(x);
            self.counters.n_f += 1;
            self.cache = Some((x.clone(), eval));
        }
        &self.cache.as_ref().expect("cache filled").1
    }
}

impl<P: Problem + ?Sized> Objective for AugmentedObjective<'_, P> {
    fn value(&mut self, x: &DVector<f64>) -> f64 {
        let (problem, blocks) = (self.problem, self.blocks);
        let eval = self.evaluation(x);
        if !eval.is_finite() {
            return f64::NAN;
        }
        penalty_value(problem, blocks, eval)
    }

    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64> {
        let (problem, blocks) = (self.problem, self.blocks);
        let eval = self.evaluation(x);
        if !eval.is_finite() {
            return DVector::from_element(x.len(), f64::NAN);
        }
        let weights = penalty_weights(problem, blocks, eval);
        self.counters.n_jac += 1;
        problem.gradient(x, &weights)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlspgOptions {
    /// Outer stop: every block residual `||g_i - P_i(g_i)||_inf` below this.
    pub epsilon_outer: f64,
    pub rho0: f64,
    pub rho_growth: f64,
    pub rho_max: f64,
    /// Componentwise clamp on multipliers.
    pub lambda_max: f64,
    pub max_outer: usize,
    /// Inner SPG options; `inner.epsilon` is the final inner tolerance.
    pub inner: SpgOptions,
    /// Inner tolerance of the first outer iteration.
    pub inner_epsilon_start: f64,
    /// Geometric factor tightening the inner tolerance per outer iteration.
    pub inner_epsilon_decay: f64,
    /// A block keeps its penalty when `V_new <= ratio * V_prev`; `1.0` only
    /// asks for no increase.
    pub penalty_decrease_ratio: f64,
    /// Wall-clock budget checked after every outer iteration.
    pub time_limit: Option<Duration>,
}

impl Default for AlspgOptions {
    fn default() -> Self {
        Self {
            epsilon_outer: 1e-4,
            rho0: 0.1,
            rho_growth: 10.0,
            rho_max: 1e8,
            lambda_max: 1e8,
            max_outer: 100,
            inner: SpgOptions::default(),
            inner_epsilon_start: 1e-2,
            inner_epsilon_decay: 0.1,
            penalty_decrease_ratio: 0.5,
            time_limit: None,
        }
    }
}

impl AlspgOptions {
    pub fn validate(&self) -> Result<(), AlError> {
        let bad = |m: &str| Err(AlError::InvalidOptions(m.to_string()));
        if !(self.epsilon_outer > 0.0) {
            return bad("epsilon_outer must be positive");
        }
        if !(self.rho0 > 0.0) {
            return bad("rho0 must be positive");
        }
        if !(self.rho_growth > 1.0) {
            return bad("rho_growth must exceed 1");
        }
        if !(self.rho_max >= self.rho0) {
            return bad("rho_max must be at least rho0");
        }
        if !(self.lambda_max > 0.0) {
            return bad("lambda_max must be positive");
        }
        if !(self.penalty_decrease_ratio > 0.0 && self.penalty_decrease_ratio <= 1.0) {
            return bad("penalty_decrease_ratio must be in (0, 1]");
        }
        if !(self.inner_epsilon_decay > 0.0 && self.inner_epsilon_decay < 1.0) {
            return bad("inner_epsilon_decay must be in (0, 1)");
        }
        self.inner.validate().map_err(AlError::InvalidOptions)
    }
}

#[derive(Debug, Clone)]
pub struct AlspgSolution {
    pub x: DVector<f64>,
    pub report: SolveReport,
    pub blocks: Vec<BlockState>,
    /// Spectral stepsize of the last inner solve.
    pub gamma: f64,
}

/// Solves `problem` from `x0` with fresh multipliers.
pub fn alspg_solve<P: Problem + ?Sized>(
    problem: &P,
    x0: &DVector<f64>,
    opts: &AlspgOptions,
) -> Result<AlspgSolution, AlError> {
    alspg_solve_warm(problem, x0, None, None, opts)
}

/// Solves `problem` from `x0`, optionally reusing multipliers/penalties and a
/// spectral stepsize from a previous solve (closed-loop and MPC use).
pub fn alspg_solve_warm<P: Problem + ?Sized>(
    problem: &P,
    x0: &DVector<f64>,
    blocks: Option<Vec<BlockState>>,
    gamma: Option<f64>,
    opts: &AlspgOptions,
) -> Result<AlspgSolution, AlError> {
    opts.validate()?;
    check_dim(problem, x0)?;
    let started = Instant::now();
    let mut report = SolveReport::new();
    let mut counters = Counters::default();

    let mut x = problem.domain().project(x0)?;
    let mut eval = problem.evaluate(&x);
    counters.n_f += 1;
    let mut blocks = match blocks {
        Some(b) => b,
        None => (0..problem.num_blocks())
            .map(|i| BlockState::new(problem.block_set(i).dim(), opts.rho0))
            .collect(),
    };
    check_blocks(problem, &blocks, &eval)?;
    let residuals = |eval: &Evaluation| -> Vec<f64> {
        eval.constraints
            .iter()
            .enumerate()
            .map(|(i, g)| block_residual(g, problem.block_set(i)))
            .collect()
    };
    report.record(&x, eval.objective, residuals(&eval));
    if !eval.is_finite() {
        report.termination = Termination::CallbackFailure;
        report.message = Some("non-finite evaluation at the initial point".into());
        report.counters = counters;
        report.wall_time = started.elapsed();
        return Ok(AlspgSolution {
            x,
            report,
            blocks,
            gamma: 1.0,
        });
    }

    let mut gamma = gamma;
    // without constraint blocks there is nothing to balance: solve once at the final tolerance
    let mut inner_eps = if problem.num_blocks() == 0 {
        opts.inner.epsilon
    } else {
        opts.inner_epsilon_start.max(opts.inner.epsilon)
    };
    let mut termination = Termination::MaxIters;
    let mut outer = 0;
    while outer < opts.max_outer {
        for (i, state) in blocks.iter_mut().enumerate() {
            state.v_prev = auxiliary_v(&eval.constraints[i], problem.block_set(i), state);
        }
        let inner_opts = SpgOptions {
            epsilon: inner_eps,
            ..opts.inner.clone()
        };
        let objective = AugmentedObjective {
            problem,
            blocks: &blocks,
            cache: Some((x.clone(), eval.clone())),
            counters: Counters::default(),
        };
        let spg = match gamma {
            Some(g) => Spg::warm(objective, problem.domain(), &x, g, inner_opts)?,
            None => Spg::new(objective, problem.domain(), &x, inner_opts)?,
        };
        let inner = spg_run_with_counters(spg);
        counters.n_f += inner.objective_counters.n_f;
        counters.n_jac += inner.objective_counters.n_jac;
        counters.n_grad += inner.solution.report.counters.n_grad;
        outer += 1;

        let inner_term = inner.solution.report.termination;
        x = inner.solution.x;
        gamma = Some(inner.solution.gamma);
        if inner_term == Termination::CallbackFailure {
            termination = Termination::CallbackFailure;
            report.message = inner.solution.report.message;
            break;
        }

        eval = match inner.cache {
            Some((cx, cached)) if cx == x => cached,
            _ => {
                counters.n_f += 1;
                problem.evaluate(&x)
            }
        };
        if !eval.is_finite() {
            termination = Termination::CallbackFailure;
            report.message = Some(format!("non-finite evaluation after outer iteration {outer}"));
            break;
        }

        let mut stalled = false;
        for (i, state) in blocks.iter_mut().enumerate() {
            let set = problem.block_set(i);
            let g = &eval.constraints[i];
            let (shifted, proj) = state.shifted(g, set);
            state.lambda = ((shifted - proj) * state.rho)
                .map(|v| v.clamp(-opts.lambda_max, opts.lambda_max));
            let v_new = auxiliary_v(g, set, state);
            if v_new > opts.penalty_decrease_ratio * state.v_prev {
                if state.rho >= opts.rho_max {
                    stalled = true;
                }
                state.rho = (state.rho * opts.rho_growth).min(opts.rho_max);
            }
        }

        let res = residuals(&eval);
        report.record(&x, eval.objective, res.clone());
        let feasible = res.iter().all(|&r| r <= opts.epsilon_outer);
        let inner_done = matches!(inner_term, Termination::Converged | Termination::Stagnation);
        if feasible && inner_done && inner_eps <= opts.inner.epsilon {
            termination = Termination::Converged;
            break;
        }
        if stalled && !feasible {
            termination = Termination::Stagnation;
            report.message = Some("penalty reached rho_max with the constraint still violated".into());
            break;
        }
        if opts.time_limit.is_some_and(|limit| started.elapsed() >= limit) {
            report.message = Some("time limit reached".into());
            break;
        }
        inner_eps = (inner_eps * opts.inner_epsilon_decay).max(opts.inner.epsilon);
    }

    report.termination = termination;
    report.iterations = outer;
    report.counters = counters;
    report.wall_time = started.elapsed();
    Ok(AlspgSolution {
        x,
        report,
        blocks,
        gamma: gamma.unwrap_or(1.0),
    })
}

struct InnerRun {
    solution: crate::spg::SpgSolution,
    objective_counters: Counters,
    cache: Option<(DVector<f64>, Evaluation)>,
}

fn spg_run_with_counters<P: Problem + ?Sized>(mut spg: Spg<'_, AugmentedObjective<'_, P>>) -> InnerRun {
    use crate::spg::StepStatus;
    while let StepStatus::Continue = spg.step() {}
    let objective_counters = spg.objective().counters;
    let cache = spg.objective().cache.clone();
    InnerRun {
        solution: spg.run(),
        objective_counters,
        cache,
    }
}

/// The objective of a [`Problem`] alone, constraint blocks ignored.
pub struct ObjectiveOnly<'a, P: Problem + ?Sized> {
    problem: &'a P,
    zero_weights: Vec<DVector<f64>>,
}

impl<'a, P: Problem + ?Sized> ObjectiveOnly<'a, P> {
    pub fn new(problem: &'a P) -> Self {
        let zero_weights = (0..problem.num_blocks())
            .map(|i| DVector::zeros(problem.block_set(i).dim()))
            .collect();
        Self { problem, zero_weights }
    }
}

impl<P: Problem + ?Sized> Objective for ObjectiveOnly<'_, P> {
    fn value(&mut self, x: &DVector<f64>) -> f64 {
        self.problem.evaluate(x).objective
    }

    fn gradient(&mut self, x: &DVector<f64>) -> DVector<f64> {
        self.problem.gradient(x, &self.zero_weights)
    }
}

/// Plain SPG on `min_{x in D} f(x)`, for problems without constraint blocks
/// (blocks, if any, are ignored). Every gradient is one Jacobian evaluation.
pub fn spg_solve_problem<P: Problem + ?Sized>(
    problem: &P,
    x0: &DVector<f64>,
    opts: SpgOptions,
) -> Result<crate::spg::SpgSolution, AlError> {
    check_dim(problem, x0)?;
    let mut sol = Spg::new(ObjectiveOnly::new(problem), problem.domain(), x0, opts)?.run();
    sol.report.counters.n_jac = sol.report.counters.n_grad;
    Ok(sol)
}

/// One scalar inequality `g(x) <= 0` with its gradient.
pub struct ScalarInequality {
    value: ScalarFn,
    gradient: VecFn,
}

impl ScalarInequality {
    pub fn new(
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Box::new(value),
            gradient: Box::new(gradient),
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }
}

/// `h(x) = sum_i max(0, g_i(x))`, which is zero exactly when every
/// `g_i(x) <= 0`. Used as a scalar equality constraint `h(x) in {0}`.
///
/// The derivative takes `g_i` as active only when `g_i(x) > 0`.
pub struct InequalitySum {
    terms: Vec<ScalarInequality>,
}

/// Folds scalar inequalities into one equality map.
pub fn reduce_inequalities(terms: Vec<ScalarInequality>) -> InequalitySum {
    InequalitySum { terms }
}

impl InequalitySum {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn h(&self, x: &DVector<f64>) -> f64 {
        self.terms.iter().map(|g| g.value(x).max(0.0)).sum()
    }

    /// Subgradient: sum of `grad g_i` over strictly violated terms.
    pub fn subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut grad = DVector::zeros(x.len());
        for g in &self.terms {
            if g.value(x) > 0.0 {
                grad += (g.gradient)(x);
            }
        }
        grad
    }
}

impl ConstraintMap for InequalitySum {
    fn output_dim(&self) -> usize {
        1
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, self.h(x))
    }

    fn jacobian_transpose_product(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.subgradient(x) * y[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn point_problem() -> NlpProblem {
        // f = x^2, x in {1}
        NlpProblem::new(|x| x.norm_squared(), |x| x * 2.0, ProjectionSet::unbounded(1))
            .with_constraint(ConstraintBlock::new(
                FnMap::identity(1),
                ProjectionSet::point(dvector![1.0]),
            ))
    }

    #[test]
    fn value_without_constraints_is_objective() {
        let p = NlpProblem::new(|x| x[0].powi(3), |x| dvector![3.0 * x[0] * x[0]], ProjectionSet::unbounded(1));
        assert_eq!(al_value(&p, &[], &dvector![2.0]).unwrap(), 8.0);
    }

    #[test]
    fn value_and_gradient_hand_example() {
        let p = NlpProblem::new(|_| 0.0, |x| DVector::zeros(x.len()), ProjectionSet::unbounded(1))
            .with_constraint(ConstraintBlock::new(FnMap::identity(1), ProjectionSet::point(dvector![0.0])));
        let blocks = vec![BlockState::new(1, 2.0)];
        assert_eq!(al_value(&p, &blocks, &dvector![3.0]).unwrap(), 9.0);
        assert_eq!(al_gradient(&p, &blocks, &dvector![3.0]).unwrap(), dvector![6.0]);
    }

    #[test]
    fn feasible_point_has_plain_gradient() {
        let p = NlpProblem::new(|x| x[0] * x[0], |x| dvector![2.0 * x[0]], ProjectionSet::unbounded(1))
            .with_constraint(ConstraintBlock::new(
                FnMap::identity(1),
                ProjectionSet::uniform_bounds(1, -1.0, 1.0).unwrap(),
            ));
        let blocks = vec![BlockState::new(1, 0.1)];
        assert_eq!(al_value(&p, &blocks, &dvector![0.5]).unwrap(), 0.25);
        assert_eq!(al_gradient(&p, &blocks, &dvector![0.5]).unwrap(), dvector![1.0]);
    }

    #[test]
    fn auxiliary_v_hand_example() {
        let set = ProjectionSet::point(dvector![0.0]);
        assert_eq!(auxiliary_v(&dvector![3.0], &set, &BlockState::new(1, 7.0)), 3.0);
        let inside = ProjectionSet::uniform_bounds(1, -1.0, 1.0).unwrap();
        assert_eq!(auxiliary_v(&dvector![0.3], &inside, &BlockState::new(1, 7.0)), 0.0);
    }

    #[test]
    fn point_constraint_solves() {
        let sol = alspg_solve(&point_problem(), &dvector![5.0], &AlspgOptions::default()).unwrap();
        assert!(sol.report.converged(), "{:?}", sol.report.termination);
        assert!((sol.x[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn penalties_only_grow_by_factor() {
        let opts = AlspgOptions::default();
        let sol = alspg_solve(&point_problem(), &dvector![5.0], &opts).unwrap();
        let ratio = (sol.blocks[0].rho / opts.rho0).log10();
        assert!((ratio - ratio.round()).abs() < 1e-9);
    }

    #[test]
    fn nan_objective_reports_failure() {
        let p = NlpProblem::new(|_| f64::NAN, |x| x.clone(), ProjectionSet::unbounded(1));
        let sol = alspg_solve(&p, &dvector![1.0], &AlspgOptions::default()).unwrap();
        assert_eq!(sol.report.termination, Termination::CallbackFailure);
        assert!(matches!(al_value(&p, &[], &dvector![1.0]), Err(AlError::NonFinite(_))));
    }

    #[test]
    fn inequality_reduction_examples() {
        let h = reduce_inequalities(vec![
            ScalarInequality::new(|x| x[0] - 1.0, |_| dvector![1.0]),
            ScalarInequality::new(|x| -x[0] - 1.0, |_| dvector![-1.0]),
        ]);
        assert_eq!(h.h(&dvector![0.0]), 0.0);
        assert_eq!(h.h(&dvector![3.0]), 2.0);
        assert_eq!(h.subgradient(&dvector![3.0]), dvector![1.0]);
        // boundary: g = 0 is inactive
        assert_eq!(h.subgradient(&dvector![1.0]), dvector![0.0]);
        let empty = reduce_inequalities(Vec::new());
        assert_eq!(empty.h(&dvector![42.0]), 0.0);
    }

    #[test]
    fn wrong_block_count_is_an_error() {
        let err = al_value(&point_problem(), &[], &dvector![1.0]).unwrap_err();
        assert_eq!(err, AlError::BlockCount { expected: 1, got: 0 });
    }
}
