use std::sync::Mutex;

use nalgebra::DVector;

use super::{jac_transpose_vec, linearize, rollout, Dynamics, ShootingError, Trajectory, TrajectoryCost};
use crate::al::{Evaluation, Problem};
use crate::projection::ProjectionSet;

/// Picks components of chosen states out of a trajectory. The output is
/// time-major: for each listed timestep (in `1..=T`), the listed components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSelector {
    pub timesteps: Vec<usize>,
    pub components: Vec<usize>,
}

impl StateSelector {
    pub fn new(timesteps: Vec<usize>, components: Vec<usize>) -> Self {
        Self { timesteps, components }
    }

    /// Every state `x_1..x_T`.
    pub fn all(horizon: usize, components: Vec<usize>) -> Self {
        Self::new((1..=horizon).collect(), components)
    }

    pub fn terminal(horizon: usize, components: Vec<usize>) -> Self {
        Self::new(vec![horizon], components)
    }

    pub fn output_dim(&self) -> usize {
        self.timesteps.len() * self.components.len()
    }

    fn validate(&self, horizon: usize, state_dim: usize) -> Result<(), ShootingError> {
        if let Some(&t) = self.timesteps.iter().find(|&&t| t == 0 || t > horizon) {
            return Err(ShootingError::Selector(format!("timestep {t} outside 1..={horizon}")));
        }
        if let Some(&c) = self.components.iter().find(|&&c| c >= state_dim) {
            return Err(ShootingError::Selector(format!(
                "component {c} outside state dimension {state_dim}"
            )));
        }
        Ok(())
    }

    pub fn gather(&self, traj: &Trajectory) -> DVector<f64> {
        let m = traj.state_dim();
        let k = self.components.len();
        let mut out = DVector::zeros(self.output_dim());
        for (i, &t) in self.timesteps.iter().enumerate() {
            for (j, &c) in self.components.iter().enumerate() {
                out[i * k + j] = traj.states[(t - 1) * m + c];
            }
        }
        out
    }

    /// Adds the selector's transpose applied to `w` into stacked state space.
    fn scatter_add(&self, w: &DVector<f64>, state_dim: usize, gx: &mut DVector<f64>) {
        let k = self.components.len();
        for (i, &t) in self.timesteps.iter().enumerate() {
            for (j, &c) in self.components.iter().enumerate() {
                gx[(t - 1) * state_dim + c] += w[i * k + j];
            }
        }
    }
}

/// Constraint on a whole trajectory, e.g. a collision measure.
pub trait TrajectoryConstraint: Send + Sync {
    fn output_dim(&self) -> usize;
    fn value(&self, traj: &Trajectory) -> DVector<f64>;
    /// Adds `(dh/dx)^T w` into stacked state space and `(dh/du)^T w` into
    /// stacked control space.
    fn accumulate_vjp(&self, traj: &Trajectory, w: &DVector<f64>, gx: &mut DVector<f64>, gu: &mut DVector<f64>);
}

/// Shooting optimal-control problem: minimize a trajectory cost over stacked
/// controls in a control set, subject to constraints on selected states and
/// on the whole trajectory.
pub struct OcProblem<D, C> {
    model: D,
    x0: DVector<f64>,
    horizon: usize,
    cost: C,
    domain: ProjectionSet,
    state_blocks: Vec<(StateSelector, ProjectionSet)>,
    path_blocks: Vec<(Box<dyn TrajectoryConstraint>, ProjectionSet)>,
    last: Mutex<Option<Trajectory>>,
}

impl<D: Dynamics, C: TrajectoryCost> OcProblem<D, C> {
    /// `domain` is a set on the stacked controls (dimension `T * n`).
    pub fn new(model: D, x0: DVector<f64>, horizon: usize, cost: C, domain: ProjectionSet) -> Result<Self, ShootingError> {
        let (m, n) = (model.state_dim(), model.control_dim());
        if x0.len() != m {
            return Err(ShootingError::Dimension {
                what: "initial state",
                expected: m,
                got: x0.len(),
            });
        }
        if domain.dim() != horizon * n {
            return Err(ShootingError::Dimension {
                what: "control domain",
                expected: horizon * n,
                got: domain.dim(),
            });
        }
        Ok(Self {
            model,
            x0,
            horizon,
            cost,
            domain,
            state_blocks: Vec::new(),
            path_blocks: Vec::new(),
            last: Mutex::new(None),
        })
    }

    /// Adds `selector(F(x0, u)) in set`.
    pub fn with_state_constraint(mut self, selector: StateSelector, set: ProjectionSet) -> Result<Self, ShootingError> {
        selector.validate(self.horizon, self.model.state_dim())?;
        if set.dim() != selector.output_dim() {
            return Err(ShootingError::Dimension {
                what: "state constraint set",
                expected: selector.output_dim(),
                got: set.dim(),
            });
        }
        self.state_blocks.push((selector, set));
        Ok(self)
    }

    /// Adds `h(trajectory) in set`.
    pub fn with_path_constraint(
        mut self,
        constraint: impl TrajectoryConstraint + 'static,
        set: ProjectionSet,
    ) -> Result<Self, ShootingError> {
        if set.dim() != constraint.output_dim() {
            return Err(ShootingError::Dimension {
                what: "path constraint set",
                expected: constraint.output_dim(),
                got: set.dim(),
            });
        }
        self.path_blocks.push((Box::new(constraint), set));
        Ok(self)
    }

    pub fn model(&self) -> &D {
        &self.model
    }

    pub fn cost(&self) -> &C {
        &self.cost
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn rollout(&self, controls: &DVector<f64>) -> Result<Trajectory, ShootingError> {
        rollout(&self.model, &self.x0, controls)
    }

    /// Re-targets the problem at a new initial state (receding horizon).
    pub fn set_initial_state(&mut self, x0: DVector<f64>) {
        assert_eq!(x0.len(), self.model.state_dim(), "initial state dimension");
        self.x0 = x0;
        *self.last.lock().expect("cache lock") = None;
    }

    fn cached_rollout(&self, controls: &DVector<f64>) -> Result<Trajectory, ShootingError> {
        let mut last = self.last.lock().expect("cache lock");
        if let Some(traj) = last.as_ref() {
            if &traj.controls == controls {
                return Ok(traj.clone());
            }
        }
        let traj = self.rollout(controls)?;
        *last = Some(traj.clone());
        Ok(traj)
    }

    fn nan_evaluation(&self) -> Evaluation {
        Evaluation {
            objective: f64::NAN,
            constraints: (0..self.num_blocks())
                .map(|i| DVector::from_element(self.block_set(i).dim(), f64::NAN))
                .collect(),
        }
    }
}

impl<D: Dynamics, C: TrajectoryCost> Problem for OcProblem<D, C> {
    fn dim(&self) -> usize {
        self.horizon * self.model.control_dim()
    }

    fn domain(&self) -> &ProjectionSet {
        &self.domain
    }

    fn num_blocks(&self) -> usize {
        self.state_blocks.len() + self.path_blocks.len()
    }

    fn block_set(&self, i: usize) -> &ProjectionSet {
        match self.state_blocks.get(i) {
            Some((_, set)) => set,
            None => &self.path_blocks[i - self.state_blocks.len()].1,
        }
    }

    fn evaluate(&self, u: &DVector<f64>) -> Evaluation {
        let Ok(traj) = self.cached_rollout(u) else {
            return self.nan_evaluation();
        };
        let mut constraints: Vec<DVector<f64>> = self.state_blocks.iter().map(|(s, _)| s.gather(&traj)).collect();
        constraints.extend(self.path_blocks.iter().map(|(h, _)| h.value(&traj)));
        Evaluation {
            objective: self.cost.total(&traj),
            constraints,
        }
    }

    fn gradient(&self, u: &DVector<f64>, weights: &[DVector<f64>]) -> DVector<f64> {
        let Ok(traj) = self.cached_rollout(u) else {
            return DVector::from_element(u.len(), f64::NAN);
        };
        let m = self.model.state_dim();
        let (mut gx, mut gu) = self.cost.stacked_gradients(&traj);
        let (state_w, path_w) = weights.split_at(self.state_blocks.len().min(weights.len()));
        for ((selector, _), w) in self.state_blocks.iter().zip(state_w) {
            selector.scatter_add(w, m, &mut gx);
        }
        for ((h, _), w) in self.path_blocks.iter().zip(path_w) {
            if w.iter().any(|&v| v != 0.0) {
                h.accumulate_vjp(&traj, w, &mut gx, &mut gu);
            }
        }
        let lin = linearize(&self.model, &traj);
        jac_transpose_vec(&lin, &gx).expect("stacked dimensions agree") + gu
    }
}

/// Builds a problem with per-step box control bounds and any number of
/// state constraints.
pub fn build_oc_problem<D: Dynamics, C: TrajectoryCost>(
    model: D,
    x0: DVector<f64>,
    horizon: usize,
    cost: C,
    control_lower: DVector<f64>,
    control_upper: DVector<f64>,
    state_constraints: Vec<(StateSelector, ProjectionSet)>,
) -> Result<OcProblem<D, C>, ShootingError> {
    let step = ProjectionSet::bounds(control_lower, control_upper)?;
    let domain = ProjectionSet::repeated(step, horizon);
    let mut problem = OcProblem::new(model, x0, horizon, cost, domain)?;
    for (selector, set) in state_constraints {
        problem = problem.with_state_constraint(selector, set)?;
    }
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::QuadraticCost;
    use nalgebra::{dvector, DMatrix};

    /// Planar double integrator with unit step, position/velocity state.
    struct Di;

    impl Dynamics for Di {
        fn state_dim(&self) -> usize {
            2
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn dt(&self) -> f64 {
            1.0
        }
        fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
            dvector![x[0] + x[1], x[1] + u[0]]
        }
        fn jacobians(&self, _: &DVector<f64>, _: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
            (
                DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
                DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            )
        }
    }

    fn problem(horizon: usize) -> OcProblem<Di, QuadraticCost> {
        let cost = QuadraticCost::new(dvector![1.0, 0.0], dvector![0.1, 0.0], dvector![1.0, 1.0], dvector![0.01]);
        build_oc_problem(
            Di,
            dvector![0.0, 0.0],
            horizon,
            cost,
            dvector![-1.0],
            dvector![1.0],
            vec![(
                StateSelector::all(horizon, vec![1]),
                ProjectionSet::repeated(ProjectionSet::uniform_bounds(1, -0.5, 0.5).unwrap(), horizon),
            )],
        )
        .unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = problem(5);
        let u = dvector![0.3, -0.2, 0.5, 0.1, -0.4];
        let w = vec![DVector::from_fn(5, |i, _| 0.1 * i as f64 - 0.2)];
        let g = p.gradient(&u, &w);
        let h = 1e-6;
        let merit = |u: &DVector<f64>| {
            let e = p.evaluate(u);
            e.objective + e.constraints[0].dot(&w[0])
        };
        for i in 0..5 {
            let mut up = u.clone();
            up[i] += h;
            let mut um = u.clone();
            um[i] -= h;
            let fd = (merit(&up) - merit(&um)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7, "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn selectors_are_validated() {
        let p = problem(3);
        let bad = p.with_state_constraint(StateSelector::new(vec![0], vec![0]), ProjectionSet::unbounded(1));
        assert!(matches!(bad, Err(ShootingError::Selector(_))));
        let p = problem(3);
        let bad = p.with_state_constraint(StateSelector::terminal(3, vec![0, 1]), ProjectionSet::unbounded(1));
        assert!(matches!(bad, Err(ShootingError::Dimension { .. })));
    }

    #[test]
    fn selector_gather_is_time_major() {
        let p = problem(3);
        let traj = p.rollout(&dvector![1.0, 0.0, 0.0]).unwrap();
        // states: x1 = (0, 1), x2 = (1, 1), x3 = (2, 1)
        let s = StateSelector::new(vec![3, 1], vec![1, 0]);
        assert_eq!(s.gather(&traj), dvector![1.0, 2.0, 1.0, 0.0]);
    }
}
