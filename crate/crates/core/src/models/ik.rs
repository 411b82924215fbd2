use std::mem::{discriminant, Discriminant};

use nalgebra::DVector;

use super::{ChanceConstraintMap, ModelError, PlanarArm};
use crate::al::{
    alspg_solve, alspg_solve_warm, block_residual, AlspgOptions, BlockState, ConstraintBlock, ConstraintMap, FnMap,
    InequalitySum, NlpProblem,
};
use crate::projection::ProjectionSet;
use crate::report::{SolveReport, Termination};

#[derive(Debug, Clone)]
pub struct IkSolution {
    pub q: DVector<f64>,
    /// Task-space residual `||f(q) - P(f(q))||_inf` of the first block.
    pub residual: f64,
    pub report: SolveReport,
}

/// `min_{q in limits} ||q - q0||^2  s.t.  fk(q) in task_set [, h(q) = 0]`.
pub fn ik_problem(
    arm: &PlanarArm,
    q0: &DVector<f64>,
    task_set: ProjectionSet,
    extra_h: Option<InequalitySum>,
) -> Result<NlpProblem, ModelError> {
    check_q(arm, q0)?;
    if task_set.dim() != 2 {
        return Err(ModelError::Invalid(format!("task set must be planar, got dimension {}", task_set.dim())));
    }
    let anchor = q0.clone();
    let anchor_grad = q0.clone();
    let (fk_arm, jac_arm) = (arm.clone(), arm.clone());
    let task = FnMap::new(2, move |q| fk_arm.fk(q), move |q, y| jac_arm.jacobian(q).tr_mul(y));
    let mut problem = NlpProblem::new(
        move |q| (q - &anchor).norm_squared(),
        move |q| (q - &anchor_grad) * 2.0,
        arm.joint_limits(),
    )
    .with_constraint(ConstraintBlock::new(task, task_set));
    if let Some(h) = extra_h {
        problem.push_constraint(ConstraintBlock::new(h, ProjectionSet::point(DVector::zeros(1))));
    }
    Ok(problem)
}

fn check_q(arm: &PlanarArm, q: &DVector<f64>) -> Result<(), ModelError> {
    if q.len() != arm.dof() {
        return Err(ModelError::Invalid(format!("expected {} joints, got {}", arm.dof(), q.len())));
    }
    if !arm.joint_limits().contains(q).unwrap_or(false) {
        return Err(ModelError::Invalid("configuration outside the joint limits".into()));
    }
    Ok(())
}

/// Solves the constrained IK problem from `q0`. An unreachable task ends in
/// [`Termination::Stagnation`] with the best iterate.
pub fn constrained_ik(
    arm: &PlanarArm,
    q0: &DVector<f64>,
    task_set: ProjectionSet,
    extra_h: Option<InequalitySum>,
    opts: &AlspgOptions,
) -> Result<IkSolution, ModelError> {
    let set = task_set.clone();
    let problem = ik_problem(arm, q0, task_set, extra_h)?;
    let sol = alspg_solve(&problem, q0, opts)?;
    Ok(IkSolution {
        residual: block_residual(&arm.fk(&sol.x), &set),
        q: sol.x,
        report: sol.report,
    })
}

/// `min_{q in limits} ||q - q0||^2  s.t.  P(a^T fk(q) <= 0) >= eta`.
pub fn robust_ik(
    arm: &PlanarArm,
    q0: &DVector<f64>,
    map: &ChanceConstraintMap,
    opts: &AlspgOptions,
) -> Result<IkSolution, ModelError> {
    check_q(arm, q0)?;
    let anchor = q0.clone();
    let anchor_grad = q0.clone();
    let problem = NlpProblem::new(
        move |q| (q - &anchor).norm_squared(),
        move |q| (q - &anchor_grad) * 2.0,
        arm.joint_limits(),
    )
    .with_constraint(ConstraintBlock::new(map.clone(), ProjectionSet::SecondOrderCone { dim: 3 }));
    let sol = alspg_solve(&problem, q0, opts)?;
    Ok(IkSolution {
        residual: block_residual(&map.value(&sol.x), &ProjectionSet::SecondOrderCone { dim: 3 }),
        q: sol.x,
        report: sol.report,
    })
}

/// Fraction of slope samples `a` with `a^T fk(q) <= 0`.
pub fn satisfaction_rate(arm: &PlanarArm, q: &DVector<f64>, samples: impl IntoIterator<Item = DVector<f64>>) -> f64 {
    let p = arm.fk(q);
    let (mut ok, mut total) = (0usize, 0usize);
    for a in samples {
        total += 1;
        if a.dot(&p) <= 0.0 {
            ok += 1;
        }
    }
    if total == 0 {
        f64::NAN
    } else {
        ok as f64 / total as f64
    }
}

/// One reply of the reactive IK loop.
#[derive(Debug, Clone)]
pub struct IkStep {
    pub q: DVector<f64>,
    pub residual: f64,
    pub report: SolveReport,
}

/// Reactive IK: each call runs a few outer iterations anchored at the current
/// configuration, keeping multipliers and penalties between calls as long as
/// the kind of task set stays the same.
#[derive(Debug, Clone)]
pub struct IkSession {
    arm: PlanarArm,
    pub options: AlspgOptions,
    blocks: Option<Vec<BlockState>>,
    gamma: Option<f64>,
    variant: Option<Discriminant<ProjectionSet>>,
}

impl IkSession {
    pub fn new(arm: PlanarArm) -> Self {
        Self {
            arm,
            options: AlspgOptions::default(),
            blocks: None,
            gamma: None,
            variant: None,
        }
    }

    pub fn arm(&self) -> &PlanarArm {
        &self.arm
    }

    /// Forgets multipliers and stepsize.
    pub fn reset(&mut self) {
        self.blocks = None;
        self.gamma = None;
        self.variant = None;
    }

    /// Runs at most `budget` outer iterations warm-started at `q_current`.
    pub fn step(&mut self, q_current: &DVector<f64>, task_set: &ProjectionSet, budget: usize) -> Result<IkStep, ModelError> {
        if budget == 0 {
            return Err(ModelError::Invalid("step budget must be at least one outer iteration".into()));
        }
        let variant = discriminant(task_set);
        if self.variant != Some(variant) {
            self.reset();
            self.variant = Some(variant);
        }
        let problem = ik_problem(&self.arm, q_current, task_set.clone(), None)?;
        let opts = AlspgOptions {
            max_outer: budget,
            ..self.options.clone()
        };
        let sol = alspg_solve_warm(&problem, q_current, self.blocks.take(), self.gamma, &opts)?;
        if sol.report.termination != Termination::CallbackFailure {
            self.blocks = Some(sol.blocks);
            self.gamma = Some(sol.gamma);
        }
        Ok(IkStep {
            residual: block_residual(&self.arm.fk(&sol.x), task_set),
            q: sol.x,
            report: sol.report,
        })
    }
}

/// Stateless single reactive step (fresh multipliers).
pub fn closed_loop_ik_step(
    arm: &PlanarArm,
    q_current: &DVector<f64>,
    task_set: &ProjectionSet,
    step_budget: usize,
) -> Result<DVector<f64>, ModelError> {
    IkSession::new(arm.clone()).step(q_current, task_set, step_budget).map(|s| s.q)
}
