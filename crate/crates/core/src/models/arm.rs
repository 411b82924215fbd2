use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::ModelError;
use crate::projection::ProjectionSet;
use crate::shooting::{Dynamics, Trajectory, TrajectoryConstraint, TrajectoryCost};

/// Planar serial chain with revolute joints, base at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarArm {
    link_lengths: Vec<f64>,
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl PlanarArm {
    /// Joint limits default to `[-pi, pi]`.
    pub fn new(link_lengths: Vec<f64>) -> Result<Self, ModelError> {
        let n = link_lengths.len();
        Self::with_limits(link_lengths, DVector::from_element(n, -PI), DVector::from_element(n, PI))
    }

    pub fn with_limits(link_lengths: Vec<f64>, lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, ModelError> {
        if link_lengths.is_empty() {
            return Err(ModelError::Invalid("arm needs at least one link".into()));
        }
        if link_lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(ModelError::Invalid("link lengths must be positive".into()));
        }
        if lower.len() != link_lengths.len() || upper.len() != link_lengths.len() {
            return Err(ModelError::Invalid("joint limits must match the number of links".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(ModelError::Invalid("joint limits need lower <= upper".into()));
        }
        Ok(Self {
            link_lengths,
            lower,
            upper,
        })
    }

    /// Three unit links.
    pub fn three_link() -> Self {
        Self::new(vec![1.0; 3]).expect("valid default arm")
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    pub fn joint_limits(&self) -> ProjectionSet {
        ProjectionSet::bounds(self.lower.clone(), self.upper.clone()).expect("validated limits")
    }

    /// Base, every joint and the end effector.
    pub fn link_positions(&self, q: &DVector<f64>) -> Vec<[f64; 2]> {
        let mut pts = Vec::with_capacity(self.dof() + 1);
        let (mut x, mut y, mut angle) = (0.0, 0.0, 0.0);
        pts.push([x, y]);
        for (l, qi) in self.link_lengths.iter().zip(q.iter()) {
            angle += qi;
            x += l * angle.cos();
            y += l * angle.sin();
            pts.push([x, y]);
        }
        pts
    }

    /// End-effector position.
    pub fn fk(&self, q: &DVector<f64>) -> DVector<f64> {
        let [x, y] = *self.link_positions(q).last().expect("nonempty chain");
        DVector::from_vec(vec![x, y])
    }

    /// `2 x N` positional Jacobian of [`fk`](Self::fk).
    pub fn jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dof();
        let mut angles = Vec::with_capacity(n);
        let mut acc = 0.0;
        for qi in q.iter() {
            acc += qi;
            angles.push(acc);
        }
        let mut jac = DMatrix::zeros(2, n);
        // column j sums links j.. since joint j rotates all outboard links
        let (mut sx, mut sy) = (0.0, 0.0);
        for j in (0..n).rev() {
            sx += self.link_lengths[j] * angles[j].cos();
            sy += self.link_lengths[j] * angles[j].sin();
            jac[(0, j)] = -sy;
            jac[(1, j)] = sx;
        }
        jac
    }
}

/// Joint-velocity kinematics `q_{t+1} = q_t + dt u_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmKinematics {
    pub arm: PlanarArm,
    pub dt: f64,
}

impl ArmKinematics {
    pub fn new(arm: PlanarArm, dt: f64) -> Result<Self, ModelError> {
        if !(dt > 0.0) {
            return Err(ModelError::Invalid("dt must be positive".into()));
        }
        Ok(Self { arm, dt })
    }
}

impl Dynamics for ArmKinematics {
    fn state_dim(&self) -> usize {
        self.arm.dof()
    }

    fn control_dim(&self) -> usize {
        self.arm.dof()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        x + u * self.dt
    }

    fn jacobians(&self, _: &DVector<f64>, _: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.arm.dof();
        (DMatrix::identity(n, n), DMatrix::identity(n, n) * self.dt)
    }
}

/// `w_T ||fk(q_T) - goal||^2 + w_r sum_{t<T} ||fk(q_t) - goal||^2 + w_u sum_t ||u_t||^2`.
/// The state Hessian is the Gauss-Newton `2 w J^T J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachingCost {
    pub arm: PlanarArm,
    pub goal: DVector<f64>,
    pub terminal_weight: f64,
    pub running_weight: f64,
    pub control_weight: f64,
}

impl ReachingCost {
    pub fn new(arm: PlanarArm, goal: DVector<f64>, terminal_weight: f64, control_weight: f64) -> Self {
        Self {
            arm,
            goal,
            terminal_weight,
            running_weight: 0.0,
            control_weight,
        }
    }

    fn weight(&self, terminal: bool) -> f64 {
        if terminal {
            self.terminal_weight
        } else {
            self.running_weight
        }
    }
}

impl TrajectoryCost for ReachingCost {
    fn state_value(&self, q: &DVector<f64>, terminal: bool) -> f64 {
        let w = self.weight(terminal);
        if w == 0.0 {
            return 0.0;
        }
        w * (self.arm.fk(q) - &self.goal).norm_squared()
    }

    fn state_gradient(&self, q: &DVector<f64>, terminal: bool) -> DVector<f64> {
        let w = self.weight(terminal);
        if w == 0.0 {
            return DVector::zeros(q.len());
        }
        self.arm.jacobian(q).tr_mul(&(self.arm.fk(q) - &self.goal)) * (2.0 * w)
    }

    fn state_hessian(&self, q: &DVector<f64>, terminal: bool) -> DMatrix<f64> {
        let w = self.weight(terminal);
        if w == 0.0 {
            return DMatrix::zeros(q.len(), q.len());
        }
        let j = self.arm.jacobian(q);
        j.tr_mul(&j) * (2.0 * w)
    }

    fn control_value(&self, u: &DVector<f64>) -> f64 {
        self.control_weight * u.norm_squared()
    }

    fn control_gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        u * (2.0 * self.control_weight)
    }

    fn control_hessian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(u.len(), u.len()) * (2.0 * self.control_weight)
    }
}

/// Stacked end-effector positions `[fk(q_t)]` at chosen timesteps, for task-space
/// path constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct EndEffectorPath {
    pub arm: PlanarArm,
    pub timesteps: Vec<usize>,
}

impl TrajectoryConstraint for EndEffectorPath {
    fn output_dim(&self) -> usize {
        2 * self.timesteps.len()
    }

    fn value(&self, traj: &Trajectory) -> DVector<f64> {
        let mut out = DVector::zeros(self.output_dim());
        for (i, &t) in self.timesteps.iter().enumerate() {
            out.rows_mut(2 * i, 2).copy_from(&self.arm.fk(&traj.state(t)));
        }
        out
    }

    fn accumulate_vjp(&self, traj: &Trajectory, w: &DVector<f64>, gx: &mut DVector<f64>, _: &mut DVector<f64>) {
        let m = traj.state_dim();
        for (i, &t) in self.timesteps.iter().enumerate() {
            let wi = w.rows(2 * i, 2);
            if wi.iter().all(|&v| v == 0.0) {
                continue;
            }
            let jt = self.arm.jacobian(&traj.state(t)).tr_mul(&wi);
            let mut block = gx.rows_mut((t - 1) * m, m);
            block += jt;
        }
    }
}
