//! Point-car motion planning among rotated rectangular obstacles, posed two
//! ways: each obstacle as a projection constraint on every position, or as a
//! scalar penetration sum `sum_t max(0, depth(p_t)) = 0`.

use nalgebra::{DMatrix, DVector};

use super::{DoubleIntegrator2D, ModelError};
use crate::projection::ProjectionSet;
use crate::shooting::{OcProblem, QuadraticCost, StateSelector, Trajectory, TrajectoryConstraint};

/// Rectangle of side `length` along its rotated x axis and `width` across.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectObstacle {
    pub center: [f64; 2],
    pub length: f64,
    pub width: f64,
    pub theta: f64,
}

impl RectObstacle {
    pub fn new(center: [f64; 2], length: f64, width: f64, theta: f64) -> Result<Self, ModelError> {
        if !(length > 0.0 && width > 0.0 && center.iter().chain([&theta]).all(|v| v.is_finite())) {
            return Err(ModelError::Invalid("obstacle sides must be positive and finite".into()));
        }
        Ok(Self {
            center,
            length,
            width,
            theta,
        })
    }

    /// The free space around the obstacle.
    pub fn outside_set(&self) -> ProjectionSet {
        ProjectionSet::rectangle(DVector::from_column_slice(&self.center), self.length, self.width, self.theta, true)
            .expect("validated obstacle")
    }

    fn matrix(&self) -> DMatrix<f64> {
        let (s, c) = self.theta.sin_cos();
        let k = self.length / self.width;
        DMatrix::from_row_slice(2, 2, &[c, s, -s * k, c * k])
    }

    /// Penetration `L/2 - ||A (p - c)||_inf`; positive inside, in units of the
    /// obstacle's long axis.
    pub fn depth(&self, p: &[f64]) -> f64 {
        let w = self.matrix() * DVector::from_vec(vec![p[0] - self.center[0], p[1] - self.center[1]]);
        0.5 * self.length - w.amax()
    }

    /// A subgradient of [`depth`](Self::depth) with respect to `p`.
    pub fn depth_gradient(&self, p: &[f64]) -> [f64; 2] {
        let a = self.matrix();
        let w = &a * DVector::from_vec(vec![p[0] - self.center[0], p[1] - self.center[1]]);
        let k = if w[0].abs() >= w[1].abs() { 0 } else { 1 };
        let s = if w[k] >= 0.0 { -1.0 } else { 1.0 };
        [s * a[(k, 0)], s * a[(k, 1)]]
    }
}

/// `sum_t max(0, depth(p_t))` for one obstacle over the whole trajectory.
#[derive(Debug, Clone)]
pub struct PenetrationSum {
    pub obstacle: RectObstacle,
}

impl TrajectoryConstraint for PenetrationSum {
    fn output_dim(&self) -> usize {
        1
    }

    fn value(&self, traj: &Trajectory) -> DVector<f64> {
        let m = traj.state_dim();
        let h = (0..traj.horizon())
            .map(|t| self.obstacle.depth(&traj.states.as_slice()[t * m..t * m + 2]).max(0.0))
            .sum();
        DVector::from_element(1, h)
    }

    fn accumulate_vjp(&self, traj: &Trajectory, w: &DVector<f64>, gx: &mut DVector<f64>, _gu: &mut DVector<f64>) {
        let m = traj.state_dim();
        for t in 0..traj.horizon() {
            let p = &traj.states.as_slice()[t * m..t * m + 2];
            if self.obstacle.depth(p) > 0.0 {
                let g = self.obstacle.depth_gradient(p);
                gx[t * m] += w[0] * g[0];
                gx[t * m + 1] += w[0] * g[1];
            }
        }
    }
}

/// How obstacles enter the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObstacleEncoding {
    /// One projection block per obstacle on the positions at every timestep.
    Projection,
    /// One scalar penetration-sum block per obstacle, constrained to zero.
    Penetration,
}

/// A planning scene for the double-integrator car.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleScene {
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub obstacles: Vec<RectObstacle>,
    pub horizon: usize,
    pub dt: f64,
    /// Componentwise acceleration bound.
    pub max_accel: f64,
    pub terminal_weight: f64,
    pub control_weight: f64,
}

impl ObstacleScene {
    /// Scene with the default weights `0.1` on the terminal state error and
    /// `1e-4` on the controls.
    pub fn new(start: [f64; 2], goal: [f64; 2], obstacles: Vec<RectObstacle>, horizon: usize) -> Self {
        Self {
            start,
            goal,
            obstacles,
            horizon,
            dt: 0.05,
            max_accel: 5.0,
            terminal_weight: 0.1,
            control_weight: 1e-4,
        }
    }

    pub fn model(&self) -> Result<DoubleIntegrator2D, ModelError> {
        DoubleIntegrator2D::new(self.dt)
    }

    pub fn initial_state(&self) -> DVector<f64> {
        DVector::from_vec(vec![self.start[0], self.start[1], 0.0, 0.0])
    }

    pub fn problem(&self, encoding: ObstacleEncoding) -> Result<OcProblem<DoubleIntegrator2D, QuadraticCost>, ModelError> {
        if self.horizon == 0 || !(self.max_accel > 0.0) {
            return Err(ModelError::Invalid("horizon and acceleration bound must be positive".into()));
        }
        let target = DVector::from_vec(vec![self.goal[0], self.goal[1], 0.0, 0.0]);
        let cost = QuadraticCost::terminal_only(target, self.terminal_weight, 2, self.control_weight);
        let bounds = ProjectionSet::uniform_bounds(2, -self.max_accel, self.max_accel).map_err(invalid)?;
        let domain = ProjectionSet::repeated(bounds, self.horizon);
        let mut problem = OcProblem::new(self.model()?, self.initial_state(), self.horizon, cost, domain).map_err(invalid)?;
        for obstacle in &self.obstacles {
            problem = match encoding {
                ObstacleEncoding::Projection => problem.with_state_constraint(
                    StateSelector::all(self.horizon, vec![0, 1]),
                    ProjectionSet::repeated(obstacle.outside_set(), self.horizon),
                ),
                ObstacleEncoding::Penetration => problem.with_path_constraint(
                    PenetrationSum { obstacle: *obstacle },
                    ProjectionSet::point(DVector::zeros(1)),
                ),
            }
            .map_err(invalid)?;
        }
        Ok(problem)
    }

    /// Largest penetration of any obstacle over the trajectory (`<= 0` when
    /// collision-free).
    pub fn max_depth(&self, traj: &Trajectory) -> f64 {
        let m = traj.state_dim();
        (0..traj.horizon())
            .flat_map(|t| {
                let p = &traj.states.as_slice()[t * m..t * m + 2];
                self.obstacles.iter().map(move |o| o.depth(p))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn invalid(e: impl std::fmt::Display) -> ModelError {
    ModelError::Invalid(e.to_string())
}
