//! Direct-shooting optimal control.
//!
//! States are eliminated through the rollout map `F(x0, u)`, so the decision
//! variable is the stacked control sequence `u = [u_0; ...; u_{T-1}]` alone.
//! Stacked vectors are time-major: block `t` of the state vector is
//! `x_{t+1}`, block `t` of the control vector is `u_t`.

mod cost;
mod mpc;
mod problem;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use cost::{wrap_angle, QuadraticCost, TrajectoryCost};
pub use mpc::{mpc_loop, AlspgHorizonSolver, HorizonSolve, HorizonSolver, MpcLog, MpcStep};
pub use problem::{build_oc_problem, OcProblem, StateSelector, TrajectoryConstraint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShootingError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("rollout produced a non-finite state at timestep {0}")]
    NonFinite(usize),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("selector out of range: {0}")]
    Selector(String),
    #[error(transparent)]
    Projection(#[from] crate::projection::ProjectionError),
}

/// Discrete-time dynamics `x_{t+1} = f(x_t, u_t)`.
pub trait Dynamics: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn dt(&self) -> f64;
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    /// `(df/dx, df/du)` at `(x, u)`.
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>);
}

impl<D: Dynamics + ?Sized> Dynamics for Box<D> {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn control_dim(&self) -> usize {
        (**self).control_dim()
    }
    fn dt(&self) -> f64 {
        (**self).dt()
    }
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (**self).step(x, u)
    }
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (**self).jacobians(x, u)
    }
}

impl<D: Dynamics + ?Sized> Dynamics for &D {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn control_dim(&self) -> usize {
        (**self).control_dim()
    }
    fn dt(&self) -> f64 {
        (**self).dt()
    }
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (**self).step(x, u)
    }
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (**self).jacobians(x, u)
    }
}

/// Horizon-`T` state and control sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x0: DVector<f64>,
    /// `[x_1; ...; x_T]`
    pub states: DVector<f64>,
    /// `[u_0; ...; u_{T-1}]`
    pub controls: DVector<f64>,
    state_dim: usize,
    control_dim: usize,
}

impl Trajectory {
    pub(crate) fn from_parts(
        x0: DVector<f64>,
        states: DVector<f64>,
        controls: DVector<f64>,
        state_dim: usize,
        control_dim: usize,
    ) -> Self {
        Self {
            x0,
            states,
            controls,
            state_dim,
            control_dim,
        }
    }

    pub fn horizon(&self) -> usize {
        self.controls.len() / self.control_dim
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    /// `x_t` for `t` in `0..=T`.
    pub fn state(&self, t: usize) -> DVector<f64> {
        if t == 0 {
            self.x0.clone()
        } else {
            self.states.rows((t - 1) * self.state_dim, self.state_dim).into_owned()
        }
    }

    /// `u_t` for `t` in `0..T`.
    pub fn control(&self, t: usize) -> DVector<f64> {
        self.controls.rows(t * self.control_dim, self.control_dim).into_owned()
    }

    pub fn final_state(&self) -> DVector<f64> {
        self.state(self.horizon())
    }
}

/// Forward rollout `x_{t+1} = f(x_t, u_t)` from `x0`.
pub fn rollout<D: Dynamics + ?Sized>(
    model: &D,
    x0: &DVector<f64>,
    controls: &DVector<f64>,
) -> Result<Trajectory, ShootingError> {
    let (m, n) = (model.state_dim(), model.control_dim());
    if x0.len() != m {
        return Err(ShootingError::Dimension {
            what: "initial state",
            expected: m,
            got: x0.len(),
        });
    }
    if controls.len() % n != 0 {
        return Err(ShootingError::Dimension {
            what: "stacked controls (multiple of control dim)",
            expected: n,
            got: controls.len(),
        });
    }
    let horizon = controls.len() / n;
    let mut states = DVector::zeros(horizon * m);
    let mut x = x0.clone();
    for t in 0..horizon {
        let u = controls.rows(t * n, n).into_owned();
        x = model.step(&x, &u);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(ShootingError::NonFinite(t + 1));
        }
        states.rows_mut(t * m, m).copy_from(&x);
    }
    Ok(Trajectory {
        x0: x0.clone(),
        states,
        controls: controls.clone(),
        state_dim: m,
        control_dim: n,
    })
}

/// `A_t = df/dx(x_t, u_t)` and `B_t = df/du(x_t, u_t)` along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedDynamics {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
}

impl LinearizedDynamics {
    pub fn horizon(&self) -> usize {
        self.a.len()
    }
}

pub fn linearize<D: Dynamics + ?Sized>(model: &D, traj: &Trajectory) -> LinearizedDynamics {
    let horizon = traj.horizon();
    let mut a = Vec::with_capacity(horizon);
    let mut b = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let (at, bt) = model.jacobians(&traj.state(t), &traj.control(t));
        a.push(at);
        b.push(bt);
    }
    LinearizedDynamics { a, b }
}

/// Matrix-free `(dF/du)^T y` for stacked `y = [y_0; ...; y_{T-1}]` (block `t`
/// paired with `x_{t+1}`).
///
/// Backward recursion `l_{T-1} = y_{T-1}`, `l_t = y_t + A_{t+1}^T l_{t+1}`,
/// `z_t = B_t^T l_t`; O(T (m^2 + mn)) time and O(m) extra memory.
pub fn jac_transpose_vec(lin: &LinearizedDynamics, y: &DVector<f64>) -> Result<DVector<f64>, ShootingError> {
    let horizon = lin.horizon();
    if horizon == 0 {
        return Ok(DVector::zeros(0));
    }
    if lin.b.len() != horizon {
        return Err(ShootingError::Dimension {
            what: "B sequence length",
            expected: horizon,
            got: lin.b.len(),
        });
    }
    let m = lin.a[0].nrows();
    let n = lin.b[0].ncols();
    if y.len() != horizon * m {
        return Err(ShootingError::Dimension {
            what: "stacked state-space vector",
            expected: horizon * m,
            got: y.len(),
        });
    }
    let mut z = DVector::zeros(horizon * n);
    let mut carry = y.rows((horizon - 1) * m, m).into_owned();
    let mut zt = DVector::zeros(n);
    let mut next = DVector::zeros(m);
    for t in (0..horizon).rev() {
        if t + 1 < horizon {
            lin.a[t + 1].tr_mul_to(&carry, &mut next);
            next += y.rows(t * m, m);
            std::mem::swap(&mut carry, &mut next);
        }
        lin.b[t].tr_mul_to(&carry, &mut zt);
        z.rows_mut(t * n, n).copy_from(&zt);
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    /// x_{t+1} = A x_t + B u_t with constant matrices.
    struct Lti {
        a: DMatrix<f64>,
        b: DMatrix<f64>,
    }

    impl Dynamics for Lti {
        fn state_dim(&self) -> usize {
            self.a.nrows()
        }
        fn control_dim(&self) -> usize {
            self.b.ncols()
        }
        fn dt(&self) -> f64 {
            1.0
        }
        fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
            &self.a * x + &self.b * u
        }
        fn jacobians(&self, _: &DVector<f64>, _: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
            (self.a.clone(), self.b.clone())
        }
    }

    #[test]
    fn single_integrator_ramp() {
        let model = Lti {
            a: DMatrix::identity(1, 1),
            b: DMatrix::from_element(1, 1, 0.1),
        };
        let traj = rollout(&model, &dvector![0.0], &DVector::from_element(5, 2.0)).unwrap();
        for t in 1..=5 {
            assert!((traj.state(t)[0] - 0.2 * t as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn single_block_recursion() {
        let lin = LinearizedDynamics {
            a: vec![DMatrix::from_element(2, 2, 7.0)],
            b: vec![DMatrix::from_row_slice(2, 1, &[1.0, 2.0])],
        };
        let z = jac_transpose_vec(&lin, &dvector![3.0, 4.0]).unwrap();
        assert_eq!(z, dvector![11.0]);
    }

    #[test]
    fn identity_dynamics_partial_sums() {
        let horizon = 6;
        let lin = LinearizedDynamics {
            a: vec![DMatrix::identity(2, 2); horizon],
            b: vec![DMatrix::identity(2, 2); horizon],
        };
        let y = DVector::from_fn(2 * horizon, |i, _| if i % 2 == 0 { 1.0 } else { 0.0 });
        let z = jac_transpose_vec(&lin, &y).unwrap();
        for t in 0..horizon {
            assert_eq!(z[2 * t], (horizon - t) as f64);
            assert_eq!(z[2 * t + 1], 0.0);
        }
    }

    #[test]
    fn non_finite_rollout_names_timestep() {
        let model = Lti {
            a: DMatrix::from_element(1, 1, 1e300),
            b: DMatrix::zeros(1, 1),
        };
        let err = rollout(&model, &dvector![1e300], &DVector::zeros(3)).unwrap_err();
        assert_eq!(err, ShootingError::NonFinite(1));
    }

    #[test]
    fn recursion_dimension_mismatch() {
        let lin = LinearizedDynamics {
            a: vec![DMatrix::identity(2, 2); 3],
            b: vec![DMatrix::identity(2, 1); 3],
        };
        assert!(jac_transpose_vec(&lin, &DVector::zeros(5)).is_err());
    }
}
