use nalgebra::{DMatrix, DVector};

use super::Trajectory;

/// Time-separable trajectory cost
/// `sum_{t=1}^{T} l_x(x_t, t == T) + sum_{t=0}^{T-1} l_u(u_t)`.
///
/// Hessians may be Gauss-Newton approximations; only iLQR uses them.
pub trait TrajectoryCost: Send + Sync {
    fn state_value(&self, x: &DVector<f64>, terminal: bool) -> f64;
    fn state_gradient(&self, x: &DVector<f64>, terminal: bool) -> DVector<f64>;
    fn state_hessian(&self, x: &DVector<f64>, terminal: bool) -> DMatrix<f64>;
    fn control_value(&self, u: &DVector<f64>) -> f64;
    fn control_gradient(&self, u: &DVector<f64>) -> DVector<f64>;
    fn control_hessian(&self, u: &DVector<f64>) -> DMatrix<f64>;

    fn total(&self, traj: &Trajectory) -> f64 {
        let horizon = traj.horizon();
        let mut c = 0.0;
        for t in 0..horizon {
            c += self.control_value(&traj.control(t));
            c += self.state_value(&traj.state(t + 1), t + 1 == horizon);
        }
        c
    }

    /// Stacked `(dc/dx_{1..T}, dc/du_{0..T-1})`.
    fn stacked_gradients(&self, traj: &Trajectory) -> (DVector<f64>, DVector<f64>) {
        let (m, n, horizon) = (traj.state_dim(), traj.control_dim(), traj.horizon());
        let mut gx = DVector::zeros(m * horizon);
        let mut gu = DVector::zeros(n * horizon);
        for t in 0..horizon {
            gu.rows_mut(t * n, n).copy_from(&self.control_gradient(&traj.control(t)));
            gx.rows_mut(t * m, m)
                .copy_from(&self.state_gradient(&traj.state(t + 1), t + 1 == horizon));
        }
        (gx, gu)
    }
}

impl<C: TrajectoryCost + ?Sized> TrajectoryCost for Box<C> {
    fn state_value(&self, x: &DVector<f64>, terminal: bool) -> f64 {
        (**self).state_value(x, terminal)
    }
    fn state_gradient(&self, x: &DVector<f64>, terminal: bool) -> DVector<f64> {
        (**self).state_gradient(x, terminal)
    }
    fn state_hessian(&self, x: &DVector<f64>, terminal: bool) -> DMatrix<f64> {
        (**self).state_hessian(x, terminal)
    }
    fn control_value(&self, u: &DVector<f64>) -> f64 {
        (**self).control_value(u)
    }
    fn control_gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        (**self).control_gradient(u)
    }
    fn control_hessian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        (**self).control_hessian(u)
    }
}

/// Diagonal quadratic cost
/// `sum_t (x_t - x*)' Q (x_t - x*) + (x_T - x*)' Q_f (x_T - x*) + sum_t u_t' R u_t`
/// (running state terms for `t < T`). Listed components are compared as
/// angles, with the difference wrapped to `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    pub target: DVector<f64>,
    pub running: DVector<f64>,
    pub terminal: DVector<f64>,
    pub control: DVector<f64>,
    pub angle_components: Vec<usize>,
}

impl QuadraticCost {
    pub fn new(target: DVector<f64>, running: DVector<f64>, terminal: DVector<f64>, control: DVector<f64>) -> Self {
        Self {
            target,
            running,
            terminal,
            control,
            angle_components: Vec::new(),
        }
    }

    /// Terminal-only state cost `w_x ||x_T - x*||^2 + w_u sum ||u_t||^2`.
    pub fn terminal_only(target: DVector<f64>, w_x: f64, control_dim: usize, w_u: f64) -> Self {
        let m = target.len();
        Self::new(
            target,
            DVector::zeros(m),
            DVector::from_element(m, w_x),
            DVector::from_element(control_dim, w_u),
        )
    }

    pub fn with_angles(mut self, components: Vec<usize>) -> Self {
        self.angle_components = components;
        self
    }

    fn error(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut e = x - &self.target;
        for &i in &self.angle_components {
            e[i] = wrap_angle(e[i]);
        }
        e
    }

    fn weights(&self, terminal: bool) -> &DVector<f64> {
        if terminal {
            &self.terminal
        } else {
            &self.running
        }
    }
}

/// Wraps to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

impl TrajectoryCost for QuadraticCost {
    fn state_value(&self, x: &DVector<f64>, terminal: bool) -> f64 {
        let e = self.error(x);
        e.component_mul(&e).dot(self.weights(terminal))
    }

    fn state_gradient(&self, x: &DVector<f64>, terminal: bool) -> DVector<f64> {
        self.error(x).component_mul(self.weights(terminal)) * 2.0
    }

    fn state_hessian(&self, _: &DVector<f64>, terminal: bool) -> DMatrix<f64> {
        DMatrix::from_diagonal(&(self.weights(terminal) * 2.0))
    }

    fn control_value(&self, u: &DVector<f64>) -> f64 {
        u.component_mul(u).dot(&self.control)
    }

    fn control_gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        u.component_mul(&self.control) * 2.0
    }

    fn control_hessian(&self, _: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&(&self.control * 2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use std::f64::consts::PI;

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn quadratic_hand_values() {
        let c = QuadraticCost::terminal_only(dvector![1.0, 0.0], 0.1, 1, 1e-4);
        assert_eq!(c.state_value(&dvector![3.0, 1.0], false), 0.0);
        assert!((c.state_value(&dvector![3.0, 1.0], true) - 0.5).abs() < 1e-15);
        assert_eq!(c.state_gradient(&dvector![3.0, 1.0], true), dvector![0.4, 0.2]);
        assert!((c.control_value(&dvector![10.0]) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn angle_error_is_wrapped() {
        let c = QuadraticCost::terminal_only(dvector![PI - 0.1], 1.0, 1, 0.0).with_angles(vec![0]);
        let v = c.state_value(&dvector![-PI + 0.1], true);
        assert!((v - 0.04).abs() < 1e-12);
    }
}
