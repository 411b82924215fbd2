use nalgebra::{DMatrix, DVector};

use super::ModelError;
use crate::shooting::Dynamics;

/// Point mass in the plane, state `[p_x, p_y, v_x, v_y]`, control
/// `[a_x, a_y]`, discretized exactly under zero-order hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleIntegrator2D {
    dt: f64,
}

impl Default for DoubleIntegrator2D {
    fn default() -> Self {
        Self { dt: 0.05 }
    }
}

impl DoubleIntegrator2D {
    pub fn new(dt: f64) -> Result<Self, ModelError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ModelError::Invalid("dt must be positive".into()));
        }
        Ok(Self { dt })
    }

    pub fn a(&self) -> DMatrix<f64> {
        let dt = self.dt;
        DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, dt, 0.0, //
                0.0, 1.0, 0.0, dt, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        )
    }

    pub fn b(&self) -> DMatrix<f64> {
        let h = 0.5 * self.dt * self.dt;
        let dt = self.dt;
        DMatrix::from_row_slice(4, 2, &[h, 0.0, 0.0, h, dt, 0.0, 0.0, dt])
    }
}

impl Dynamics for DoubleIntegrator2D {
    fn state_dim(&self) -> usize {
        4
    }

    fn control_dim(&self) -> usize {
        2
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (dt, h) = (self.dt, 0.5 * self.dt * self.dt);
        DVector::from_vec(vec![
            x[0] + dt * x[2] + h * u[0],
            x[1] + dt * x[3] + h * u[1],
            x[2] + dt * u[0],
            x[3] + dt * u[1],
        ])
    }

    fn jacobians(&self, _: &DVector<f64>, _: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.a(), self.b())
    }
}
