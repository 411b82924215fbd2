use nalgebra::{DMatrix, DVector};

use super::{ModelError, PlanarArm};
use crate::al::ConstraintMap;

/// Standard normal quantile `Psi^{-1}(p)` for `p` in `(0, 1)`.
///
/// Acklam's rational approximation (relative error below 1.2e-9).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239e0,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838e0,
        -2.549732539343734e0,
        4.374664141464968e0,
        2.938163982698783e0,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996e0,
        3.754408661907416e0,
    ];
    const P_LOW: f64 = 0.02425;

    if !(p > 0.0 && p < 1.0) {
        return if p == 0.0 {
            f64::NEG_INFINITY
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            f64::NAN
        };
    }
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Chance constraint `P(a^T f(q) <= 0) >= eta` for `a ~ N(mu, Sigma)` as the
/// cone membership `[z; t]` in the unit second-order cone, with
/// `z = Psi^{-1}(eta) Sigma^{1/2} f(q)` and `t = -mu^T f(q)`, where `f` is the
/// end-effector position.
#[derive(Debug, Clone, PartialEq)]
pub struct ChanceConstraintMap {
    pub arm: PlanarArm,
    pub mu: DVector<f64>,
    pub sigma_sqrt: DMatrix<f64>,
    pub eta: f64,
    quantile: f64,
}

impl ChanceConstraintMap {
    pub fn new(arm: PlanarArm, mu: DVector<f64>, sigma_sqrt: DMatrix<f64>, eta: f64) -> Result<Self, ModelError> {
        if !(0.5..1.0).contains(&eta) {
            return Err(ModelError::Invalid("eta must lie in [0.5, 1)".into()));
        }
        if mu.len() != 2 || sigma_sqrt.shape() != (2, 2) {
            return Err(ModelError::Invalid("mu must be 2-D and Sigma^(1/2) 2x2".into()));
        }
        if sigma_sqrt.clone().svd(false, false).singular_values.min() <= 1e-12 {
            return Err(ModelError::Invalid("Sigma^(1/2) must have full rank".into()));
        }
        Ok(Self {
            arm,
            mu,
            sigma_sqrt,
            eta,
            quantile: normal_quantile(eta),
        })
    }

    pub fn quantile(&self) -> f64 {
        self.quantile
    }

    /// The constraint sign `mu^T p + Psi^{-1}(eta) ||Sigma^{1/2} p||` (feasible when `<= 0`).
    pub fn margin(&self, q: &DVector<f64>) -> f64 {
        let p = self.arm.fk(q);
        self.mu.dot(&p) + self.quantile * (&self.sigma_sqrt * &p).norm()
    }
}

impl ConstraintMap for ChanceConstraintMap {
    fn output_dim(&self) -> usize {
        3
    }

    fn value(&self, q: &DVector<f64>) -> DVector<f64> {
        let p = self.arm.fk(q);
        let z = &self.sigma_sqrt * &p * self.quantile;
        DVector::from_vec(vec![z[0], z[1], -self.mu.dot(&p)])
    }

    fn jacobian_transpose_product(&self, q: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        // d[z; t]/dp = [k S; -mu^T]
        let wz = DVector::from_vec(vec![y[0], y[1]]);
        let wp = self.sigma_sqrt.tr_mul(&wz) * self.quantile - &self.mu * y[2];
        self.arm.jacobian(q).tr_mul(&wp)
    }
}
