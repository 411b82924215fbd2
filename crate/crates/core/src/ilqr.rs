//! Unconstrained iLQR baseline.
//!
//! Dynamic-programming backward pass on the linearized dynamics and
//! quadratized cost, followed by a backtracking forward rollout. Counters use
//! the same units as ALSPG: one `n_f` per full rollout plus cost, one `n_jac`
//! per full-horizon linearization.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::report::{Counters, SolveReport, Termination};
use crate::shooting::{
    linearize, rollout, Dynamics, HorizonSolve, HorizonSolver, LinearizedDynamics, ShootingError, Trajectory,
    TrajectoryCost,
};

#[derive(Debug, Clone, PartialEq)]
pub struct IlqrOptions {
    pub max_iters: usize,
    /// Stop when an accepted step lowers the cost by less than
    /// `tol * max(1, |J|)`.
    pub tol: f64,
    pub backtrack: f64,
    /// Smallest forward-pass step before giving up on the iteration.
    pub alpha_min: f64,
    /// First regularization added to `Q_uu` when it is not positive definite.
    pub reg_init: f64,
    pub reg_factor: f64,
    pub reg_max: f64,
}

impl Default for IlqrOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-6,
            backtrack: 0.5,
            alpha_min: 1e-8,
            reg_init: 1e-6,
            reg_factor: 10.0,
            reg_max: 1e10,
        }
    }
}

impl IlqrOptions {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0 && self.alpha_min > 0.0 && self.reg_init > 0.0) {
            return Err("tolerances and regularization must be positive".into());
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err("backtrack must be in (0, 1)".into());
        }
        if !(self.reg_factor > 1.0 && self.reg_max >= self.reg_init) {
            return Err("reg_factor must exceed 1 and reg_max must be at least reg_init".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IlqrSolution {
    pub trajectory: Trajectory,
    pub report: SolveReport,
}

struct Gains {
    k: Vec<DVector<f64>>,
    big_k: Vec<DMatrix<f64>>,
    /// Expected decrease model `alpha * d1 + alpha^2 * d2`.
    d1: f64,
    d2: f64,
}

/// Backward pass; `None` if `Q_uu + mu I` is not positive definite somewhere.
fn backward_pass<C: TrajectoryCost + ?Sized>(
    cost: &C,
    traj: &Trajectory,
    lin: &LinearizedDynamics,
    mu: f64,
) -> Option<Gains> {
    let horizon = traj.horizon();
    let n = traj.control_dim();
    let x_final = traj.state(horizon);
    let mut vx = cost.state_gradient(&x_final, true);
    let mut vxx = cost.state_hessian(&x_final, true);
    let mut k = vec![DVector::zeros(n); horizon];
    let mut big_k = vec![DMatrix::zeros(n, traj.state_dim()); horizon];
    let (mut d1, mut d2) = (0.0, 0.0);
    for t in (0..horizon).rev() {
        let (a, b) = (&lin.a[t], &lin.b[t]);
        let u = traj.control(t);
        let mut qx = a.tr_mul(&vx);
        let mut qxx = a.tr_mul(&(&vxx * a));
        if t > 0 {
            let x = traj.state(t);
            qx += cost.state_gradient(&x, false);
            qxx += cost.state_hessian(&x, false);
        }
        let qu = cost.control_gradient(&u) + b.tr_mul(&vx);
        let vxx_b = &vxx * b;
        let quu = cost.control_hessian(&u) + b.tr_mul(&vxx_b);
        let qux = vxx_b.tr_mul(a);
        let mut quu_reg = quu.clone();
        for i in 0..n {
            quu_reg[(i, i)] += mu;
        }
        let chol = quu_reg.cholesky()?;
        let kt = -chol.solve(&qu);
        let kk = -chol.solve(&qux);
        d1 += kt.dot(&qu);
        d2 += 0.5 * kt.dot(&(&quu * &kt));
        let kt_quu = kk.tr_mul(&quu);
        vx = &qx + &kt_quu * &kt + kk.tr_mul(&qu) + qux.tr_mul(&kt);
        vxx = &qxx + &kt_quu * &kk + kk.tr_mul(&qux) + qux.tr_mul(&kk);
        vxx = (&vxx + vxx.transpose()) * 0.5;
        k[t] = kt;
        big_k[t] = kk;
    }
    Some(Gains { k, big_k, d1, d2 })
}

fn forward_pass<D: Dynamics + ?Sized, C: TrajectoryCost + ?Sized>(
    model: &D,
    cost: &C,
    nominal: &Trajectory,
    gains: &Gains,
    alpha: f64,
) -> Option<(Trajectory, f64)> {
    let horizon = nominal.horizon();
    let (m, n) = (nominal.state_dim(), nominal.control_dim());
    let mut controls = DVector::zeros(horizon * n);
    let mut states = DVector::zeros(horizon * m);
    let mut x = nominal.x0.clone();
    for t in 0..horizon {
        let dx = &x - nominal.state(t);
        let u = nominal.control(t) + &gains.k[t] * alpha + &gains.big_k[t] * dx;
        x = model.step(&x, &u);
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        controls.rows_mut(t * n, n).copy_from(&u);
        states.rows_mut(t * m, m).copy_from(&x);
    }
    let traj = Trajectory::from_parts(nominal.x0.clone(), states, controls, m, n);
    let j = cost.total(&traj);
    j.is_finite().then_some((traj, j))
}

/// Runs iLQR from the control guess `u_init` (stacked, `T * n`).
pub fn ilqr_solve<D: Dynamics + ?Sized, C: TrajectoryCost + ?Sized>(
    model: &D,
    x0: &DVector<f64>,
    cost: &C,
    u_init: &DVector<f64>,
    opts: &IlqrOptions,
) -> Result<IlqrSolution, ShootingError> {
    opts.validate().map_err(ShootingError::InvalidOptions)?;
    let started = Instant::now();
    let mut counters = Counters::default();
    let mut report = SolveReport::new();

    let mut traj = rollout(model, x0, u_init)?;
    let mut j = cost.total(&traj);
    counters.n_f += 1;
    report.record(&traj.controls, j, Vec::new());
    let mut mu = 0.0;
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;

    'outer: while iterations < opts.max_iters {
        let lin = linearize(model, &traj);
        counters.n_jac += 1;
        counters.n_grad += 1;
        iterations += 1;

        let gains = loop {
            match backward_pass(cost, &traj, &lin, mu) {
                Some(g) => break g,
                None => {
                    mu = (mu * opts.reg_factor).max(opts.reg_init);
                    if mu > opts.reg_max {
                        termination = Termination::Stagnation;
                        report.message = Some("control Hessian could not be regularized".into());
                        break 'outer;
                    }
                }
            }
        };

        let scale = j.abs().max(1.0);
        if -(gains.d1 + gains.d2) < opts.tol * scale {
            termination = Termination::Converged;
            break;
        }

        let mut alpha = 1.0;
        let accepted = loop {
            let trial = forward_pass(model, cost, &traj, &gains, alpha);
            counters.n_f += 1;
            if let Some((candidate, j_new)) = trial {
                if j_new < j {
                    break Some((candidate, j_new));
                }
            }
            alpha *= opts.backtrack;
            if alpha < opts.alpha_min {
                break None;
            }
        };

        match accepted {
            Some((candidate, j_new)) => {
                let decrease = j - j_new;
                traj = candidate;
                j = j_new;
                report.record(&traj.controls, j, Vec::new());
                mu = if mu <= opts.reg_init { 0.0 } else { mu / opts.reg_factor };
                if decrease < opts.tol * scale {
                    termination = Termination::Converged;
                    break;
                }
            }
            None => {
                // the quadratic model promises a decrease the dynamics do not
                // deliver: damp the step and retry
                mu = (mu * opts.reg_factor).max(opts.reg_init);
                if mu > opts.reg_max {
                    termination = Termination::Stagnation;
                    report.message = Some("forward pass found no decrease".into());
                    break;
                }
            }
        }
    }

    report.termination = termination;
    report.iterations = iterations;
    report.counters = counters;
    report.wall_time = started.elapsed();
    Ok(IlqrSolution {
        trajectory: traj,
        report,
    })
}

/// iLQR inside the receding-horizon loop.
pub struct IlqrHorizonSolver<D, C> {
    pub model: D,
    pub cost: C,
    pub horizon: usize,
    pub options: IlqrOptions,
}

impl<D: Dynamics, C: TrajectoryCost> HorizonSolver for IlqrHorizonSolver<D, C> {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn control_dim(&self) -> usize {
        self.model.control_dim()
    }

    fn solve(&mut self, x0: &DVector<f64>, warm: &DVector<f64>) -> Result<HorizonSolve, String> {
        let sol = ilqr_solve(&self.model, x0, &self.cost, warm, &self.options).map_err(|e| e.to_string())?;
        Ok(HorizonSolve {
            objective: sol.report.final_objective().unwrap_or(f64::NAN),
            residual: 0.0,
            counters: sol.report.counters,
            termination: sol.report.termination,
            controls: sol.trajectory.controls,
        })
    }
}
