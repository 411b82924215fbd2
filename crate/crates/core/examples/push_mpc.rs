//! Receding-horizon pushing: both solvers re-plan every step from the
//! measured pose until the slider is within 1 cm / 0.05 rad of the goal.
use alspg::ilqr::IlqrHorizonSolver;
use alspg::models::PusherSlider;
use alspg::projection::ProjectionSet;
use alspg::shooting::{wrap_angle, AlspgHorizonSolver, HorizonSolver};
use alspg::{mpc_loop, AlspgOptions, Dynamics, IlqrOptions, OcProblem, QuadraticCost, SpgOptions};
use nalgebra::{dvector, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = PusherSlider::default();
    let horizon = 60;
    let goal = dvector![0.1, 0.1, std::f64::consts::FRAC_PI_3, 0.0];
    let cost = QuadraticCost::new(goal.clone(), DVector::zeros(4), dvector![100.0, 100.0, 1.0, 0.0], dvector![1e-3, 1e-3])
        .with_angles(vec![2]);
    let domain = ProjectionSet::repeated(ProjectionSet::bounds(dvector![0.0, -0.1], dvector![0.1, 0.1])?, horizon);
    let x0 = DVector::zeros(4);
    let u0 = DVector::from_fn(2 * horizon, |i, _| if i % 2 == 0 { 0.01 } else { 0.0 });
    let done = |x: &DVector<f64>| (x[0] - goal[0]).hypot(x[1] - goal[1]) <= 1e-2 && wrap_angle(x[2] - goal[2]).abs() <= 0.05;

    let opts = AlspgOptions { inner: SpgOptions { epsilon: 1e-4, max_iters: 20_000, trace_iterates: false, ..Default::default() }, ..Default::default() };
    let mut al = AlspgHorizonSolver::new(OcProblem::new(model.clone(), x0.clone(), horizon, cost.clone(), domain)?, opts);
    let mut il = IlqrHorizonSolver { model: model.clone(), cost, horizon, options: IlqrOptions { tol: 1e-6, ..Default::default() } };
    for (name, solver) in [("ALSPG", &mut al as &mut dyn HorizonSolver), ("iLQR", &mut il as &mut dyn HorizonSolver)] {
        let log = mpc_loop(solver, |_, x, u| model.step(x, u), x0.clone(), Some(u0.clone()), 300, done)?;
        let x = log.final_state().cloned().unwrap_or_else(|| x0.clone());
        println!(
            "{name:<6} {} steps, reached goal: {}, final ({:.4}, {:.4}, {:.4}), total n_f {}, n_jac {}",
            log.steps.len(), log.stopped_early, x[0], x[1], x[2], log.total.n_f, log.total.n_jac
        );
    }
    Ok(())
}
