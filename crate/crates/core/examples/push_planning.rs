//! Plans a planar push from the origin to (0.1 m, 0.1 m, pi/3) with ALSPG
//! (bounded pusher velocities) and with unconstrained iLQR.
use alspg::models::PusherSlider;
use alspg::projection::ProjectionSet;
use alspg::shooting::wrap_angle;
use alspg::{alspg_solve, ilqr_solve, AlspgOptions, IlqrOptions, OcProblem, QuadraticCost, SpgOptions};
use nalgebra::{dvector, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = PusherSlider::default();
    let horizon = 100;
    let goal = dvector![0.1, 0.1, std::f64::consts::FRAC_PI_3, 0.0];
    let cost = QuadraticCost::new(goal.clone(), DVector::zeros(4), dvector![100.0, 100.0, 1.0, 0.0], dvector![1e-3, 1e-3])
        .with_angles(vec![2]);
    let velocity_box = ProjectionSet::bounds(dvector![0.0, -0.1], dvector![0.1, 0.1])?;
    let x0 = DVector::zeros(4);
    let u0 = DVector::from_fn(2 * horizon, |i, _| if i % 2 == 0 { 0.01 } else { 0.0 });

    let problem = OcProblem::new(model.clone(), x0.clone(), horizon, cost.clone(), ProjectionSet::repeated(velocity_box, horizon))?;
    let opts = AlspgOptions { inner: SpgOptions { epsilon: 1e-4, max_iters: 20_000, trace_iterates: false, ..Default::default() }, ..Default::default() };
    let al = alspg_solve(&problem, &u0, &opts)?;
    let il = ilqr_solve(&model, &x0, &cost, &u0, &IlqrOptions::default())?;

    let report = |name: &str, x: DVector<f64>, r: &alspg::SolveReport| {
        println!(
            "{name:<6} final pose ({:.4}, {:.4}, {:.4})  position error {:.1e} m  angle error {:.1e} rad  {}  {:?}",
            x[0], x[1], x[2],
            (x[0] - goal[0]).hypot(x[1] - goal[1]),
            wrap_angle(x[2] - goal[2]).abs(),
            r.termination,
            r.counters
        );
    };
    report("ALSPG", problem.rollout(&al.x)?.final_state(), &al.report);
    report("iLQR", il.trajectory.final_state(), &il.report);
    Ok(())
}
