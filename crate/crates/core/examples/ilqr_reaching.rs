//! Unconstrained reaching with iLQR and plain SPG on the same shooting problem.
use alspg::models::{ArmKinematics, PlanarArm, ReachingCost};
use alspg::projection::ProjectionSet;
use alspg::{ilqr_solve, spg_solve_problem, IlqrOptions, OcProblem, SpgOptions};
use nalgebra::{dvector, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arm = PlanarArm::three_link();
    let horizon = 100;
    let model = ArmKinematics::new(arm.clone(), 0.02)?;
    let cost = ReachingCost::new(arm.clone(), dvector![0.5, 2.0], 1.0, 1e-3);
    let q0 = DVector::from_element(3, 0.2);
    let u0 = DVector::zeros(3 * horizon);

    let il = ilqr_solve(&model, &q0, &cost, &u0, &IlqrOptions::default())?;
    let p = arm.fk(&il.trajectory.final_state());
    println!("iLQR: {} in {} iterations, end effector ({:.4}, {:.4}), {:?}", il.report.termination, il.report.iterations, p[0], p[1], il.report.counters);

    let problem = OcProblem::new(model, q0, horizon, cost, ProjectionSet::unbounded(3 * horizon))?;
    let spg = spg_solve_problem(&problem, &u0, SpgOptions { trace_iterates: false, ..Default::default() })?;
    let p = arm.fk(&problem.rollout(&spg.x)?.final_state());
    println!("SPG:  {} in {} iterations, end effector ({:.4}, {:.4}), {:?}", spg.report.termination, spg.report.iterations, p[0], p[1], spg.report.counters);
    Ok(())
}
