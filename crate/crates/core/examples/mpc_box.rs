//! Receding-horizon control of a 3-link arm whose end effector must stay in
//! the box [1,2]x[0,1]; the first joint is knocked by -0.5 rad at step 50.
use alspg::al::block_residual;
use alspg::models::{ArmKinematics, EndEffectorPath, PlanarArm, ReachingCost};
use alspg::projection::ProjectionSet;
use alspg::shooting::AlspgHorizonSolver;
use alspg::{mpc_loop, AlspgOptions, Dynamics, OcProblem, SpgOptions};
use nalgebra::dvector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arm = PlanarArm::three_link();
    let horizon = 20;
    let model = ArmKinematics::new(arm.clone(), 0.05)?;
    let cost = ReachingCost::new(arm.clone(), dvector![2.5, 0.5], 1.0, 1e-3);
    let region = ProjectionSet::rectangle(dvector![1.5, 0.5], 1.0, 1.0, 0.0, false)?;
    let rates = ProjectionSet::repeated(ProjectionSet::uniform_bounds(3, -2.0, 2.0)?, horizon);
    let q0 = dvector![0.9, -1.0, -0.6];
    let problem = OcProblem::new(model.clone(), q0.clone(), horizon, cost, rates)?.with_path_constraint(
        EndEffectorPath { arm: arm.clone(), timesteps: (1..=horizon).collect() },
        ProjectionSet::repeated(region.clone(), horizon),
    )?;
    let opts = AlspgOptions {
        max_outer: 30,
        inner: SpgOptions { max_iters: 2000, trace_iterates: false, ..Default::default() },
        ..Default::default()
    };
    let mut solver = AlspgHorizonSolver::new(problem, opts);
    let knock = dvector![-0.5, 0.0, 0.0];
    let plant = |k: usize, x: &nalgebra::DVector<f64>, u: &nalgebra::DVector<f64>| {
        let next = model.step(x, u);
        if k == 49 { next + &knock } else { next }
    };
    let log = mpc_loop(&mut solver, plant, q0, None, 120, |_| false)?;
    for (k, q) in log.states.iter().enumerate() {
        if k % 10 == 0 || (49..=56).contains(&k) {
            let p = arm.fk(q);
            println!("step {k:>3}: end effector ({:+.4}, {:+.4})  box violation {:.1e}", p[0], p[1], block_residual(&p, &region));
        }
    }
    Ok(())
}
