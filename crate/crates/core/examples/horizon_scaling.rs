//! Solve time of SPG and iLQR as the horizon grows, on unconstrained reaching
//! with a 7-link arm over a fixed 1 s duration.
//!
//! `cargo run --release --example horizon_scaling -- 100 500 1000 2000`
use std::time::Instant;

use alspg::models::{ArmKinematics, PlanarArm, ReachingCost};
use alspg::projection::ProjectionSet;
use alspg::{ilqr_solve, spg_solve_problem, IlqrOptions, OcProblem, SpgOptions};
use nalgebra::{dvector, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let horizons: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let horizons = if horizons.is_empty() { vec![100, 200, 400] } else { horizons };
    let arm = PlanarArm::new(vec![0.5; 7])?;
    let goal = dvector![2.0, 1.5];
    let q0 = DVector::from_element(7, 0.1);
    println!("{:>6} {:>10} {:>10} {:>12} {:>12}", "T", "SPG [s]", "iLQR [s]", "SPG f", "iLQR f");
    for t in horizons {
        let dt = 1.0 / t as f64;
        let model = ArmKinematics::new(arm.clone(), dt)?;
        let cost = ReachingCost::new(arm.clone(), goal.clone(), 1.0, 1e-2 * dt);
        let u0 = DVector::zeros(7 * t);
        let problem = OcProblem::new(model.clone(), q0.clone(), t, cost.clone(), ProjectionSet::unbounded(7 * t))?;
        let opts = SpgOptions { epsilon: 1e-4 * dt, max_iters: 100_000, trace_iterates: false, ..Default::default() };
        let clock = Instant::now();
        let spg = spg_solve_problem(&problem, &u0, opts)?;
        let t_spg = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let il = ilqr_solve(&model, &q0, &cost, &u0, &IlqrOptions::default())?;
        let t_il = clock.elapsed().as_secs_f64();
        println!(
            "{t:>6} {t_spg:>10.4} {t_il:>10.4} {:>12.6e} {:>12.6e}",
            spg.report.final_objective().unwrap_or(f64::NAN),
            il.report.final_objective().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
