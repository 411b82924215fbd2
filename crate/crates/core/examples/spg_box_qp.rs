//! Spectral projected gradient on a box-constrained quadratic.
use alspg::projection::ProjectionSet;
use alspg::{spg_minimize, SpgOptions};
use nalgebra::{dmatrix, dvector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = dmatrix![4.0, 1.0, 0.0; 1.0, 3.0, 0.5; 0.0, 0.5, 10.0];
    let c = dvector![-8.0, 3.0, -1.0];
    let (h2, c2) = (h.clone(), c.clone());
    let objective = (
        move |x: &nalgebra::DVector<f64>| 0.5 * x.dot(&(&h * x)) + c.dot(x),
        move |x: &nalgebra::DVector<f64>| &h2 * x + &c2,
    );
    let set = ProjectionSet::uniform_bounds(3, -1.0, 1.0)?;
    let sol = spg_minimize(objective, &set, &dvector![0.0, 0.0, 0.0], SpgOptions { epsilon: 1e-10, ..Default::default() })?;
    println!("x* = {:.6?}", sol.x.as_slice());
    println!(
        "{} after {} iterations, f = {:.8}, counters {:?}",
        sol.report.termination,
        sol.report.iterations,
        sol.report.final_objective().unwrap_or(f64::NAN),
        sol.report.counters
    );
    Ok(())
}
