//! Constrained inverse kinematics with the augmented-Lagrangian solver:
//! the end effector is sent to a point, a halfplane, a ring and a box.
use alspg::models::{constrained_ik, PlanarArm};
use alspg::projection::ProjectionSet;
use alspg::AlspgOptions;
use nalgebra::dvector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arm = PlanarArm::three_link();
    let q0 = dvector![0.3, 0.4, 0.2];
    let tasks = [
        ("point (1, 1.5)", ProjectionSet::point(dvector![1.0, 1.5])),
        ("halfplane y <= -0.5", ProjectionSet::halfspace(dvector![0.0, 1.0], -0.5)?),
        ("ring 1 <= |p| <= 1.5", ProjectionSet::annulus(dvector![0.0, 0.0], 0.5, 1.125)?),
        ("box around (-1, 1.5)", ProjectionSet::rectangle(dvector![-1.0, 1.5], 0.4, 0.4, 0.3, false)?),
        ("unreachable point (4, 0)", ProjectionSet::point(dvector![4.0, 0.0])),
    ];
    println!("start q0 = {:.3?}, end effector {:.3?}", q0.as_slice(), arm.fk(&q0).as_slice());
    for (name, set) in tasks {
        let sol = constrained_ik(&arm, &q0, set, None, &AlspgOptions::default())?;
        let p = arm.fk(&sol.q);
        println!(
            "{name:<26} q = ({:+.3}, {:+.3}, {:+.3})  p = ({:+.3}, {:+.3})  residual {:.1e}  {}",
            sol.q[0], sol.q[1], sol.q[2], p[0], p[1], sol.residual, sol.report.termination
        );
    }
    Ok(())
}
