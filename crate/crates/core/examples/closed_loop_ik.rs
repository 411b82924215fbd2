//! Reactive IK as used by an interactive front end: a target moves along a
//! circle and each frame gets a two-outer-iteration solve warm-started from
//! the previous one.
use alspg::models::{IkSession, PlanarArm};
use alspg::projection::ProjectionSet;
use nalgebra::{dvector, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arm = PlanarArm::three_link();
    let mut session = IkSession::new(arm.clone());
    let mut q = DVector::from_element(3, 0.1);
    for frame in 0..60 {
        let angle = 0.4 + 0.02 * frame as f64;
        let target = ProjectionSet::point(dvector![2.0 * angle.cos(), 2.0 * angle.sin()]);
        let reply = session.step(&q, &target, 2)?;
        q = reply.q;
        if frame % 5 == 0 {
            println!("frame {frame:>2}: q = {:+.3?}  residual {:.1e}  n_jac {}", q.as_slice(), reply.residual, reply.report.counters.n_jac);
        }
    }
    // hold the last target still: the residual settles
    let target = ProjectionSet::point(dvector![2.0 * 1.58f64.cos(), 2.0 * 1.58f64.sin()]);
    for _ in 0..10 {
        q = session.step(&q, &target, 2)?.q;
    }
    println!("settled residual {:.1e}", alspg::al::block_residual(&arm.fk(&q), &target));
    Ok(())
}
