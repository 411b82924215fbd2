//! Projects one point onto each kind of geometric set.
use alspg::projection::{HalfspaceRow, ProjectionSet};
use nalgebra::{dvector, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = dvector![1.5, -0.4];
    let sets: Vec<(&str, ProjectionSet)> = vec![
        ("box [-1,1]^2", ProjectionSet::uniform_bounds(2, -1.0, 1.0)?),
        ("halfspace x+y <= 0", ProjectionSet::halfspace(dvector![1.0, 1.0], 0.0)?),
        ("slab -0.2 <= y <= 0.2", ProjectionSet::slab(dvector![0.0, 1.0], Some(-0.2), Some(0.2))?),
        ("ring 0.5 <= |x| <= 1.2", ProjectionSet::annulus(DVector::zeros(2), 0.125, 0.72)?),
        ("outside ball of radius 2", ProjectionSet::ball_outside(DVector::zeros(2), 2.0)?),
        ("rotated rectangle (inside)", ProjectionSet::rectangle(dvector![1.0, 0.0], 1.0, 0.5, 0.6, false)?),
        ("rotated rectangle (outside)", ProjectionSet::rectangle(dvector![1.2, -0.3], 1.0, 0.5, 0.6, true)?),
        ("triangle", ProjectionSet::PolytopeIn {
            rows: vec![
                HalfspaceRow::new(dvector![-1.0, 0.0], 0.0),
                HalfspaceRow::new(dvector![0.0, -1.0], 0.0),
                HalfspaceRow::new(dvector![1.0, 1.0], 1.0),
            ],
        }),
        ("point (0.3, 0.3)", ProjectionSet::point(dvector![0.3, 0.3])),
    ];
    println!("projecting x = ({:.2}, {:.2})", x[0], x[1]);
    for (name, set) in &sets {
        let p = set.project(&x)?;
        println!("{name:<30} -> ({:+.4}, {:+.4})  distance {:.4}", p[0], p[1], (&p - &x).norm());
    }
    let cone = ProjectionSet::SecondOrderCone { dim: 3 };
    let z = dvector![1.0, 2.0, 0.5];
    println!("second-order cone: {:?} -> {:?}", z.as_slice(), cone.project(&z)?.as_slice());
    Ok(())
}
