mod support;

use alspg::projection::{HalfspaceRow, ProjectionSet};
use nalgebra::{dvector, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::criteria::projection_oracles;
use support::{randn, random_orthogonal};

#[test]
fn oracle_suite_every_variant() {
    for (name, stats, convex) in projection_oracles(11, 1000) {
        assert!(stats.membership <= 1e-9, "{name}: membership {}", stats.membership);
        assert!(stats.idempotence <= 1e-9, "{name}: idempotence {}", stats.idempotence);
        if convex {
            assert!(stats.variational <= 1e-8, "{name}: VI {}", stats.variational);
        } else {
            assert!(stats.boundary_gap <= 1e-6, "{name}: boundary gap {}", stats.boundary_gap);
        }
    }
}

#[test]
fn transform_consistency_for_orthogonal_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inners = [
        ProjectionSet::ball(DVector::zeros(3), 0.7).unwrap(),
        ProjectionSet::ball_outside(DVector::zeros(3), 0.7).unwrap(),
        ProjectionSet::SecondOrderCone { dim: 3 },
        ProjectionSet::slab(dvector![1.0, 0.5, -1.0], Some(-0.2), Some(0.3)).unwrap(),
    ];
    for inner in inners {
        for _ in 0..200 {
            let a = random_orthogonal(&mut rng, 3);
            let c = randn(&mut rng, 3);
            let set = ProjectionSet::transformed(inner.clone(), a.clone(), c.clone()).unwrap();
            let x0 = randn(&mut rng, 3) * 2.0;
            let p = set.project(&x0).unwrap();
            let y = &a * (&x0 - &c);
            let py = inner.project(&y).unwrap();
            let expected = a.transpose() * &py + &c;
            assert!((&p - &expected).norm() <= 1e-12, "{}", (&p - &expected).norm());
            assert!(((&p - &x0).norm() - (&py - &y).norm()).abs() <= 1e-12);
        }
    }
}

#[test]
fn rectangle_helper_matches_direct_transform() {
    // axis-aligned square: the helper must agree with a plain RectangleIn shifted by the center
    let set = ProjectionSet::rectangle(dvector![1.0, -1.0], 2.0, 2.0, 0.0, false).unwrap();
    let p = set.project(&dvector![3.0, 0.5]).unwrap();
    assert!((p - dvector![2.0, 0.0]).norm() < 1e-12);
}

#[test]
fn annulus_center_uses_first_axis() {
    let set = ProjectionSet::ball_outside(dvector![1.0, 2.0], 0.5).unwrap();
    let out = set.project_detailed(&dvector![1.0, 2.0]).unwrap();
    assert!(out.fallback);
    assert_eq!(out.point, dvector![1.5, 2.0]);
}

#[test]
fn polytope_out_tie_goes_to_lowest_row() {
    let rows = vec![
        HalfspaceRow::new(dvector![1.0, 0.0], 1.0),
        HalfspaceRow::new(dvector![-1.0, 0.0], 1.0),
        HalfspaceRow::new(dvector![0.0, 1.0], 2.0),
        HalfspaceRow::new(dvector![0.0, -1.0], 2.0),
    ];
    // inside the polytope {-1 <= x <= 1, -2 <= y <= 2} stored as outside rows:
    // the outside set is a^T x >= l with the normals flipped
    let outside: Vec<HalfspaceRow> = rows.iter().map(|r| HalfspaceRow::new(r.normal.clone(), r.bound)).collect();
    let set = ProjectionSet::PolytopeOut { rows: outside };
    let p = set.project(&dvector![0.0, 0.0]).unwrap();
    assert_eq!(p, dvector![1.0, 0.0]);
}

fn convex_sets() -> Vec<ProjectionSet> {
    vec![
        ProjectionSet::uniform_bounds(3, -0.5, 1.0).unwrap(),
        ProjectionSet::slab(dvector![1.0, 2.0, -1.0], None, Some(0.5)).unwrap(),
        ProjectionSet::ball(dvector![0.1, 0.0, -0.2], 1.0).unwrap(),
        ProjectionSet::SecondOrderCone { dim: 3 },
        ProjectionSet::RectangleIn { halfwidth: 0.4, dim: 3 },
        ProjectionSet::point(dvector![1.0, 1.0, 1.0]),
    ]
}

proptest! {
    #[test]
    fn convex_projections_are_nonexpansive(
        idx in 0usize..6,
        x in prop::collection::vec(-3.0f64..3.0, 3),
        y in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let set = &convex_sets()[idx];
        let (x, y) = (DVector::from_vec(x), DVector::from_vec(y));
        let (px, py) = (set.project(&x).unwrap(), set.project(&y).unwrap());
        prop_assert!((px - py).norm() <= (x - y).norm() + 1e-12);
    }

    #[test]
    fn projection_is_a_fixed_point_of_itself(
        idx in 0usize..6,
        x in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let set = &convex_sets()[idx];
        let p = set.project(&DVector::from_vec(x)).unwrap();
        prop_assert!(set.contains(&p).unwrap());
        prop_assert!((set.project(&p).unwrap() - &p).norm() <= 1e-9);
    }

    #[test]
    fn rectangle_out_moves_at_most_to_nearest_face(
        x in prop::collection::vec(-1.0f64..1.0, 2),
        h in 0.1f64..1.0,
    ) {
        let set = ProjectionSet::RectangleOut { halfwidth: h, dim: 2 };
        let x = DVector::from_vec(x);
        let p = set.project(&x).unwrap();
        let expected = (h - x.amax()).max(0.0);
        prop_assert!(((&p - &x).norm() - expected).abs() <= 1e-12);
    }
}
