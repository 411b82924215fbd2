//! Independent reference implementations used as test oracles. Nothing here
//! calls into the solver code paths being checked.
#![allow(dead_code)]

pub mod criteria;

use alspg::projection::{HalfspaceRow, ProjectionSet};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn randn<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

pub fn randn_mat<R: Rng>(rng: &mut R, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// Random orthogonal matrix (QR of a Gaussian matrix).
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    randn_mat(rng, n, n).qr().q()
}

/// Central-difference gradient.
pub fn fd_gradient(mut f: impl FnMut(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let (mut a, mut b) = (x.clone(), x.clone());
        a[i] += h;
        b[i] -= h;
        (f(&a) - f(&b)) / (2.0 * h)
    })
}

/// Central-difference Jacobian of a vector map.
pub fn fd_jacobian(mut f: impl FnMut(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let m = f(x).len();
    let mut j = DMatrix::zeros(m, x.len());
    for i in 0..x.len() {
        let (mut a, mut b) = (x.clone(), x.clone());
        a[i] += h;
        b[i] -= h;
        j.set_column(i, &((f(&a) - f(&b)) / (2.0 * h)));
    }
    j
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(a.norm()).max(1e-12)
}

/// The full sensitivity matrix `dF/du` of a linear time-varying rollout:
/// block `(t, s)` is `A_t ... A_{s+1} B_s` for `s <= t`, zero above.
pub fn dense_sensitivity(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> DMatrix<f64> {
    let t_len = a.len();
    let (m, n) = b[0].shape();
    let mut g = DMatrix::zeros(t_len * m, t_len * n);
    for s in 0..t_len {
        let mut block = b[s].clone();
        for t in s..t_len {
            if t > s {
                block = &a[t] * block;
            }
            g.view_mut((t * m, s * n), (m, n)).copy_from(&block);
        }
    }
    g
}

/// Finite-horizon LQR by the backward Riccati recursion for
/// `sum_{t=1}^{T-1} x_t^T Q x_t + x_T^T Qf x_T + sum_{t=0}^{T-1} u_t^T R u_t`,
/// returning the optimal stacked controls from `x0`.
pub fn riccati_controls(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    qf: &DMatrix<f64>,
    r: &DMatrix<f64>,
    x0: &DVector<f64>,
    horizon: usize,
) -> DVector<f64> {
    let n = b.ncols();
    let mut p = qf.clone();
    let mut gains = vec![DMatrix::zeros(n, a.nrows()); horizon];
    for t in (0..horizon).rev() {
        let bp = b.transpose() * &p;
        let k = -(r + &bp * b).try_inverse().expect("positive definite") * (&bp * a);
        let stage_q = if t > 0 { q.clone() } else { DMatrix::zeros(q.nrows(), q.ncols()) };
        p = stage_q + a.transpose() * &p * a + a.transpose() * &p * b * &k;
        p = (&p + p.transpose()) * 0.5;
        gains[t] = k;
    }
    let mut u = DVector::zeros(horizon * n);
    let mut x = x0.clone();
    for t in 0..horizon {
        let ut = &gains[t] * &x;
        x = a * &x + b * &ut;
        u.rows_mut(t * n, n).copy_from(&ut);
    }
    u
}

/// Standard normal CDF quantile by bisection on the statrs CDF.
pub fn quantile_by_bisection(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let normal = Normal::new(0.0, 1.0).unwrap();
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Random bounded convex polygon: `k` tangent lines of a circle at sorted angles.
pub fn random_polygon_rows<R: Rng>(rng: &mut R, k: usize, radius: f64) -> Vec<HalfspaceRow> {
    let mut angles: Vec<f64> = (0..k).map(|i| (i as f64 + rng.random_range(0.1..0.9)) * std::f64::consts::TAU / k as f64).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles
        .iter()
        .map(|&t| {
            // unnormalized rows exercise the scaling in the projection
            let scale = rng.random_range(0.5..2.0);
            HalfspaceRow::new(DVector::from_vec(vec![t.cos(), t.sin()]) * scale, radius * scale)
        })
        .collect()
}

/// Vertices of the bounded polygon `{a_i^T x <= b_i}` by pairwise
/// intersection and feasibility filtering.
pub fn polygon_vertices(rows: &[HalfspaceRow]) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let m = DMatrix::from_row_slice(
                2,
                2,
                &[rows[i].normal[0], rows[i].normal[1], rows[j].normal[0], rows[j].normal[1]],
            );
            if let Some(inv) = m.try_inverse() {
                let v = inv * DVector::from_vec(vec![rows[i].bound, rows[j].bound]);
                if rows.iter().all(|r| r.normal.dot(&v) <= r.bound + 1e-9) {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Dense sample of the boundary of a 2-D convex polygon given its rows.
pub fn polygon_boundary_sample(rows: &[HalfspaceRow], per_edge: usize) -> Vec<DVector<f64>> {
    let verts = polygon_vertices(rows);
    let mut out = Vec::new();
    for r in rows {
        let on: Vec<&DVector<f64>> = verts.iter().filter(|v| (r.normal.dot(v) - r.bound).abs() < 1e-7).collect();
        if on.len() < 2 {
            continue;
        }
        let (a, b) = (on[0], on[1]);
        for k in 0..=per_edge {
            let s = k as f64 / per_edge as f64;
            out.push(a * (1.0 - s) + b * s);
        }
    }
    out
}

/// Dense sample of the boundary of the square `||x||_inf = h` in 2-D.
pub fn square_boundary_sample(h: f64, per_edge: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    for k in 0..=per_edge {
        let s = -h + 2.0 * h * k as f64 / per_edge as f64;
        for p in [[s, h], [s, -h], [h, s], [-h, s]] {
            out.push(DVector::from_vec(p.to_vec()));
        }
    }
    out
}

/// Dense sample of a circle.
pub fn circle_sample(center: &DVector<f64>, radius: f64, n: usize) -> Vec<DVector<f64>> {
    (0..n)
        .map(|k| {
            let t = k as f64 * std::f64::consts::TAU / n as f64;
            center + DVector::from_vec(vec![t.cos(), t.sin()]) * radius
        })
        .collect()
}

/// Which optimality check applies to a test set.
pub enum Optimality {
    /// Convex: check the variational inequality against these feasible points.
    Convex(Vec<DVector<f64>>),
    /// Nonconvex: compare the distance with a dense boundary sample.
    Boundary(Vec<DVector<f64>>),
}

/// One instance of every set variant, with a way to draw inputs and the
/// oracle data for its optimality check.
pub struct Case {
    pub name: &'static str,
    pub set: ProjectionSet,
    pub optimality: Optimality,
    /// Input scale around the origin.
    pub spread: f64,
}

fn feasible_sample<R: Rng>(set: &ProjectionSet, rng: &mut R, count: usize, spread: f64) -> Vec<DVector<f64>> {
    // Projections of random points are feasible; add interior samples by
    // rejection where the set has volume.
    let mut out = Vec::with_capacity(count);
    let mut draws = 0usize;
    while out.len() < count {
        let z = randn(rng, set.dim()) * spread;
        draws += 1;
        if set.contains(&z).unwrap() {
            out.push(z);
        } else if draws % 2 == 0 {
            out.push(set.project(&z).unwrap());
        }
    }
    out
}

/// Builds one representative instance per variant (and per convexity
/// regime of the quadric), seeded.
pub fn variant_cases<R: Rng>(rng: &mut R) -> Vec<Case> {
    let mut cases = Vec::new();
    let mut convex = |name: &'static str, set: ProjectionSet, spread: f64, rng: &mut R| {
        let z = feasible_sample(&set, rng, 200, spread);
        cases.push(Case {
            name,
            set,
            optimality: Optimality::Convex(z),
            spread,
        });
    };
    convex(
        "bounds",
        ProjectionSet::bounds(DVector::from_vec(vec![-1.0, 0.0, f64::NEG_INFINITY]), DVector::from_vec(vec![1.0, 2.0, 0.5])).unwrap(),
        2.0,
        rng,
    );
    convex(
        "hyperplane_slab",
        ProjectionSet::slab(DVector::from_vec(vec![1.0, -2.0, 0.5]), Some(-0.5), Some(1.0)).unwrap(),
        2.0,
        rng,
    );
    convex("quadric_upper", ProjectionSet::ball(DVector::from_vec(vec![0.3, -0.2, 0.1]), 1.2).unwrap(), 2.0, rng);
    convex("second_order_cone", ProjectionSet::SecondOrderCone { dim: 4 }, 2.0, rng);
    convex("rectangle_in", ProjectionSet::RectangleIn { halfwidth: 0.7, dim: 3 }, 1.5, rng);
    let rows = random_polygon_rows(rng, 6, 1.0);
    convex("polytope_in", ProjectionSet::PolytopeIn { rows: rows.clone() }, 2.0, rng);
    convex("point", ProjectionSet::point(DVector::from_vec(vec![0.5, -1.0])), 2.0, rng);
    let q = random_orthogonal(rng, 3);
    convex(
        "transformed_in",
        ProjectionSet::transformed(ProjectionSet::ball(DVector::zeros(3), 0.8).unwrap(), q, DVector::from_vec(vec![0.2, 0.1, -0.3])).unwrap(),
        2.0,
        rng,
    );
    convex(
        "repeated_in",
        ProjectionSet::repeated(ProjectionSet::RectangleIn { halfwidth: 0.5, dim: 2 }, 3),
        1.5,
        rng,
    );

    // nonconvex, all planar so the boundary can be sampled densely
    cases.push(Case {
        name: "rectangle_out",
        set: ProjectionSet::RectangleOut { halfwidth: 0.8, dim: 2 },
        optimality: Optimality::Boundary(square_boundary_sample(0.8, 4000)),
        spread: 1.0,
    });
    let out_rows = random_polygon_rows(rng, 5, 1.0);
    cases.push(Case {
        name: "polytope_out",
        optimality: Optimality::Boundary(polygon_boundary_sample(&out_rows, 4000)),
        set: ProjectionSet::PolytopeOut {
            rows: out_rows.iter().map(|r| HalfspaceRow::new(r.normal.clone(), r.bound)).collect(),
        },
        spread: 1.0,
    });
    let c = DVector::from_vec(vec![0.2, -0.1]);
    cases.push(Case {
        name: "quadric_lower",
        set: ProjectionSet::ball_outside(c.clone(), 1.0).unwrap(),
        optimality: Optimality::Boundary(circle_sample(&c, 1.0, 20000)),
        spread: 1.0,
    });
    let mut annulus_boundary = circle_sample(&c, 0.6, 20000);
    annulus_boundary.extend(circle_sample(&c, 1.2, 20000));
    cases.push(Case {
        name: "quadric_annulus",
        set: ProjectionSet::annulus(c.clone(), 0.18, 0.72).unwrap(),
        optimality: Optimality::Boundary(annulus_boundary),
        spread: 1.0,
    });
    let theta: f64 = rng.random_range(0.0..3.0);
    let rect = ProjectionSet::rectangle(DVector::from_vec(vec![0.1, 0.2]), 1.2, 0.6, theta, true).unwrap();
    let (s, co) = theta.sin_cos();
    let corners = [[0.6, 0.3], [-0.6, 0.3], [-0.6, -0.3], [0.6, -0.3]];
    let mut rect_boundary = Vec::new();
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        for i in 0..=4000 {
            let t = i as f64 / 4000.0;
            let (u, v) = (a[0] * (1.0 - t) + b[0] * t, a[1] * (1.0 - t) + b[1] * t);
            rect_boundary.push(DVector::from_vec(vec![0.1 + co * u - s * v, 0.2 + s * u + co * v]));
        }
    }
    cases.push(Case {
        name: "transformed_rectangle_out",
        set: rect,
        optimality: Optimality::Boundary(rect_boundary),
        spread: 1.0,
    });
    cases
}

#[derive(Debug, Default, Clone, Copy)]
pub struct OracleStats {
    pub membership: f64,
    pub idempotence: f64,
    /// Largest `(x0 - p)^T (z - p)` over feasible `z` (convex cases).
    pub variational: f64,
    /// Largest `||p - x0|| - min_boundary ||z - x0||` (nonconvex cases).
    pub boundary_gap: f64,
}

/// Runs `samples` seeded inputs through one case and returns the worst
/// value of each oracle quantity.
pub fn check_case<R: Rng>(case: &Case, rng: &mut R, samples: usize) -> OracleStats {
    let mut stats = OracleStats {
        membership: 0.0,
        idempotence: 0.0,
        variational: f64::NEG_INFINITY,
        boundary_gap: f64::NEG_INFINITY,
    };
    for _ in 0..samples {
        let x0 = randn(rng, case.set.dim()) * case.spread;
        let p = case.set.project(&x0).unwrap();
        stats.membership = stats.membership.max(case.set.violation(&p));
        let pp = case.set.project(&p).unwrap();
        stats.idempotence = stats.idempotence.max((pp - &p).norm());
        match &case.optimality {
            Optimality::Convex(zs) => {
                let r = &x0 - &p;
                for z in zs {
                    stats.variational = stats.variational.max(r.dot(&(z - &p)));
                }
            }
            Optimality::Boundary(zs) => {
                let d = (&p - &x0).norm();
                let best = zs
                    .iter()
                    .map(|z| z.iter().zip(x0.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
                    .sqrt();
                // points already in the set project to themselves
                let best = if case.set.contains(&x0).unwrap() { 0.0 } else { best };
                stats.boundary_gap = stats.boundary_gap.max(d - best);
            }
        }
    }
    stats
}
