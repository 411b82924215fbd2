//! Measurements shared by the integration tests and the acceptance runner.
//! Each returns the worst observed quantity; callers compare it with their
//! tolerance.

use alspg::al::ScalarInequality;
use alspg::projection::{HalfspaceRow, ProjectionSet};
use alspg::spg::StepStatus;
use alspg::{
    al_gradient, al_value, ilqr_solve, jac_transpose_vec, reduce_inequalities, BlockState, ConstraintBlock, Dynamics,
    FnMap, IlqrOptions, LinearizedDynamics, NlpProblem, Objective, QuadraticCost, Spg, SpgOptions,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_case, dense_sensitivity, fd_gradient, randn, randn_mat, rel_err, riccati_controls, variant_cases, OracleStats};

pub fn quadratic(h: DMatrix<f64>, c: DVector<f64>) -> impl Objective + Clone {
    let (h2, c2) = (h.clone(), c.clone());
    (
        move |x: &DVector<f64>| 0.5 * x.dot(&(&h * x)) + c.dot(x),
        move |x: &DVector<f64>| &h2 * x + &c2,
    )
}

pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let l = randn_mat(rng, n, n);
    &l * l.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Per variant: name, worst oracle quantities, whether the set is convex.
pub fn projection_oracles(seed: u64, samples: usize) -> Vec<(&'static str, OracleStats, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = variant_cases(&mut rng);
    cases
        .iter()
        .map(|case| {
            let stats = check_case(case, &mut rng, samples);
            (case.name, stats, matches!(case.optimality, super::Optimality::Convex(_)))
        })
        .collect()
}

/// Smooth map `g(x) = A x + 0.3 tanh(B x)`.
pub fn smooth_map(a: DMatrix<f64>, b: DMatrix<f64>) -> FnMap {
    let (a2, b2) = (a.clone(), b.clone());
    FnMap::new(
        a.nrows(),
        move |x| &a * x + (&b * x).map(|v| 0.3 * v.tanh()),
        move |x, y| {
            let inner = (&b2 * x).map(|v| 0.3 * (1.0 - v.tanh().powi(2)));
            a2.transpose() * y + b2.transpose() * inner.component_mul(y)
        },
    )
}

pub fn random_convex_set<R: Rng>(rng: &mut R, dim: usize) -> ProjectionSet {
    match rng.random_range(0..5) {
        0 => ProjectionSet::ball(randn(rng, dim) * 0.3, rng.random_range(0.3..1.5)).unwrap(),
        1 => ProjectionSet::uniform_bounds(dim, -0.4, 0.6).unwrap(),
        2 => ProjectionSet::slab(randn(rng, dim), Some(-0.3), Some(0.2)).unwrap(),
        3 => ProjectionSet::SecondOrderCone { dim },
        _ => ProjectionSet::PolytopeIn {
            rows: (0..dim + 2)
                .map(|_| HalfspaceRow::new(randn(rng, dim), rng.random_range(0.1..1.0)))
                .collect(),
        },
    }
}

/// Random smooth problem with one to three convex constraint blocks, plus
/// random multipliers and penalties for each block.
pub fn random_problem<R: Rng>(rng: &mut R) -> (NlpProblem, Vec<BlockState>, usize) {
    let n = rng.random_range(3..8);
    let l = randn_mat(rng, n, n);
    let q = &l * l.transpose() + DMatrix::identity(n, n);
    let c = randn(rng, n);
    let (q2, c2) = (q.clone(), c.clone());
    let mut problem = NlpProblem::new(
        move |x| 0.5 * x.dot(&(&q * x)) + c.dot(x) + x.map(f64::sin).sum(),
        move |x| &q2 * x + &c2 + x.map(f64::cos),
        ProjectionSet::unbounded(n),
    );
    let mut blocks = Vec::new();
    for _ in 0..rng.random_range(1..4) {
        let m = rng.random_range(2..5);
        let map = smooth_map(randn_mat(rng, m, n), randn_mat(rng, m, n));
        problem.push_constraint(ConstraintBlock::new(map, random_convex_set(rng, m)));
        let mut state = BlockState::new(m, 10f64.powf(rng.random_range(-1.0..2.0)));
        state.lambda = randn(rng, m);
        blocks.push(state);
    }
    (problem, blocks, n)
}

/// Worst relative error between the AL gradient and central differences.
pub fn al_gradient_worst(seed: u64, problems: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..problems {
        let (problem, blocks, n) = random_problem(&mut rng);
        let x = randn(&mut rng, n);
        let g = al_gradient(&problem, &blocks, &x).unwrap();
        let fd = fd_gradient(|z| al_value(&problem, &blocks, z).unwrap(), &x, 1e-6);
        worst = worst.max(rel_err(&g, &fd));
    }
    worst
}

/// Disagreements between `h(x) = 0` and "every row holds" over random
/// polytopes, and how many samples were feasible.
pub fn reduction_disagreements(seed: u64, samples: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut feasible, mut failures) = (0, 0);
    for _ in 0..samples {
        let dim = rng.random_range(1..5);
        let k = rng.random_range(1..8);
        let rows: Vec<(DVector<f64>, f64)> = (0..k).map(|_| (randn(&mut rng, dim), rng.random_range(-0.2..1.0))).collect();
        let x = randn(&mut rng, dim) * rng.random_range(0.05..1.5);
        let h = reduce_inequalities(
            rows.iter()
                .map(|(a, b)| {
                    let (a, a2, b) = (a.clone(), a.clone(), *b);
                    ScalarInequality::new(move |x| a.dot(x) - b, move |_| a2.clone())
                })
                .collect(),
        );
        let every_row = rows.iter().all(|(a, b)| a.dot(&x) - b <= 0.0);
        feasible += every_row as usize;
        let value = h.h(&x);
        if (value == 0.0) != every_row || value < 0.0 {
            failures += 1;
        }
    }
    (failures, feasible)
}

pub fn random_lin<R: Rng>(rng: &mut R) -> LinearizedDynamics {
    let horizon = rng.random_range(1..=50);
    let (m, n) = (rng.random_range(1..=5), rng.random_range(1..=5));
    LinearizedDynamics {
        // scaled so products over the horizon stay O(1)
        a: (0..horizon).map(|_| randn_mat(rng, m, m) * (0.5 / (m as f64).sqrt())).collect(),
        b: (0..horizon).map(|_| randn_mat(rng, m, n)).collect(),
    }
}

/// Worst absolute error of the recursion against the dense block product.
pub fn recursion_worst(seed: u64, instances: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let lin = random_lin(&mut rng);
        let m = lin.a[0].nrows();
        let y = randn(&mut rng, lin.horizon() * m);
        let z = jac_transpose_vec(&lin, &y).unwrap();
        let dense = dense_sensitivity(&lin.a, &lin.b).transpose() * &y;
        worst = worst.max((z - dense).amax());
    }
    worst
}

#[derive(Debug, Clone, Copy)]
pub struct SpgComparison {
    /// Iterations whose direction differed (bitwise) from the classical one.
    pub mismatches: usize,
    pub directions: usize,
    /// Smallest and largest spectral quotient seen on `diag(1, 10)`.
    pub quotient_min: f64,
    pub quotient_max: f64,
    pub quotients: usize,
}

/// SPG with `gamma = 1` against `P(x - grad f) - x`, then the spectral
/// quotients on `diag(1, 10)` quadratics.
pub fn spg_vs_projected_gradient(seed: u64) -> SpgComparison {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SpgComparison {
        mismatches: 0,
        directions: 0,
        quotient_min: f64::INFINITY,
        quotient_max: f64::NEG_INFINITY,
        quotients: 0,
    };
    let pinned = SpgOptions {
        gamma_min: 1.0,
        gamma_max: 1.0,
        ..Default::default()
    };
    for _ in 0..20 {
        let n = 4;
        let h = random_spd(&mut rng, n) * 0.2;
        let c = randn(&mut rng, n);
        let set = ProjectionSet::uniform_bounds(n, -0.5, 0.5).unwrap();
        let mut spg = Spg::new(quadratic(h.clone(), c.clone()), &set, &randn(&mut rng, n), pinned.clone()).unwrap();
        while spg.state().iterations < 30 {
            let x = spg.state().x.clone();
            let classical = set.project(&(&x - (&h * &x + &c))).unwrap() - &x;
            out.directions += 1;
            if spg.state().gamma != 1.0 || spg.direction() != classical {
                out.mismatches += 1;
            }
            if let StepStatus::Done(_) = spg.step() {
                break;
            }
            if spg.state().last_direction.as_ref() != Some(&classical) {
                out.mismatches += 1;
            }
        }
    }
    let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 10.0]));
    for set in [ProjectionSet::unbounded(2), ProjectionSet::uniform_bounds(2, -0.3, 2.0).unwrap()] {
        for _ in 0..20 {
            let c = randn(&mut rng, 2);
            let x0 = randn(&mut rng, 2) * 3.0;
            let mut spg = Spg::new(quadratic(h.clone(), c), &set, &x0, SpgOptions::default()).unwrap();
            while let StepStatus::Continue = spg.step() {
                // a zero step (already at the projected optimum) carries no curvature
                if let Some(s) = spg.state().last_spectral.filter(|s| s.long.is_finite()) {
                    for q in [s.long, s.short] {
                        out.quotient_min = out.quotient_min.min(q);
                        out.quotient_max = out.quotient_max.max(q);
                    }
                    out.quotients += 1;
                }
            }
        }
    }
    out
}

pub struct Lti {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl Dynamics for Lti {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    fn control_dim(&self) -> usize {
        self.b.ncols()
    }
    fn dt(&self) -> f64 {
        1.0
    }
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }
    fn jacobians(&self, _: &DVector<f64>, _: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.a.clone(), self.b.clone())
    }
}

/// Worst error (relative to `max(1, ||u*||_inf)`) of the first iLQR iterate
/// on random LQR instances, and the most iterations any instance needed.
pub fn riccati_worst(seed: u64, instances: usize) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut most): (f64, usize) = (0.0, 0);
    for _ in 0..instances {
        let (m, n) = (rng.random_range(2..6), rng.random_range(1..4));
        let horizon = rng.random_range(5..40);
        let model = Lti {
            a: randn_mat(&mut rng, m, m) * (0.9 / (m as f64).sqrt()),
            b: randn_mat(&mut rng, m, n),
        };
        let q = DVector::from_fn(m, |_, _| rng.random_range(0.1..2.0));
        let qf = DVector::from_fn(m, |_, _| rng.random_range(1.0..10.0));
        let r = DVector::from_fn(n, |_, _| rng.random_range(0.01..1.0));
        let cost = QuadraticCost::new(DVector::zeros(m), q.clone(), qf.clone(), r.clone());
        let x0 = randn(&mut rng, m);
        let u_init = randn(&mut rng, horizon * n);
        let sol = ilqr_solve(&model, &x0, &cost, &u_init, &IlqrOptions::default()).unwrap();
        let oracle = riccati_controls(
            &model.a,
            &model.b,
            &DMatrix::from_diagonal(&q),
            &DMatrix::from_diagonal(&qf),
            &DMatrix::from_diagonal(&r),
            &x0,
            horizon,
        );
        // x_trace holds the control iterates; entry 1 follows the first iteration
        let first = &sol.report.x_trace[1];
        worst = worst.max((first - &oracle).amax() / oracle.amax().max(1.0));
        most = most.max(if sol.report.converged() { sol.report.iterations } else { usize::MAX });
    }
    (worst, most)
}
