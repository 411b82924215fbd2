mod support;

use alspg::projection::ProjectionSet;
use alspg::report::Counters;
use alspg::spg::{initial_stepsize, StepStatus};
use alspg::{spg_minimize, Objective, Spg, SpgOptions, Termination};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::criteria::{quadratic, random_spd, spg_vs_projected_gradient};
use support::randn;

#[test]
fn unit_gamma_gives_the_projected_gradient_direction() {
    let c = spg_vs_projected_gradient(1);
    assert!(c.directions > 100, "{c:?}");
    assert_eq!(c.mismatches, 0);
}

#[test]
fn spectral_quotients_stay_within_inverse_eigenvalues() {
    let c = spg_vs_projected_gradient(2);
    assert!(c.quotients > 100, "{c:?}");
    assert!(c.quotient_min >= 0.1 - 1e-12 && c.quotient_max <= 1.0 + 1e-12, "{c:?}");
}

#[test]
fn accepted_steps_satisfy_the_nonmonotone_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = 5;
        // nonconvex smooth objective: quadratic plus a ripple
        let h = random_spd(&mut rng, n);
        let (h2, hh) = (h.clone(), h.clone());
        let obj = (
            move |x: &DVector<f64>| 0.5 * x.dot(&(&h * x)) + 2.0 * x.map(|v| (3.0 * v).sin()).sum(),
            move |x: &DVector<f64>| &h2 * x + x.map(|v| 6.0 * (3.0 * v).cos()),
        );
        let set = ProjectionSet::ball(DVector::zeros(n), 2.0).unwrap();
        let opts = SpgOptions::default();
        let mut spg = Spg::new(obj, &set, &(randn(&mut rng, n) * 2.0), opts.clone()).unwrap();
        loop {
            let (x, grad, f_max) = (spg.state().x.clone(), spg.state().grad.clone(), spg.state().f_max());
            if let StepStatus::Done(_) = spg.step() {
                break;
            }
            let x_next = &spg.state().x;
            let f_next = 0.5 * x_next.dot(&(&hh * x_next)) + 2.0 * x_next.map(|v| (3.0 * v).sin()).sum();
            assert!(f_next <= f_max + opts.beta * grad.dot(&(x_next - &x)) + 1e-12);
        }
    }
}

/// Exact minimizer of a strictly convex box QP by enumerating every
/// lower / free / upper assignment and keeping the KKT point.
fn box_qp_oracle(h: &DMatrix<f64>, c: &DVector<f64>, lo: f64, hi: f64) -> DVector<f64> {
    let n = c.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        let mut x = DVector::from_fn(n, |i, _| if state[i] == 0 { lo } else { hi });
        if !free.is_empty() {
            let hf = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
            let rhs = DVector::from_fn(free.len(), |a, _| {
                -c[free[a]] - (0..n).filter(|j| state[*j] != 1).map(|j| h[(free[a], j)] * x[j]).sum::<f64>()
            });
            let xf = hf.lu().solve(&rhs).unwrap();
            for (a, &i) in free.iter().enumerate() {
                x[i] = xf[a];
            }
        }
        let g = h * &x + c;
        let kkt = (0..n).all(|i| match state[i] {
            0 => g[i] >= -1e-12,
            2 => g[i] <= 1e-12,
            _ => x[i] >= lo - 1e-12 && x[i] <= hi + 1e-12,
        });
        if kkt {
            let f = 0.5 * x.dot(&(h * &x)) + c.dot(&x);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, x));
            }
        }
    }
    best.unwrap().1
}

#[test]
fn box_qp_matches_active_set_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let opts = SpgOptions {
        epsilon: 1e-10,
        ..Default::default()
    };
    for _ in 0..50 {
        let n = rng.random_range(2..6);
        let h = random_spd(&mut rng, n);
        let c = randn(&mut rng, n) * 3.0;
        let set = ProjectionSet::uniform_bounds(n, -1.0, 1.0).unwrap();
        let sol = spg_minimize(quadratic(h.clone(), c.clone()), &set, &DVector::zeros(n), opts.clone()).unwrap();
        assert_eq!(sol.report.termination, Termination::Converged);
        let oracle = box_qp_oracle(&h, &c, -1.0, 1.0);
        assert!((&sol.x - &oracle).amax() <= 1e-6, "{} vs {}", sol.x, oracle);
    }
}

#[test]
fn counters_follow_the_evaluation_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let n = 4;
        let set = ProjectionSet::ball(DVector::zeros(n), 1.0).unwrap();
        let sol = spg_minimize(
            quadratic(random_spd(&mut rng, n), randn(&mut rng, n) * 4.0),
            &set,
            &randn(&mut rng, n),
            SpgOptions::default(),
        )
        .unwrap();
        let c = sol.report.counters;
        assert_eq!(c.n_grad, sol.report.iterations + 2);
        // one value per line-search trial plus the start; the probe spends a gradient only
        assert!(c.n_f >= sol.report.iterations + 1);
        assert!(c.n_f + 1 >= c.n_grad);
        assert_eq!(sol.report.f_trace.len(), sol.report.iterations + 1);
    }
}

#[test]
fn warm_start_skips_the_probe() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let obj = quadratic(random_spd(&mut rng, 3), randn(&mut rng, 3));
    let set = ProjectionSet::unbounded(3);
    let sol = Spg::warm(obj, &set, &randn(&mut rng, 3), 0.3, SpgOptions::default()).unwrap().run();
    assert_eq!(sol.report.counters.n_grad, sol.report.iterations + 1);
}

proptest! {
    #[test]
    fn initial_stepsize_is_clamped(seed in 0u64..1000, scale in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 4;
        let h = random_spd(&mut rng, n) * 10f64.powf(scale);
        let mut obj = quadratic(h, randn(&mut rng, n));
        let x0 = randn(&mut rng, n);
        let g0 = obj.gradient(&x0);
        let opts = SpgOptions { gamma_min: 1e-3, gamma_max: 1e3, ..Default::default() };
        let g = initial_stepsize(&mut obj, &x0, &g0, &opts, &mut Counters::default());
        prop_assert!((opts.gamma_min..=opts.gamma_max).contains(&g));
    }
}
