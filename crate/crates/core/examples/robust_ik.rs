//! Chance-constrained IK: keep the end effector behind an uncertain plane
//! `a^T p <= 0` with probability 0.8, then check it by Monte Carlo.
use alspg::models::{robust_ik, satisfaction_rate, ChanceConstraintMap, PlanarArm};
use alspg::AlspgOptions;
use nalgebra::{dmatrix, dvector, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arm = PlanarArm::three_link();
    let (mu, s) = (dvector![0.3, 1.0], dmatrix![0.3, 0.1; 0.1, 0.2]);
    let q0 = dvector![0.8, 0.4, 0.3];
    for eta in [0.5, 0.8, 0.95] {
        let map = ChanceConstraintMap::new(arm.clone(), mu.clone(), s.clone(), eta)?;
        let sol = robust_ik(&arm, &q0, &map, &AlspgOptions::default())?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples = (0..10_000).map(|_| {
            let xi: DVector<f64> = DVector::from_fn(2, |_, _| StandardNormal.sample(&mut rng));
            &mu + &s * xi
        });
        let rate = satisfaction_rate(&arm, &sol.q, samples);
        println!(
            "eta = {eta:.2}: q = {:.3?}  margin {:+.1e}  Monte-Carlo satisfaction {:.4}  ({})",
            sol.q.as_slice(),
            map.margin(&sol.q),
            rate,
            sol.report.termination
        );
    }
    Ok(())
}
