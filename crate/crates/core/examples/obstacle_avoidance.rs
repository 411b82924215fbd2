//! Point-mass motion planning around four rotated rectangles, comparing the
//! projection encoding (one outside-rectangle set per obstacle) against a
//! penetration-depth encoding.
use alspg::models::{ObstacleEncoding, ObstacleScene, RectObstacle};
use alspg::{alspg_solve, AlspgOptions, SpgOptions};
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let obstacles = vec![
        RectObstacle::new([0.3, 0.35], 0.25, 0.1, 0.4)?,
        RectObstacle::new([0.55, 0.5], 0.3, 0.08, 2.2)?,
        RectObstacle::new([0.75, 0.7], 0.2, 0.12, 1.0)?,
        RectObstacle::new([0.3, 0.75], 0.2, 0.1, 0.0)?,
    ];
    let scene = ObstacleScene::new([0.0, 0.0], [1.0, 1.0], obstacles, 60);
    let opts = AlspgOptions {
        epsilon_outer: 1e-6,
        inner: SpgOptions { max_iters: 5000, trace_iterates: false, ..Default::default() },
        ..Default::default()
    };
    for encoding in [ObstacleEncoding::Projection, ObstacleEncoding::Penetration] {
        let problem = scene.problem(encoding)?;
        let sol = alspg_solve(&problem, &DVector::zeros(2 * scene.horizon), &opts)?;
        let traj = problem.rollout(&sol.x)?;
        let xf = traj.final_state();
        println!(
            "{encoding:?}: {}  n_jac {}  n_f {}  deepest penetration {:.1e}  goal error {:.1e}",
            sol.report.termination,
            sol.report.counters.n_jac,
            sol.report.counters.n_f,
            scene.max_depth(&traj),
            (xf[0] - scene.goal[0]).hypot(xf[1] - scene.goal[1])
        );
    }
    Ok(())
}
