//! Seeded obstacle layouts for the point-car avoidance cases.
//!
//! Each layout is four rotated rectangles inside `[0.15, 0.85]^2`, accepted
//! only when start and goal keep a clearance of `0.05` and the straight
//! start-goal segment crosses at least two obstacles. The bundled
//! `obstacle_cars/case*.toml` fixtures are the first accepted seeds.

use std::f64::consts::PI;
use std::fmt::Write as _;

use alspg::projection::ProjectionSet;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const START: [f64; 2] = [0.0, 0.0];
pub const GOAL: [f64; 2] = [1.0, 1.0];
pub const OBSTACLES: usize = 4;
pub const CLEARANCE: f64 = 0.05;
pub const MIN_CROSSINGS: usize = 2;
pub const HORIZON: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub center: [f64; 2],
    pub length: f64,
    pub width: f64,
    pub theta: f64,
}

impl Rect {
    fn inside(&self) -> ProjectionSet {
        ProjectionSet::rectangle(DVector::from_column_slice(&self.center), self.length, self.width, self.theta, false)
            .expect("positive sides")
    }

    /// Euclidean distance from `p` to the rectangle (0 inside).
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let p = DVector::from_column_slice(&p);
        (&p - self.inside().project(&p).expect("planar point")).norm()
    }
}

/// Draws one candidate layout.
pub fn candidate(seed: u64) -> Vec<Rect> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..OBSTACLES)
        .map(|_| Rect {
            center: [rng.random_range(0.15..0.85), rng.random_range(0.15..0.85)],
            length: rng.random_range(0.15..0.3),
            width: rng.random_range(0.05..0.15),
            theta: rng.random_range(0.0..PI),
        })
        .collect()
}

/// Number of obstacles the straight start-goal segment passes through.
pub fn crossings(rects: &[Rect]) -> usize {
    const SAMPLES: usize = 400;
    rects
        .iter()
        .filter(|r| {
            (0..=SAMPLES).any(|i| {
                let s = i as f64 / SAMPLES as f64;
                let p = [START[0] + s * (GOAL[0] - START[0]), START[1] + s * (GOAL[1] - START[1])];
                r.distance(p) == 0.0
            })
        })
        .count()
}

pub fn accepted(rects: &[Rect]) -> bool {
    rects.iter().all(|r| r.distance(START) >= CLEARANCE && r.distance(GOAL) >= CLEARANCE) && crossings(rects) >= MIN_CROSSINGS
}

/// The first `count` accepted seeds (from 0) with their layouts.
pub fn layouts(count: usize) -> Vec<(u64, Vec<Rect>)> {
    (0u64..)
        .map(|seed| (seed, candidate(seed)))
        .filter(|(_, rects)| accepted(rects))
        .take(count)
        .collect()
}

/// Problem config text for case `index` (1-based) of the bundled set.
pub fn case_toml(index: usize, seed: u64, rects: &[Rect]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Point-car avoidance, layout seed {seed} (first accepted seeds of the layout generator).");
    let _ = writeln!(s, "version = 1");
    let _ = writeln!(s, "name = \"obstacle_cars_case{index}\"");
    let _ = writeln!(s, "kind = \"planning\"");
    let _ = writeln!(s, "solver = \"alspg\"");
    let _ = writeln!(s, "horizon = {HORIZON}");
    let _ = writeln!(s, "initial_state = [{:?}, {:?}, 0.0, 0.0]", START[0], START[1]);
    let _ = writeln!(s, "control_bounds = {{ lower = [-5.0, -5.0], upper = [5.0, 5.0] }}");
    let _ = writeln!(s);
    let _ = writeln!(s, "[model]\nname = \"double_integrator\"\ndt = 0.05\n");
    let _ = writeln!(s, "[cost]\ntype = \"quadratic\"");
    let _ = writeln!(s, "target = [{:?}, {:?}, 0.0, 0.0]", GOAL[0], GOAL[1]);
    let _ = writeln!(s, "terminal = [0.1, 0.1, 0.1, 0.1]\ncontrol = [1e-4, 1e-4]\n");
    let _ = writeln!(s, "[options]\nepsilon_outer = 1e-6\nmax_iters = 5000\n");
    for (i, r) in rects.iter().enumerate() {
        let _ = writeln!(s, "[[constraints]]\nname = \"obstacle{}\"", i + 1);
        let _ = writeln!(s, "selector = {{ kind = \"state\", components = [0, 1] }}");
        let _ = writeln!(
            s,
            "set = {{ type = \"rectangle\", outside = true, center = [{:?}, {:?}], length = {:?}, width = {:?}, theta = {:?} }}\n",
            r.center[0], r.center[1], r.length, r.width, r.theta
        );
    }
    s
}
