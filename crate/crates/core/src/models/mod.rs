//! Desk-scale models: planar arm, point car among obstacles, pusher-slider,
//! and the robust-IK chance-constraint map.

mod arm;
mod chance;
mod double_integrator;
mod ik;
mod obstacles;
mod pusher;

use thiserror::Error;

pub use arm::{ArmKinematics, EndEffectorPath, PlanarArm, ReachingCost};
pub use chance::{normal_quantile, ChanceConstraintMap};
pub use double_integrator::DoubleIntegrator2D;
pub use ik::{
    closed_loop_ik_step, constrained_ik, ik_problem, robust_ik, satisfaction_rate, IkSession, IkSolution, IkStep,
};
pub use obstacles::{ObstacleEncoding, ObstacleScene, PenetrationSum, RectObstacle};
pub use pusher::{ContactMode, PusherSlider};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error(transparent)]
    Solver(#[from] crate::al::AlError),
}
