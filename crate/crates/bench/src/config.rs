//! Problem-config schema (TOML, versioned, unknown fields rejected).
//!
//! The format is documented in `docs/config.md`.

use std::path::Path;

use alspg::models::PlanarArm;
use alspg::projection::{HalfspaceRow, ProjectionSet};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BenchError, ValidationError};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Ik,
    RobustIk,
    Planning,
    Mpc,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ik => "ik",
            Self::RobustIk => "robust_ik",
            Self::Planning => "planning",
            Self::Mpc => "mpc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Augmented-Lagrangian SPG with every set handled by projection.
    Alspg,
    /// ALSPG with outside-rectangle position constraints rewritten as
    /// scalar penetration sums.
    AlspgNoproj,
    /// Unconstrained iLQR baseline.
    Ilqr,
    /// Plain SPG over the control domain.
    Spg,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Alspg => "alspg",
            Self::AlspgNoproj => "alspg_noproj",
            Self::Ilqr => "ilqr",
            Self::Spg => "spg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Alspg, Self::AlspgNoproj, Self::Ilqr, Self::Spg].into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: ProblemKind,
    pub model: ModelSpec,
    /// Number of control steps (planning and MPC).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Initial state, or the starting joint configuration for IK.
    pub initial_state: Vec<f64>,
    /// Per-step control guess, repeated over the horizon (default zeros).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_control: Option<Vec<f64>>,
    /// Componentwise bounds on every control (the shooting domain).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_bounds: Option<BoundsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chance: Option<ChanceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mpc: Option<MpcSpec>,
    pub solver: SolverKind,
    #[serde(default)]
    pub options: SolverOptionsSpec,
    /// Required whenever the config draws random numbers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Kinematic planar arm `q_{t+1} = q_t + dt * qdot_t`.
    PlanarArm {
        links: Vec<f64>,
        /// Uniform joint limits `[lower, upper]` (default `[-pi, pi]`).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        joint_limits: Option<[f64; 2]>,
        #[serde(default = "default_dt")]
        dt: f64,
    },
    DoubleIntegrator {
        #[serde(default = "default_dt")]
        dt: f64,
    },
    PusherSlider {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_length: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_width: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu_contact: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu_ground: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
    },
}

fn default_dt() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    /// End-effector reaching for the planar arm.
    Reaching {
        goal: [f64; 2],
        terminal_weight: f64,
        #[serde(default)]
        running_weight: f64,
        control_weight: f64,
    },
    /// Diagonal quadratic tracking of `target`.
    Quadratic {
        target: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        running: Option<Vec<f64>>,
        terminal: Vec<f64>,
        control: Vec<f64>,
        /// State components compared as angles.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        angles: Vec<usize>,
        /// Seeded uniform perturbation `target += U(-j, j)` per component.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_jitter: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub selector: SelectorSpec,
    /// Set applied at each selected timestep.
    pub set: SetSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectorSpec {
    /// Selected components of the state at the selected timesteps.
    State {
        #[serde(default)]
        timesteps: Timesteps,
        components: Vec<usize>,
    },
    /// Planar-arm end-effector position (for IK: the single pose).
    EndEffector {
        #[serde(default)]
        timesteps: Timesteps,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum Timesteps {
    #[default]
    #[serde(with = "all_tag")]
    All,
    #[serde(with = "terminal_tag")]
    Terminal,
    List(Vec<usize>),
}

macro_rules! unit_tag {
    ($module:ident, $tag:literal) => {
        mod $module {
            use serde::{Deserialize, Deserializer, Serializer};
            pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str($tag)
            }
            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
                let s = String::deserialize(d)?;
                if s == $tag {
                    Ok(())
                } else {
                    Err(serde::de::Error::custom(concat!("expected \"", $tag, "\"")))
                }
            }
        }
    };
}
unit_tag!(all_tag, "all");
unit_tag!(terminal_tag, "terminal");

impl Timesteps {
    /// Timesteps `1..=horizon` picked out by the selector.
    pub fn resolve(&self, horizon: usize) -> Vec<usize> {
        match self {
            Self::All => (1..=horizon).collect(),
            Self::Terminal => vec![horizon],
            Self::List(list) => list.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    pub normal: Vec<f64>,
    pub bound: f64,
}

/// Serializable set descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Bounds {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Halfspace {
        normal: Vec<f64>,
        bound: f64,
    },
    Slab {
        normal: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<f64>,
    },
    /// `lower <= 1/2 ||x - c||^2 <= upper`.
    Annulus {
        center: Vec<f64>,
        lower: f64,
        upper: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    BallOutside {
        center: Vec<f64>,
        radius: f64,
    },
    Circle {
        center: Vec<f64>,
        radius: f64,
    },
    Point {
        target: Vec<f64>,
    },
    Rectangle {
        center: [f64; 2],
        length: f64,
        width: f64,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        outside: bool,
    },
    Polytope {
        rows: Vec<RowSpec>,
        #[serde(default)]
        outside: bool,
    },
    SecondOrderCone {
        dim: usize,
    },
}

impl SetSpec {
    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::Bounds { .. } => "bounds",
            Self::Halfspace { .. } => "halfspace",
            Self::Slab { .. } => "slab",
            Self::Annulus { .. } => "annulus",
            Self::Ball { .. } => "ball",
            Self::BallOutside { .. } => "ball_outside",
            Self::Circle { .. } => "circle",
            Self::Point { .. } => "point",
            Self::Rectangle { .. } => "rectangle",
            Self::Polytope { .. } => "polytope",
            Self::SecondOrderCone { .. } => "second_order_cone",
        }
    }

    /// Builds the set; `path` locates errors.
    pub fn build(&self, path: &str) -> Result<ProjectionSet, ValidationError> {
        let v = |x: &[f64]| DVector::from_column_slice(x);
        let err = |e: alspg::ProjectionError| ValidationError::new(path, e.to_string());
        let finite = |name: &str, xs: &[f64]| -> Result<(), ValidationError> {
            if xs.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(ValidationError::new(format!("{path}.{name}"), "must be finite"))
            }
        };
        let positive = |name: &str, x: f64| -> Result<(), ValidationError> {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(ValidationError::new(format!("{path}.{name}"), "must be positive and finite"))
            }
        };
        match self {
            Self::Bounds { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(ValidationError::new(format!("{path}.upper"), "length differs from lower"));
                }
                ProjectionSet::bounds(v(lower), v(upper)).map_err(err)
            }
            Self::Halfspace { normal, bound } => {
                finite("normal", normal)?;
                finite("bound", &[*bound])?;
                ProjectionSet::halfspace(v(normal), *bound).map_err(err)
            }
            Self::Slab { normal, lower, upper } => {
                finite("normal", normal)?;
                ProjectionSet::slab(v(normal), *lower, *upper).map_err(err)
            }
            Self::Annulus { center, lower, upper } => {
                finite("center", center)?;
                ProjectionSet::annulus(v(center), *lower, *upper).map_err(err)
            }
            Self::Ball { center, radius } => {
                finite("center", center)?;
                positive("radius", *radius)?;
                ProjectionSet::ball(v(center), *radius).map_err(err)
            }
            Self::BallOutside { center, radius } => {
                finite("center", center)?;
                positive("radius", *radius)?;
                ProjectionSet::ball_outside(v(center), *radius).map_err(err)
            }
            Self::Circle { center, radius } => {
                finite("center", center)?;
                positive("radius", *radius)?;
                ProjectionSet::sphere(v(center), *radius).map_err(err)
            }
            Self::Point { target } => {
                finite("target", target)?;
                if target.is_empty() {
                    return Err(ValidationError::new(format!("{path}.target"), "must not be empty"));
                }
                Ok(ProjectionSet::point(v(target)))
            }
            Self::Rectangle {
                center,
                length,
                width,
                theta,
                outside,
            } => {
                finite("center", center)?;
                finite("theta", &[*theta])?;
                positive("length", *length)?;
                positive("width", *width)?;
                ProjectionSet::rectangle(v(center), *length, *width, *theta, *outside).map_err(err)
            }
            Self::Polytope { rows, outside } => {
                if rows.is_empty() {
                    return Err(ValidationError::new(format!("{path}.rows"), "needs at least one row"));
                }
                let dim = rows[0].normal.len();
                let mut built = Vec::with_capacity(rows.len());
                for (i, r) in rows.iter().enumerate() {
                    if r.normal.len() != dim {
                        return Err(ValidationError::new(format!("{path}.rows[{i}].normal"), "dimension differs from row 0"));
                    }
                    finite(&format!("rows[{i}].normal"), &r.normal)?;
                    built.push(HalfspaceRow::new(v(&r.normal), r.bound));
                }
                let set = if *outside {
                    ProjectionSet::PolytopeOut { rows: built }
                } else {
                    ProjectionSet::PolytopeIn { rows: built }
                };
                set.validate().map_err(err)?;
                Ok(set)
            }
            Self::SecondOrderCone { dim } => {
                if *dim < 2 {
                    return Err(ValidationError::new(format!("{path}.dim"), "must be at least 2"));
                }
                Ok(ProjectionSet::SecondOrderCone { dim: *dim })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChanceSpec {
    /// Mean slope of the uncertain plane `a^T p <= 0`.
    pub mu: [f64; 2],
    /// Symmetric square root of the slope covariance, row-major.
    pub sigma_sqrt: [[f64; 2]; 2],
    /// Required probability.
    pub eta: f64,
    /// Monte-Carlo samples used to report the satisfaction rate.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcSpec {
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disturbances: Vec<DisturbanceSpec>,
    /// Measured-residual level that counts as recovered after a disturbance.
    #[serde(default = "default_recovery_tol")]
    pub recovery_tol: f64,
}

fn default_recovery_tol() -> f64 {
    1e-3
}

/// Stop once the measured state is within tolerance of the cost target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    /// Euclidean tolerance on these components.
    pub position_components: Vec<usize>,
    pub position_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_component: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_tol: Option<f64>,
}

/// Adds `delta` to the measured state produced by step `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub step: usize,
    pub delta: Vec<f64>,
}

/// Overrides of the solver defaults; unset fields keep the library defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptionsSpec {
    /// SPG projected-gradient tolerance (ALSPG: final inner tolerance).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_outer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_outer: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_growth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_epsilon_start: Option<f64>,
    /// iLQR relative cost-decrease tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ilqr_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ilqr_max_iters: Option<usize>,
}

impl SolverOptionsSpec {
    pub fn spg(&self) -> alspg::SpgOptions {
        let d = alspg::SpgOptions::default();
        alspg::SpgOptions {
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            memory: self.memory.unwrap_or(d.memory),
            trace_iterates: false,
            ..d
        }
    }

    pub fn alspg(&self) -> alspg::AlspgOptions {
        let d = alspg::AlspgOptions::default();
        alspg::AlspgOptions {
            epsilon_outer: self.epsilon_outer.unwrap_or(d.epsilon_outer),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            rho0: self.rho0.unwrap_or(d.rho0),
            rho_growth: self.rho_growth.unwrap_or(d.rho_growth),
            inner_epsilon_start: self.inner_epsilon_start.unwrap_or(d.inner_epsilon_start),
            inner: self.spg(),
            ..d
        }
    }

    pub fn ilqr(&self) -> alspg::IlqrOptions {
        let d = alspg::IlqrOptions::default();
        alspg::IlqrOptions {
            tol: self.ilqr_tol.unwrap_or(d.tol),
            max_iters: self.ilqr_max_iters.unwrap_or(d.max_iters),
            ..d
        }
    }

    fn validate(&self) -> Result<(), ValidationError> {
        let positive = [
            ("options.epsilon", self.epsilon),
            ("options.epsilon_outer", self.epsilon_outer),
            ("options.rho0", self.rho0),
            ("options.inner_epsilon_start", self.inner_epsilon_start),
            ("options.ilqr_tol", self.ilqr_tol),
        ];
        for (path, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(ValidationError::new(path, "must be positive and finite"));
                }
            }
        }
        if let Some(g) = self.rho_growth {
            if !(g > 1.0 && g.is_finite()) {
                return Err(ValidationError::new("options.rho_growth", "must be greater than 1"));
            }
        }
        for (path, v) in [
            ("options.max_iters", self.max_iters),
            ("options.memory", self.memory),
            ("options.max_outer", self.max_outer),
            ("options.ilqr_max_iters", self.ilqr_max_iters),
        ] {
            if v == Some(0) {
                return Err(ValidationError::new(path, "must be at least 1"));
            }
        }
        self.ilqr().validate().map_err(|e| ValidationError::new("options", e))?;
        self.alspg().validate().map_err(|e| ValidationError::new("options", e.to_string()))
    }
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PlanarArm { .. } => "planar_arm",
            Self::DoubleIntegrator { .. } => "double_integrator",
            Self::PusherSlider { .. } => "pusher_slider",
        }
    }

    pub fn arm(&self) -> Result<PlanarArm, ValidationError> {
        match self {
            Self::PlanarArm { links, joint_limits, .. } => {
                if links.is_empty() || links.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                    return Err(ValidationError::new("model.links", "needs at least one positive, finite link length"));
                }
                let err = |e: alspg::models::ModelError| ValidationError::new("model", e.to_string());
                match joint_limits {
                    None => PlanarArm::new(links.clone()).map_err(err),
                    Some([lo, hi]) => {
                        if !(lo < hi) {
                            return Err(ValidationError::new("model.joint_limits", "lower must be below upper"));
                        }
                        let n = links.len();
                        PlanarArm::with_limits(links.clone(), DVector::from_element(n, *lo), DVector::from_element(n, *hi))
                            .map_err(err)
                    }
                }
            }
            _ => Err(ValidationError::new("model.name", "this problem kind needs a planar_arm model")),
        }
    }

    /// `(state_dim, control_dim)` of the dynamics.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::PlanarArm { links, .. } => (links.len(), links.len()),
            Self::DoubleIntegrator { .. } => (4, 2),
            Self::PusherSlider { .. } => (4, 2),
        }
    }
}

impl ChanceSpec {
    pub fn mu(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mu)
    }

    pub fn sigma_sqrt(&self) -> DMatrix<f64> {
        let s = self.sigma_sqrt;
        DMatrix::from_row_slice(2, 2, &[s[0][0], s[0][1], s[1][0], s[1][1]])
    }
}

impl ProblemConfig {
    /// Parses TOML text; errors carry the failing field path.
    pub fn from_toml(text: &str) -> Result<Self, ValidationError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ValidationError::new("", e.message().to_string()))?;
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ValidationError::new(path, e.into_inner().message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path.display(), e))?;
        Self::from_toml(&text).map_err(|e| BenchError::validation(path.display().to_string(), e))
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("{}_{}", self.kind.as_str(), self.model.name()))
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(0)
    }

    /// Canonical JSON: keys sorted, defaults filled in. Two configs that
    /// differ only in field order or in spelling out defaults are equal.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("json value serializes")
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }

    /// Semantic checks beyond the schema.
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.version != CONFIG_VERSION {
            return Err(ValidationError::new(
                "version",
                format!("unsupported config version {} (this build reads version {CONFIG_VERSION})", self.version),
            ));
        }
        self.options.validate()?;
        let (m, n) = self.model.dims();
        self.validate_model()?;
        if self.initial_state.len() != m {
            return Err(ValidationError::new("initial_state", format!("expected {m} values, got {}", self.initial_state.len())));
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(ValidationError::new("initial_state", "must be finite"));
        }
        if let Some(u) = &self.initial_control {
            if u.len() != n {
                return Err(ValidationError::new("initial_control", format!("expected {n} values, got {}", u.len())));
            }
        }
        if let Some(b) = &self.control_bounds {
            if b.lower.len() != n || b.upper.len() != n {
                return Err(ValidationError::new("control_bounds", format!("bounds need {n} values each")));
            }
            if b.lower.iter().zip(&b.upper).any(|(l, u)| !(l <= u)) {
                return Err(ValidationError::new("control_bounds", "lower must not exceed upper"));
            }
        }
        let dynamic = matches!(self.kind, ProblemKind::Planning | ProblemKind::Mpc);
        if dynamic {
            match self.horizon {
                Some(h) if h >= 2 => {}
                _ => return Err(ValidationError::new("horizon", "planning and mpc need a horizon of at least 2")),
            }
        } else if self.horizon.is_some() {
            return Err(ValidationError::new("horizon", "only planning and mpc problems have a horizon"));
        }
        self.validate_cost()?;
        self.validate_constraints()?;
        self.validate_kind()
    }

    fn validate_model(&self) -> Result<(), ValidationError> {
        let positive = |path: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(ValidationError::new(path, "must be positive and finite")),
            _ => Ok(()),
        };
        match &self.model {
            ModelSpec::PlanarArm { dt, .. } => {
                self.model.arm()?;
                positive("model.dt", Some(*dt))
            }
            ModelSpec::DoubleIntegrator { dt } => positive("model.dt", Some(*dt)),
            ModelSpec::PusherSlider {
                half_length,
                half_width,
                mu_contact,
                mu_ground,
                dt,
            } => {
                positive("model.half_length", *half_length)?;
                positive("model.half_width", *half_width)?;
                positive("model.mu_contact", *mu_contact)?;
                positive("model.mu_ground", *mu_ground)?;
                positive("model.dt", *dt)
            }
        }
    }

    fn validate_cost(&self) -> Result<(), ValidationError> {
        let needs_cost = matches!(self.kind, ProblemKind::Planning | ProblemKind::Mpc);
        let Some(cost) = &self.cost else {
            return if needs_cost {
                Err(ValidationError::new("cost", "planning and mpc problems need a cost"))
            } else {
                Ok(())
            };
        };
        if !needs_cost {
            return Err(ValidationError::new("cost", "IK problems minimize the joint displacement; remove the cost"));
        }
        let (m, n) = self.model.dims();
        match cost {
            CostSpec::Reaching {
                goal,
                terminal_weight,
                running_weight,
                control_weight,
            } => {
                if !matches!(self.model, ModelSpec::PlanarArm { .. }) {
                    return Err(ValidationError::new("cost.type", "reaching costs need a planar_arm model"));
                }
                if goal.iter().any(|g| !g.is_finite()) {
                    return Err(ValidationError::new("cost.goal", "must be finite"));
                }
                for (path, w) in [
                    ("cost.terminal_weight", terminal_weight),
                    ("cost.running_weight", running_weight),
                    ("cost.control_weight", control_weight),
                ] {
                    if !(*w >= 0.0 && w.is_finite()) {
                        return Err(ValidationError::new(path, "must be nonnegative and finite"));
                    }
                }
            }
            CostSpec::Quadratic {
                target,
                running,
                terminal,
                control,
                angles,
                target_jitter,
            } => {
                let lens = [
                    ("cost.target", Some(target.len()), m),
                    ("cost.running", running.as_ref().map(Vec::len), m),
                    ("cost.terminal", Some(terminal.len()), m),
                    ("cost.control", Some(control.len()), n),
                    ("cost.target_jitter", target_jitter.as_ref().map(Vec::len), m),
                ];
                for (path, len, want) in lens {
                    if let Some(len) = len {
                        if len != want {
                            return Err(ValidationError::new(path, format!("expected {want} values, got {len}")));
                        }
                    }
                }
                let weights = terminal.iter().chain(control).chain(running.iter().flatten());
                if weights.into_iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                    return Err(ValidationError::new("cost", "weights must be nonnegative and finite"));
                }
                if let Some(&c) = angles.iter().find(|&&c| c >= m) {
                    return Err(ValidationError::new("cost.angles", format!("component {c} out of range")));
                }
                if let Some(j) = target_jitter {
                    if j.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                        return Err(ValidationError::new("cost.target_jitter", "must be nonnegative and finite"));
                    }
                    if self.seed.is_none() {
                        return Err(ValidationError::new("seed", "required: cost.target_jitter draws random numbers"));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_constraints(&self) -> Result<(), ValidationError> {
        let (m, _) = self.model.dims();
        let horizon = self.horizon();
        for (i, c) in self.constraints.iter().enumerate() {
            let path = format!("constraints[{i}]");
            let set = c.set.build(&format!("{path}.set"))?;
            let (timesteps, dim) = match &c.selector {
                SelectorSpec::State { timesteps, components } => {
                    if self.kind == ProblemKind::Ik || self.kind == ProblemKind::RobustIk {
                        return Err(ValidationError::new(format!("{path}.selector.kind"), "IK constraints act on the end effector"));
                    }
                    if components.is_empty() {
                        return Err(ValidationError::new(format!("{path}.selector.components"), "must not be empty"));
                    }
                    if let Some(&c) = components.iter().find(|&&c| c >= m) {
                        return Err(ValidationError::new(format!("{path}.selector.components"), format!("component {c} out of range")));
                    }
                    (timesteps, components.len())
                }
                SelectorSpec::EndEffector { timesteps } => {
                    if !matches!(self.model, ModelSpec::PlanarArm { .. }) {
                        return Err(ValidationError::new(format!("{path}.selector.kind"), "end_effector needs a planar_arm model"));
                    }
                    (timesteps, 2)
                }
            };
            if set.dim() != dim {
                return Err(ValidationError::new(
                    format!("{path}.set"),
                    format!("set has dimension {} but the selector yields {dim}", set.dim()),
                ));
            }
            if let Timesteps::List(list) = timesteps {
                if self.kind == ProblemKind::Ik {
                    return Err(ValidationError::new(format!("{path}.selector.timesteps"), "IK has no timesteps"));
                }
                if list.is_empty() || list.iter().any(|&t| t == 0 || t > horizon) {
                    return Err(ValidationError::new(
                        format!("{path}.selector.timesteps"),
                        format!("timesteps must lie in 1..={horizon}"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_kind(&self) -> Result<(), ValidationError> {
        let solver_err = |msg: &str| Err(ValidationError::new("solver", msg.to_string()));
        match self.kind {
            ProblemKind::Ik => {
                let arm = self.model.arm()?;
                if self.constraints.len() != 1 || !matches!(self.constraints[0].selector, SelectorSpec::EndEffector { .. }) {
                    return Err(ValidationError::new("constraints", "IK needs exactly one end_effector constraint"));
                }
                if !arm.joint_limits().contains(&DVector::from_column_slice(&self.initial_state)).unwrap_or(false) {
                    return Err(ValidationError::new("initial_state", "outside the joint limits"));
                }
                if self.solver != SolverKind::Alspg {
                    return solver_err("IK problems are solved with alspg");
                }
            }
            ProblemKind::RobustIk => {
                let arm = self.model.arm()?;
                let Some(chance) = &self.chance else {
                    return Err(ValidationError::new("chance", "robust_ik needs a chance section"));
                };
                if !(chance.eta > 0.0 && chance.eta < 1.0) {
                    return Err(ValidationError::new("chance.eta", "must lie in (0, 1)"));
                }
                if chance.samples == 0 {
                    return Err(ValidationError::new("chance.samples", "must be at least 1"));
                }
                let s = chance.sigma_sqrt;
                if s[0][1] != s[1][0] || chance.mu.iter().chain(s.iter().flatten()).any(|v| !v.is_finite()) {
                    return Err(ValidationError::new("chance.sigma_sqrt", "must be a finite symmetric matrix"));
                }
                if self.seed.is_none() {
                    return Err(ValidationError::new("seed", "required: robust_ik draws Monte-Carlo slope samples"));
                }
                if !self.constraints.is_empty() {
                    return Err(ValidationError::new("constraints", "robust_ik takes its constraint from the chance section"));
                }
                if !arm.joint_limits().contains(&DVector::from_column_slice(&self.initial_state)).unwrap_or(false) {
                    return Err(ValidationError::new("initial_state", "outside the joint limits"));
                }
                if self.solver != SolverKind::Alspg {
                    return solver_err("robust IK problems are solved with alspg");
                }
            }
            ProblemKind::Planning => {
                if matches!(self.solver, SolverKind::Ilqr | SolverKind::Spg) && !self.constraints.is_empty() {
                    return solver_err("ilqr and spg take no state constraints (spg keeps control_bounds)");
                }
            }
            ProblemKind::Mpc => {
                let Some(mpc) = &self.mpc else {
                    return Err(ValidationError::new("mpc", "mpc problems need an mpc section"));
                };
                if mpc.steps == 0 {
                    return Err(ValidationError::new("mpc.steps", "must be at least 1"));
                }
                let (m, _) = self.model.dims();
                for (i, d) in mpc.disturbances.iter().enumerate() {
                    if d.delta.len() != m {
                        return Err(ValidationError::new(format!("mpc.disturbances[{i}].delta"), format!("expected {m} values")));
                    }
                }
                if let Some(stop) = &mpc.stop {
                    if !matches!(self.cost, Some(CostSpec::Quadratic { .. })) {
                        return Err(ValidationError::new("mpc.stop", "stop tests compare against a quadratic cost target"));
                    }
                    let comps = stop.position_components.iter().chain(stop.angle_component.iter());
                    if comps.into_iter().any(|&c| c >= m) {
                        return Err(ValidationError::new("mpc.stop", "component out of range"));
                    }
                    if stop.angle_component.is_some() != stop.angle_tol.is_some() {
                        return Err(ValidationError::new("mpc.stop", "angle_component and angle_tol go together"));
                    }
                }
                match self.solver {
                    SolverKind::Alspg => {}
                    SolverKind::Ilqr if self.constraints.is_empty() => {}
                    SolverKind::Ilqr => return solver_err("ilqr takes no state constraints"),
                    _ => return solver_err("mpc runs with alspg or ilqr"),
                }
            }
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a config and applies command-line overrides.
pub fn load_with_overrides(path: &Path, seed: Option<u64>, solver: Option<SolverKind>) -> Result<ProblemConfig, BenchError> {
    let mut config = ProblemConfig::load(path)?;
    if let Some(s) = seed {
        config.seed = Some(s);
    }
    if let Some(s) = solver {
        config.solver = s;
    }
    config.validate().map_err(|e| BenchError::validation(path.display().to_string(), e))?;
    Ok(config)
}
