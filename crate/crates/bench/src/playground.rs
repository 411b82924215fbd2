//! Reactive-IK playground protocol (version 1) and its per-connection
//! session. Transport-free: the websocket server feeds text frames in and
//! sends the returned frames back. See `docs/playground-protocol.md`.

use std::collections::VecDeque;
use std::path::Path;
use std::time::{Duration, Instant};

use alspg::models::{IkSession, PlanarArm};
use alspg::{AlspgOptions, SpgOptions, Termination};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::{ModelSpec, SetSpec};
use crate::error::{BenchError, ValidationError};

pub const PROTOCOL_VERSION: u32 = 1;

/// Solver budget per message, tuned for interactive rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaygroundSettings {
    /// Wall-clock budget per reply in milliseconds.
    #[serde(default = "default_budget_ms")]
    pub budget_ms: u64,
    /// Outer augmented-Lagrangian iterations per reply.
    #[serde(default = "default_outer")]
    pub outer_iterations: usize,
    /// Inner SPG iteration cap per outer iteration.
    #[serde(default = "default_inner")]
    pub inner_max_iters: usize,
    /// Residual below which a reply reports `converged`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Number of past end-effector positions returned as the trail.
    #[serde(default = "default_trail")]
    pub trail: usize,
}

fn default_budget_ms() -> u64 {
    20
}
fn default_outer() -> usize {
    3
}
fn default_inner() -> usize {
    200
}
fn default_tolerance() -> f64 {
    1e-4
}
fn default_trail() -> usize {
    50
}

impl Default for PlaygroundSettings {
    fn default() -> Self {
        Self {
            budget_ms: default_budget_ms(),
            outer_iterations: default_outer(),
            inner_max_iters: default_inner(),
            tolerance: default_tolerance(),
            trail: default_trail(),
        }
    }
}

/// Model file given to `serve --model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaygroundModel {
    pub version: u32,
    pub model: ModelSpec,
    /// Starting joint configuration (default zeros).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_q: Option<Vec<f64>>,
    #[serde(default)]
    pub playground: PlaygroundSettings,
}

impl PlaygroundModel {
    pub fn from_toml(text: &str) -> Result<Self, ValidationError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ValidationError::new("", e.message().to_string()))?;
        let m: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| ValidationError::new(e.path().to_string(), e.into_inner().message().to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path.display(), e))?;
        Self::from_toml(&text).map_err(|e| BenchError::validation(path.display().to_string(), e))
    }

    pub fn arm_model(links: Vec<f64>) -> Self {
        Self {
            version: 1,
            model: ModelSpec::PlanarArm {
                links,
                joint_limits: None,
                dt: 0.05,
            },
            initial_q: None,
            playground: PlaygroundSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.version != 1 {
            return Err(ValidationError::new("version", format!("unsupported model file version {}", self.version)));
        }
        let arm = self.model.arm()?;
        if let Some(q) = &self.initial_q {
            check_q(&arm, q, "initial_q")?;
        }
        let s = &self.playground;
        if s.budget_ms == 0 {
            return Err(ValidationError::new("playground.budget_ms", "must be positive"));
        }
        if s.outer_iterations == 0 || s.inner_max_iters == 0 {
            return Err(ValidationError::new("playground", "iteration budgets must be at least 1"));
        }
        if !(s.tolerance > 0.0 && s.tolerance.is_finite()) {
            return Err(ValidationError::new("playground.tolerance", "must be positive and finite"));
        }
        Ok(())
    }

    fn initial_q(&self, arm: &PlanarArm) -> DVector<f64> {
        self.initial_q.as_deref().map(DVector::from_column_slice).unwrap_or_else(|| DVector::zeros(arm.dof()))
    }
}

fn check_q(arm: &PlanarArm, q: &[f64], path: &str) -> Result<(), ValidationError> {
    if q.len() != arm.dof() {
        return Err(ValidationError::new(path, format!("expected {} joint angles, got {}", arm.dof(), q.len())));
    }
    if !arm.joint_limits().contains(&DVector::from_column_slice(q)).unwrap_or(false) {
        return Err(ValidationError::new(path, "outside the joint limits"));
    }
    Ok(())
}

/// Client-to-server messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    /// Re-solve against `set`, starting from `q` if given (a measured pose)
    /// or from the last reply.
    Solve {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        set: SetSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<Vec<f64>>,
    },
    /// Forget multipliers, trail and pose (back to `q` or the initial pose).
    Reset {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<Vec<f64>>,
    },
    /// Swap the arm for this session only.
    Configure {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        links: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Residual at or below the tolerance.
    Converged,
    /// Still improving; send the same set again to continue.
    InProgress,
    /// The solver stalled with a positive residual (e.g. out of reach).
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireCounters {
    pub n_f: usize,
    pub n_grad: usize,
    pub n_jac: usize,
}

/// Server-to-client messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Ready {
        v: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        links: Vec<f64>,
        q: Vec<f64>,
        /// Joint positions from the base to the end effector.
        joints: Vec<[f64; 2]>,
        budget_ms: u64,
    },
    Solution {
        v: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        q: Vec<f64>,
        joints: Vec<[f64; 2]>,
        end_effector: [f64; 2],
        /// Recent end-effector positions, oldest first, ending at this reply.
        trail: Vec<[f64; 2]>,
        /// `||fk(q) - P(fk(q))||_inf` against the set in this message.
        residual: f64,
        status: SolveStatus,
        counters: WireCounters,
        outer_iterations: usize,
        /// Set when the reply exceeded the wall-clock budget.
        budget: bool,
        elapsed_ms: f64,
    },
    Error {
        v: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        code: ErrorCode,
        message: String,
        /// Offending field, when known.
        #[serde(skip_serializing_if = "Option::is_none")]
        path: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Not JSON, or not a known message shape.
    Malformed,
    /// Well-formed but semantically invalid (bad set, wrong joint count).
    Invalid,
    UnsupportedVersion,
    Solver,
}

/// Per-connection solver state. Nothing is shared between sessions.
pub struct PlaygroundSession {
    settings: PlaygroundSettings,
    initial_q: DVector<f64>,
    ik: IkSession,
    q: DVector<f64>,
    trail: VecDeque<[f64; 2]>,
}

fn point(p: &DVector<f64>) -> [f64; 2] {
    [p[0], p[1]]
}

impl PlaygroundSession {
    pub fn new(model: &PlaygroundModel) -> Result<Self, ValidationError> {
        model.validate()?;
        let arm = model.model.arm()?;
        let q = model.initial_q(&arm);
        let mut session = Self {
            settings: model.playground.clone(),
            initial_q: q.clone(),
            ik: IkSession::new(arm),
            q,
            trail: VecDeque::new(),
        };
        session.ik.options = session.solver_options();
        Ok(session)
    }

    fn solver_options(&self) -> AlspgOptions {
        AlspgOptions {
            time_limit: Some(self.budget()),
            inner: SpgOptions {
                max_iters: self.settings.inner_max_iters,
                trace_iterates: false,
                ..SpgOptions::default()
            },
            ..AlspgOptions::default()
        }
    }

    fn budget(&self) -> Duration {
        Duration::from_millis(self.settings.budget_ms)
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn arm(&self) -> &PlanarArm {
        self.ik.arm()
    }

    /// Greeting sent when a connection opens.
    pub fn ready(&self, id: Option<u64>) -> ServerMessage {
        ServerMessage::Ready {
            v: PROTOCOL_VERSION,
            id,
            links: self.arm().link_lengths().to_vec(),
            q: self.q.as_slice().to_vec(),
            joints: self.arm().link_positions(&self.q),
            budget_ms: self.settings.budget_ms,
        }
    }

    /// Handles one text frame and returns the reply frame.
    pub fn handle_text(&mut self, text: &str) -> String {
        let reply = match parse_message(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => e,
        };
        serde_json::to_string(&reply).expect("reply serializes")
    }

    pub fn handle(&mut self, msg: ClientMessage) -> ServerMessage {
        let (v, id) = match &msg {
            ClientMessage::Solve { v, id, .. } | ClientMessage::Reset { v, id, .. } | ClientMessage::Configure { v, id, .. } => {
                (*v, *id)
            }
        };
        if let Some(v) = v.filter(|v| *v != PROTOCOL_VERSION) {
            return error(id, ErrorCode::UnsupportedVersion, format!("protocol version {v} is not supported (server speaks {PROTOCOL_VERSION})"), Some("v"));
        }
        match msg {
            ClientMessage::Solve { set, q, .. } => self.solve(id, &set, q),
            ClientMessage::Reset { q, .. } => {
                let q = match q {
                    Some(q) => match check_q(self.arm(), &q, "q") {
                        Ok(()) => DVector::from_vec(q),
                        Err(e) => return invalid(id, e),
                    },
                    None => self.initial_q.clone(),
                };
                self.ik.reset();
                self.trail.clear();
                self.q = q;
                self.ready(id)
            }
            ClientMessage::Configure { links, q, .. } => {
                let arm = match (ModelSpec::PlanarArm {
                    links,
                    joint_limits: None,
                    dt: 0.05,
                })
                .arm()
                {
                    Ok(arm) => arm,
                    Err(e) => return invalid(id, ValidationError::new("links", e.message)),
                };
                let q = match q {
                    Some(q) => match check_q(&arm, &q, "q") {
                        Ok(()) => DVector::from_vec(q),
                        Err(e) => return invalid(id, e),
                    },
                    None => DVector::zeros(arm.dof()),
                };
                self.ik = IkSession::new(arm);
                self.ik.options = self.solver_options();
                self.trail.clear();
                self.initial_q = q.clone();
                self.q = q;
                self.ready(id)
            }
        }
    }

    fn solve(&mut self, id: Option<u64>, set: &SetSpec, q: Option<Vec<f64>>) -> ServerMessage {
        let task_set = match set.build("set") {
            Ok(s) if s.dim() == 2 => s,
            Ok(s) => return invalid(id, ValidationError::new("set", format!("task sets are planar; got dimension {}", s.dim()))),
            Err(e) => return invalid(id, e),
        };
        if let Some(q) = q {
            if let Err(e) = check_q(self.arm(), &q, "q") {
                return invalid(id, e);
            }
            self.q = DVector::from_vec(q);
        }
        let started = Instant::now();
        let step = match self.ik.step(&self.q, &task_set, self.settings.outer_iterations) {
            Ok(step) => step,
            Err(e) => return error(id, ErrorCode::Solver, e.to_string(), None),
        };
        let elapsed = started.elapsed();
        self.q = step.q;
        let ee = point(&self.arm().fk(&self.q));
        self.trail.push_back(ee);
        while self.trail.len() > self.settings.trail.max(1) {
            self.trail.pop_front();
        }
        let report = &step.report;
        let status = if step.residual <= self.settings.tolerance {
            SolveStatus::Converged
        } else if report.termination == Termination::Stagnation {
            SolveStatus::Infeasible
        } else {
            SolveStatus::InProgress
        };
        let timed_out = report.message.as_deref() == Some("time limit reached");
        ServerMessage::Solution {
            v: PROTOCOL_VERSION,
            id,
            q: self.q.as_slice().to_vec(),
            joints: self.arm().link_positions(&self.q),
            end_effector: ee,
            trail: self.trail.iter().copied().collect(),
            residual: step.residual,
            status,
            counters: WireCounters {
                n_f: report.counters.n_f,
                n_grad: report.counters.n_grad,
                n_jac: report.counters.n_jac,
            },
            outer_iterations: report.iterations,
            budget: timed_out || elapsed > self.budget(),
            elapsed_ms: elapsed.as_secs_f64() * 1e3,
        }
    }
}

fn error(id: Option<u64>, code: ErrorCode, message: String, path: Option<&str>) -> ServerMessage {
    ServerMessage::Error {
        v: PROTOCOL_VERSION,
        id,
        code,
        message,
        path: path.map(str::to_string),
    }
}

fn invalid(id: Option<u64>, e: ValidationError) -> ServerMessage {
    error(id, ErrorCode::Invalid, e.message, Some(&e.path))
}

/// Parses a frame; failures become a `malformed` error reply that echoes
/// the `id` when one can be recovered.
pub fn parse_message(text: &str) -> Result<ClientMessage, ServerMessage> {
    let value = serde_json::from_str::<serde_json::Value>(text).ok();
    let id = value.as_ref().and_then(|v| v.get("id")).and_then(|i| i.as_u64());
    let malformed = |path: String, message: String| ServerMessage::Error {
        v: PROTOCOL_VERSION,
        id,
        code: ErrorCode::Malformed,
        message,
        path: (!path.is_empty() && path != ".").then_some(path),
    };
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        // Tagged enums lose the path of nested errors; locate set errors
        // by deserializing the set on its own.
        if let Some(set) = value.as_ref().and_then(|v| v.get("set")) {
            if let Err(inner) = serde_path_to_error::deserialize::<_, SetSpec>(set.clone()) {
                let sub = inner.path().to_string();
                let path = if sub == "." { "set".to_string() } else { format!("set.{sub}") };
                return malformed(path, inner.into_inner().to_string());
            }
        }
        malformed(e.path().to_string(), e.into_inner().to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> PlaygroundSession {
        let mut model = PlaygroundModel::arm_model(vec![1.0, 1.0, 1.0]);
        model.initial_q = Some(vec![0.3, 0.3, 0.3]);
        PlaygroundSession::new(&model).unwrap()
    }

    fn reply(s: &mut PlaygroundSession, text: &str) -> ServerMessage {
        serde_json::from_str(&s.handle_text(text)).unwrap()
    }

    #[test]
    fn static_target_converges_monotonically() {
        let mut s = session();
        let mut residuals = Vec::new();
        for i in 0..50 {
            let msg = format!(r#"{{"type":"solve","id":{i},"set":{{"type":"point","target":[1.2,1.6]}}}}"#);
            match reply(&mut s, &msg) {
                ServerMessage::Solution { residual, id, .. } => {
                    assert_eq!(id, Some(i));
                    residuals.push(residual);
                }
                other => panic!("{other:?}"),
            }
        }
        // Nonincreasing until round-off level.
        assert!(residuals.windows(2).all(|w| w[1] <= w[0] || w[1] <= 1e-10), "{residuals:?}");
        assert!(*residuals.last().unwrap() <= 1e-4, "{residuals:?}");
    }

    #[test]
    fn malformed_messages_get_structured_errors() {
        let mut s = session();
        match reply(&mut s, "not json") {
            ServerMessage::Error { code, .. } => assert_eq!(code, ErrorCode::Malformed),
            other => panic!("{other:?}"),
        }
        match reply(&mut s, r#"{"type":"solve","id":4,"set":{"type":"ball","center":[1,1]}}"#) {
            ServerMessage::Error { code, id, path, message, .. } => {
                assert_eq!(code, ErrorCode::Malformed);
                assert_eq!(id, Some(4));
                assert_eq!(path.as_deref(), Some("set"));
                assert!(message.contains("radius"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        match reply(&mut s, r#"{"type":"solve","set":{"type":"point","target":[1,1,1]}}"#) {
            ServerMessage::Error { code, .. } => assert_eq!(code, ErrorCode::Invalid),
            other => panic!("{other:?}"),
        }
        match reply(&mut s, r#"{"type":"solve","v":2,"set":{"type":"point","target":[1,1]}}"#) {
            ServerMessage::Error { code, .. } => assert_eq!(code, ErrorCode::UnsupportedVersion),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            reply(&mut s, r#"{"type":"solve","set":{"type":"point","target":[1,1]}}"#),
            ServerMessage::Solution { .. }
        ));
    }

    #[test]
    fn unreachable_target_reports_infeasible_eventually() {
        let mut s = session();
        let mut last = None;
        for _ in 0..40 {
            last = Some(reply(&mut s, r#"{"type":"solve","set":{"type":"point","target":[5.0,0.0]}}"#));
        }
        match last.unwrap() {
            ServerMessage::Solution { residual, status, .. } => {
                assert!((residual - 2.0).abs() < 1e-2, "{residual}");
                assert_ne!(status, SolveStatus::Converged);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn configure_swaps_the_arm() {
        let mut s = session();
        match reply(&mut s, r#"{"type":"configure","links":[0.5,0.5]}"#) {
            ServerMessage::Ready { links, q, .. } => {
                assert_eq!(links, vec![0.5, 0.5]);
                assert_eq!(q, vec![0.0, 0.0]);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(s.arm().dof(), 2);
    }
}
