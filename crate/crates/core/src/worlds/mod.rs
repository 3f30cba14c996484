//! Deterministic 2-D rebuilds of the point-mass, reacher and cart-pole
//! tasks, each rendered to a 50x50 RGB observation under a [`DomainConfig`].

mod camera;
mod dynamics;
mod render;

pub use camera::{camera_project, Viewport, IMAGE_SIZE};
pub use dynamics::{env_reset, env_step, goal_distance, pendulum_energy, reacher_fk, StepOutcome, ARENA_HALF};
pub use render::{render_observation, Observation};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::numkit::NumError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("action has {got} components, expected {expected}")]
    ActionDim { expected: usize, got: usize },
    #[error("non-finite action component {index}")]
    NonFiniteAction { index: usize },
    #[error("state does not belong to a {0} world")]
    WrongKind(EnvKind),
    #[error("invalid domain config: {0}")]
    Domain(String),
    #[error("invalid environment spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvKind {
    Point,
    Reacher,
    Pendulum,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::Point, EnvKind::Reacher, EnvKind::Pendulum];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Point => "point",
            EnvKind::Reacher => "reacher",
            EnvKind::Pendulum => "pendulum",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "point" => Ok(EnvKind::Point),
            "reacher" => Ok(EnvKind::Reacher),
            "pendulum" => Ok(EnvKind::Pendulum),
            other => Err(format!("unknown environment `{other}` (point | reacher | pendulum)")),
        }
    }
}

/// The MDP constants of one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub state_dim: usize,
    pub action_dim: usize,
    pub horizon: usize,
    pub discount: f64,
    /// Seconds per environment step.
    pub dt: f64,
    /// Integration substeps per environment step.
    pub substeps: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    /// Point only: a goal used by every episode instead of a sampled one.
    /// The start position is drawn from the same stream either way.
    pub point_goal: Option<[f64; 2]>,
}

impl EnvSpec {
    pub fn new(kind: EnvKind) -> Self {
        match kind {
            EnvKind::Point => Self {
                kind,
                state_dim: 4,
                action_dim: 2,
                horizon: 80,
                discount: 0.99,
                dt: 0.05,
                substeps: 1,
                action_low: vec![-2.0; 2],
                action_high: vec![2.0; 2],
                point_goal: None,
            },
            EnvKind::Reacher => Self {
                kind,
                state_dim: 8,
                action_dim: 2,
                horizon: 80,
                discount: 0.99,
                dt: 0.05,
                substeps: 1,
                action_low: vec![-3.0; 2],
                action_high: vec![3.0; 2],
                point_goal: None,
            },
            EnvKind::Pendulum => Self {
                kind,
                state_dim: 5,
                action_dim: 1,
                horizon: 80,
                discount: 0.99,
                dt: 0.05,
                substeps: 5,
                action_low: vec![-1.0],
                action_high: vec![1.0],
                point_goal: None,
            },
        }
    }

    /// Integration step length.
    pub fn substep_dt(&self) -> f64 {
        self.dt / self.substeps as f64
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if self.horizon < 1 {
            return Err(WorldError::Spec("horizon must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(WorldError::Spec(format!("discount {} outside [0, 1]", self.discount)));
        }
        if !(self.dt > 0.0) || self.substeps == 0 {
            return Err(WorldError::Spec("dt must be positive with at least one substep".into()));
        }
        if self.action_low.len() != self.action_dim
            || self.action_high.len() != self.action_dim
            || self.action_low.iter().zip(&self.action_high).any(|(l, h)| !(l < h))
        {
            return Err(WorldError::Spec("action bounds must be one ordered interval per action dimension".into()));
        }
        if let Some(goal) = self.point_goal {
            if self.kind != EnvKind::Point {
                return Err(WorldError::Spec("a fixed goal applies to the point world only".into()));
            }
            if goal.iter().any(|g| !(g.abs() <= ARENA_HALF)) {
                return Err(WorldError::Spec(format!("point goal {goal:?} lies outside the arena")));
            }
        }
        Ok(())
    }

    /// Clips `action` into the per-dimension bounds after checking it.
    pub fn clip_action(&self, action: &[f64]) -> Result<Vec<f64>, WorldError> {
        if action.len() != self.action_dim {
            return Err(WorldError::ActionDim { expected: self.action_dim, got: action.len() });
        }
        if let Some(index) = action.iter().position(|a| !a.is_finite()) {
            return Err(WorldError::NonFiniteAction { index });
        }
        Ok(action
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(a, (lo, hi))| a.clamp(*lo, *hi))
            .collect())
    }
}

/// Low-dimensional physical state. Angles are radians in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorldState {
    Point { pos: [f64; 2], vel: [f64; 2], target: [f64; 2] },
    /// `angles[0]` is the shoulder angle, `angles[1]` the elbow angle
    /// relative to the first link.
    Reacher { angles: [f64; 2], ang_vel: [f64; 2], target: [f64; 2] },
    /// Pole angle measured from upright.
    Pendulum { angle: f64, ang_vel: f64, cart_x: f64, cart_vel: f64 },
}

impl WorldState {
    pub fn kind(&self) -> EnvKind {
        match self {
            WorldState::Point { .. } => EnvKind::Point,
            WorldState::Reacher { .. } => EnvKind::Reacher,
            WorldState::Pendulum { .. } => EnvKind::Pendulum,
        }
    }
}

pub type Rgb = [f64; 3];

/// Everything that distinguishes the expert view of a task from the novice's.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub camera_yaw_deg: f64,
    pub background: Rgb,
    /// Point mass, reacher arm, or pendulum pole.
    pub agent_color: Rgb,
    pub target_color: Rgb,
    /// Reacher only.
    pub link_lengths: [f64; 2],
}

const GRAY: Rgb = [0.85, 0.85, 0.85];

impl DomainConfig {
    /// Demonstrator view: camera straight on.
    pub fn expert(kind: EnvKind) -> Self {
        match kind {
            EnvKind::Point => Self {
                camera_yaw_deg: 0.0,
                background: GRAY,
                agent_color: [0.2, 0.2, 0.9],
                target_color: [0.9, 0.3, 0.3],
                link_lengths: [0.1, 0.1],
            },
            EnvKind::Reacher => Self {
                camera_yaw_deg: 0.0,
                background: [0.8, 0.8, 0.8],
                agent_color: [0.2, 0.2, 0.6],
                target_color: [0.9, 0.3, 0.3],
                link_lengths: [0.12, 0.08],
            },
            EnvKind::Pendulum => Self {
                camera_yaw_deg: 0.0,
                background: GRAY,
                agent_color: [0.9, 0.5, 0.2],
                target_color: GRAY,
                link_lengths: [0.1, 0.1],
            },
        }
    }

    /// Learner view: 40 degree camera tilt and a recolored target for point
    /// and reacher (reacher also changes arm lengths and background), pole
    /// color only for the pendulum.
    pub fn novice(kind: EnvKind) -> Self {
        let expert = Self::expert(kind);
        match kind {
            EnvKind::Point => Self { camera_yaw_deg: 40.0, target_color: [0.3, 0.9, 0.3], ..expert },
            EnvKind::Reacher => Self {
                camera_yaw_deg: 40.0,
                background: [0.55, 0.55, 0.55],
                target_color: [0.3, 0.9, 0.3],
                link_lengths: [0.1, 0.1],
                ..expert
            },
            EnvKind::Pendulum => Self { agent_color: [0.2, 0.5, 0.9], ..expert },
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if !(-80.0..=80.0).contains(&self.camera_yaw_deg) {
            return Err(WorldError::Domain(format!("camera yaw {} outside [-80, 80] degrees", self.camera_yaw_deg)));
        }
        for (name, c) in [("background", self.background), ("agent", self.agent_color), ("target", self.target_color)] {
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(WorldError::Domain(format!("{name} color {c:?} outside [0, 1]")));
            }
        }
        if self.link_lengths.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(WorldError::Domain(format!("link lengths {:?} must be positive", self.link_lengths)));
        }
        Ok(())
    }
}

/// Policy input vector for a state.
///
/// * point: `[p - target, v]`
/// * reacher: `[sin a1, sin a2, cos a1, cos a2, w1, w2, target - fingertip]`
/// * pendulum: `[cos a, sin a, w, cart x, cart v]`
pub fn proprio_state(state: &WorldState, domain: &DomainConfig) -> Vec<f64> {
    match *state {
        WorldState::Point { pos, vel, target } => vec![pos[0] - target[0], pos[1] - target[1], vel[0], vel[1]],
        WorldState::Reacher { angles, ang_vel, target } => {
            let tip = reacher_fk(angles, domain.link_lengths);
            vec![
                angles[0].sin(),
                angles[1].sin(),
                angles[0].cos(),
                angles[1].cos(),
                ang_vel[0],
                ang_vel[1],
                target[0] - tip[0],
                target[1] - tip[1],
            ]
        }
        WorldState::Pendulum { angle, ang_vel, cart_x, cart_vel } => {
            vec![angle.cos(), angle.sin(), ang_vel, cart_x, cart_vel]
        }
    }
}

/// One environment in one domain: the unit rollouts are collected from.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub spec: EnvSpec,
    pub domain: DomainConfig,
}

impl World {
    pub fn new(spec: EnvSpec, domain: DomainConfig) -> Result<Self, WorldError> {
        spec.validate()?;
        domain.validate()?;
        Ok(Self { spec, domain })
    }

    pub fn kind(&self) -> EnvKind {
        self.spec.kind
    }

    pub fn reset<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> WorldState {
        env_reset(&self.spec, &self.domain, rng)
    }

    pub fn step(&self, state: &WorldState, action: &[f64]) -> Result<StepOutcome, WorldError> {
        env_step(&self.spec, &self.domain, state, action)
    }

    pub fn render(&self, state: &WorldState) -> Observation {
        render_observation(state, &self.domain)
    }

    pub fn proprio(&self, state: &WorldState) -> Vec<f64> {
        proprio_state(state, &self.domain)
    }

    pub fn goal_distance(&self, state: &WorldState) -> f64 {
        goal_distance(state, &self.domain)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.5), 0.5);
    }

    #[test]
    fn proprio_lengths_match_spec() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for kind in EnvKind::ALL {
            let spec = EnvSpec::new(kind);
            let domain = DomainConfig::expert(kind);
            let s = env_reset(&spec, &domain, &mut rng);
            assert_eq!(proprio_state(&s, &domain).len(), spec.state_dim, "{kind}");
        }
    }

    #[test]
    fn point_at_target_has_zero_offset() {
        let s = WorldState::Point { pos: [0.3, -0.2], vel: [0.0, 0.0], target: [0.3, -0.2] };
        let v = proprio_state(&s, &DomainConfig::expert(EnvKind::Point));
        assert_eq!(&v[..2], &[0.0, 0.0]);
    }

    #[test]
    fn reacher_encoding_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = EnvSpec::new(EnvKind::Reacher);
        let domain = DomainConfig::novice(EnvKind::Reacher);
        for _ in 0..100 {
            let s = env_reset(&spec, &domain, &mut rng);
            let v = proprio_state(&s, &domain);
            assert!(v[..4].iter().all(|x| (-1.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn default_domains_are_valid() {
        for kind in EnvKind::ALL {
            DomainConfig::expert(kind).validate().unwrap();
            DomainConfig::novice(kind).validate().unwrap();
            EnvSpec::new(kind).validate().unwrap();
        }
        let bad = DomainConfig { camera_yaw_deg: 85.0, ..DomainConfig::expert(EnvKind::Point) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn clip_action_checks() {
        let spec = EnvSpec::new(EnvKind::Point);
        assert_eq!(spec.clip_action(&[5.0, -0.5]).unwrap(), vec![2.0, -0.5]);
        assert!(matches!(spec.clip_action(&[f64::NAN, 0.0]), Err(WorldError::NonFiniteAction { index: 0 })));
        assert!(spec.clip_action(&[0.0]).is_err());
    }
}
