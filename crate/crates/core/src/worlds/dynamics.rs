use rand::Rng;

use super::{wrap_angle, DomainConfig, EnvSpec, WorldError, WorldState};
use crate::worlds::EnvKind;

/// Half-width of the square point-mass arena.
pub const ARENA_HALF: f64 = 1.0;

const REACHER_DAMPING: f64 = 1.0;

// Cart-pole constants (pole half-length, masses, force per unit action).
pub(crate) const POLE_HALF_LENGTH: f64 = 0.5;
const GRAVITY: f64 = 9.8;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
const FORCE_SCALE: f64 = 10.0;
const CART_LIMIT: f64 = 2.0;
const PENDULUM_INIT_ANGLE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: WorldState,
    pub reward: f64,
}

/// Samples an initial state.
pub fn env_reset<R: Rng + ?Sized>(spec: &EnvSpec, domain: &DomainConfig, rng: &mut R) -> WorldState {
    use std::f64::consts::PI;
    match spec.kind {
        EnvKind::Point => {
            let mut u = || rng.gen_range(-ARENA_HALF..=ARENA_HALF);
            let pos = [u(), u()];
            let sampled = [u(), u()];
            let target = spec.point_goal.unwrap_or(sampled);
            WorldState::Point { pos, vel: [0.0; 2], target }
        }
        EnvKind::Reacher => {
            let [l1, l2] = domain.link_lengths;
            let angles = [wrap_angle(rng.gen_range(-PI..PI)), wrap_angle(rng.gen_range(-PI..PI))];
            let r = rng.gen_range((l1 - l2).abs()..=(l1 + l2));
            let phi = rng.gen_range(-PI..PI);
            WorldState::Reacher { angles, ang_vel: [0.0; 2], target: [r * phi.cos(), r * phi.sin()] }
        }
        EnvKind::Pendulum => WorldState::Pendulum {
            angle: rng.gen_range(-PENDULUM_INIT_ANGLE..=PENDULUM_INIT_ANGLE),
            ang_vel: 0.0,
            cart_x: 0.0,
            cart_vel: 0.0,
        },
    }
}

/// Advances one environment step and returns the true reward of the
/// transition. Episodes never terminate early.
pub fn env_step(
    spec: &EnvSpec,
    domain: &DomainConfig,
    state: &WorldState,
    action: &[f64],
) -> Result<StepOutcome, WorldError> {
    if state.kind() != spec.kind {
        return Err(WorldError::WrongKind(spec.kind));
    }
    let a = spec.clip_action(action)?;
    let h = spec.substep_dt();
    let mut s = *state;
    for _ in 0..spec.substeps {
        s = match s {
            WorldState::Point { mut pos, mut vel, target } => {
                for i in 0..2 {
                    vel[i] += a[i] * h;
                    pos[i] += vel[i] * h;
                }
                WorldState::Point { pos, vel, target }
            }
            WorldState::Reacher { mut angles, mut ang_vel, target } => {
                for i in 0..2 {
                    ang_vel[i] += (a[i] - REACHER_DAMPING * ang_vel[i]) * h;
                    angles[i] = wrap_angle(angles[i] + ang_vel[i] * h);
                }
                WorldState::Reacher { angles, ang_vel, target }
            }
            WorldState::Pendulum { .. } => pendulum_substep(&s, FORCE_SCALE * a[0], h),
        };
    }
    let reward = match s {
        WorldState::Point { pos, target, .. } => -dist(pos, target),
        WorldState::Reacher { angles, target, .. } => {
            let tip = reacher_fk(angles, domain.link_lengths);
            -dist(tip, target) - 0.01 * a.iter().map(|x| x * x).sum::<f64>()
        }
        WorldState::Pendulum { angle, .. } => angle.cos(),
    };
    Ok(StepOutcome { state: s, reward })
}

/// Semi-implicit Euler step of the cart-pole equations of motion with the
/// pole modeled as a uniform rod.
fn pendulum_substep(state: &WorldState, force: f64, h: f64) -> WorldState {
    let WorldState::Pendulum { angle, ang_vel, cart_x, cart_vel } = *state else {
        unreachable!("pendulum_substep on a non-pendulum state")
    };
    let total = CART_MASS + POLE_MASS;
    let (sin, cos) = angle.sin_cos();
    let temp = (force + POLE_MASS * POLE_HALF_LENGTH * ang_vel * ang_vel * sin) / total;
    let ang_acc = (GRAVITY * sin - cos * temp)
        / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total));
    let cart_acc = temp - POLE_MASS * POLE_HALF_LENGTH * ang_acc * cos / total;
    let mut cart_vel = cart_vel + cart_acc * h;
    let mut cart_x = cart_x + cart_vel * h;
    if cart_x.abs() > CART_LIMIT {
        cart_x = cart_x.clamp(-CART_LIMIT, CART_LIMIT);
        cart_vel = 0.0;
    }
    let ang_vel = ang_vel + ang_acc * h;
    let angle = wrap_angle(angle + ang_vel * h);
    WorldState::Pendulum { angle, ang_vel, cart_x, cart_vel }
}

/// Total mechanical energy of the cart-pole, potential measured from the
/// pivot height.
pub fn pendulum_energy(state: &WorldState) -> Option<f64> {
    let WorldState::Pendulum { angle, ang_vel, cart_vel, .. } = *state else { return None };
    let total = CART_MASS + POLE_MASS;
    let l = POLE_HALF_LENGTH;
    let kinetic = 0.5 * total * cart_vel * cart_vel
        + POLE_MASS * l * cart_vel * ang_vel * angle.cos()
        + 0.5 * POLE_MASS * l * l * (4.0 / 3.0) * ang_vel * ang_vel;
    Some(kinetic + POLE_MASS * GRAVITY * l * angle.cos())
}

/// Planar two-link forward kinematics; the elbow angle is relative.
pub fn reacher_fk(angles: [f64; 2], links: [f64; 2]) -> [f64; 2] {
    let a12 = angles[0] + angles[1];
    [
        links[0] * angles[0].cos() + links[1] * a12.cos(),
        links[0] * angles[0].sin() + links[1] * a12.sin(),
    ]
}

/// Distance from the task goal: point and reacher report the Euclidean
/// distance to the target, the pendulum its absolute pole angle.
pub fn goal_distance(state: &WorldState, domain: &DomainConfig) -> f64 {
    match *state {
        WorldState::Point { pos, target, .. } => dist(pos, target),
        WorldState::Reacher { angles, target, .. } => dist(reacher_fk(angles, domain.link_lengths), target),
        WorldState::Pendulum { angle, .. } => angle.abs(),
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
