use super::camera::camera_unproject;
use super::dynamics::{reacher_fk, ARENA_HALF, POLE_HALF_LENGTH};
use super::{DomainConfig, Rgb, Viewport, WorldState, IMAGE_SIZE};
use crate::numkit::Tensor;

const POINT_RADIUS: f64 = 0.12;
const REACHER_TARGET_RADIUS: f64 = 0.02;
const REACHER_LINK_HALF_WIDTH: f64 = 0.012;
const POLE_HALF_WIDTH: f64 = 0.06;
const CART_HALF_SIZE: [f64; 2] = [0.25, 0.1];
const CART_COLOR: Rgb = [0.3, 0.3, 0.3];

/// A rendered `50 x 50 x 3` image with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub image: Tensor,
}

impl Observation {
    pub fn shape() -> [usize; 3] {
        [IMAGE_SIZE, IMAGE_SIZE, 3]
    }
}

enum Shape {
    Disc { center: [f64; 2], radius: f64 },
    /// Rectangle around the segment `a -> b`.
    Bar { a: [f64; 2], b: [f64; 2], half_width: f64 },
    Rect { center: [f64; 2], half: [f64; 2] },
}

impl Shape {
    fn covers(&self, p: [f64; 2]) -> bool {
        match *self {
            Shape::Disc { center, radius } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Bar { a, b, half_width } => {
                let (ux, uy) = (b[0] - a[0], b[1] - a[1]);
                let len = ux.hypot(uy);
                if len == 0.0 {
                    return false;
                }
                let (dx, dy) = (p[0] - a[0], p[1] - a[1]);
                let along = (dx * ux + dy * uy) / len;
                let across = (dx * uy - dy * ux) / len;
                (0.0..=len).contains(&along) && across.abs() <= half_width
            }
            Shape::Rect { center, half } => {
                (p[0] - center[0]).abs() <= half[0] && (p[1] - center[1]).abs() <= half[1]
            }
        }
    }
}

fn viewport(state: &WorldState) -> Viewport {
    match state {
        WorldState::Point { .. } => Viewport { center: [0.0, 0.0], half_extent: ARENA_HALF + 0.25 },
        WorldState::Reacher { .. } => Viewport { center: [0.0, 0.0], half_extent: 0.25 },
        WorldState::Pendulum { .. } => Viewport { center: [0.0, 0.4], half_extent: 1.25 },
    }
}

/// Scene in back-to-front order.
fn scene(state: &WorldState, domain: &DomainConfig) -> Vec<(Shape, Rgb)> {
    match *state {
        WorldState::Point { pos, target, .. } => vec![
            (Shape::Disc { center: target, radius: POINT_RADIUS }, domain.target_color),
            (Shape::Disc { center: pos, radius: POINT_RADIUS }, domain.agent_color),
        ],
        WorldState::Reacher { angles, target, .. } => {
            let [l1, _] = domain.link_lengths;
            let elbow = [l1 * angles[0].cos(), l1 * angles[0].sin()];
            let tip = reacher_fk(angles, domain.link_lengths);
            let hw = REACHER_LINK_HALF_WIDTH;
            vec![
                (Shape::Disc { center: target, radius: REACHER_TARGET_RADIUS }, domain.target_color),
                (Shape::Bar { a: [0.0, 0.0], b: elbow, half_width: hw }, domain.agent_color),
                (Shape::Bar { a: elbow, b: tip, half_width: hw }, domain.agent_color),
            ]
        }
        WorldState::Pendulum { angle, cart_x, .. } => {
            let len = 2.0 * POLE_HALF_LENGTH;
            let top = [cart_x + len * angle.sin(), len * angle.cos()];
            vec![
                (Shape::Rect { center: [cart_x, 0.0], half: CART_HALF_SIZE }, CART_COLOR),
                (Shape::Bar { a: [cart_x, 0.0], b: top, half_width: POLE_HALF_WIDTH }, domain.agent_color),
            ]
        }
    }
}

/// Rasterizes `state` as seen from `domain`'s camera. Each pixel takes the
/// color of the front-most shape covering the scene point under its center.
pub fn render_observation(state: &WorldState, domain: &DomainConfig) -> Observation {
    let vp = viewport(state);
    let shapes = scene(state, domain);
    let mut data = Vec::with_capacity(IMAGE_SIZE * IMAGE_SIZE * 3);
    for row in 0..IMAGE_SIZE {
        for col in 0..IMAGE_SIZE {
            let p = camera_unproject([col as f64 + 0.5, row as f64 + 0.5], domain.camera_yaw_deg, &vp);
            let color = shapes
                .iter()
                .rev()
                .find(|(s, _)| s.covers(p))
                .map_or(domain.background, |(_, c)| *c);
            data.extend_from_slice(&color);
        }
    }
    let image = Tensor::new(Observation::shape().to_vec(), data).expect("fixed image shape");
    Observation { image }
}
