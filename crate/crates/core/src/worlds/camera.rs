/// Observations are `IMAGE_SIZE x IMAGE_SIZE` pixels.
pub const IMAGE_SIZE: usize = 50;

/// Fixed map from the image plane to pixel coordinates: the square
/// `center +- half_extent` fills the whole image, +y pointing up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub center: [f64; 2],
    pub half_extent: f64,
}

impl Viewport {
    /// Image-plane point to continuous `(column, row)` pixel coordinates.
    pub fn to_pixel(&self, p: [f64; 2]) -> [f64; 2] {
        let scale = IMAGE_SIZE as f64 / (2.0 * self.half_extent);
        [
            (p[0] - self.center[0] + self.half_extent) * scale,
            (self.center[1] + self.half_extent - p[1]) * scale,
        ]
    }

    /// Inverse of [`Viewport::to_pixel`].
    pub fn from_pixel(&self, px: [f64; 2]) -> [f64; 2] {
        let scale = 2.0 * self.half_extent / IMAGE_SIZE as f64;
        [
            px[0] * scale + self.center[0] - self.half_extent,
            self.center[1] + self.half_extent - px[1] * scale,
        ]
    }
}

/// Tilts the scene plane by `yaw_deg` about its horizontal axis, projects
/// orthographically `(x, y) -> (x, y cos yaw)` and applies the viewport.
pub fn camera_project(scene: [f64; 2], yaw_deg: f64, viewport: &Viewport) -> [f64; 2] {
    let c = yaw_deg.to_radians().cos();
    viewport.to_pixel([scene[0], scene[1] * c])
}

/// Scene point seen at a continuous pixel position.
pub(crate) fn camera_unproject(px: [f64; 2], yaw_deg: f64, viewport: &Viewport) -> [f64; 2] {
    let c = yaw_deg.to_radians().cos();
    let p = viewport.from_pixel(px);
    [p[0], p[1] / c]
}
