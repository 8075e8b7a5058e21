//! Planar angle kernel, marker-derived axes and rectilinear projection
//! between perspective crops and the equirectangular sphere.
//!
//! Image coordinates follow the usual raster convention: `x` grows to the
//! right and `y` grows downwards. Angles measured here are relative
//! indicators in image space, not physical joint angles.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::MarkerFrame;

pub type Vec2 = Vector2<f64>;

/// Norm below which a vector has no usable direction.
pub const DEGENERATE_NORM: f64 = 1e-12;
/// Minimum marker edge length in pixels.
pub const DEGENERATE_EDGE: f64 = 1e-9;

/// Slack used when testing whether a projected point lies on the frame.
const FRAME_SLACK_PX: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("vector norm below {DEGENERATE_NORM}")]
    DegenerateVector,
    #[error("marker has an edge shorter than {DEGENERATE_EDGE} px")]
    DegenerateMarker,
    #[error("pixel ({0}, {1}) lies outside the perspective frame")]
    OutOfFrame(f64, f64),
    #[error("direction lies behind the virtual camera")]
    BehindCamera,
    #[error("direction projects outside the field of view")]
    OutOfFov,
    #[error("invalid view parameters: {0}")]
    InvalidView(&'static str),
}

/// Unsigned angle between two planar vectors, in degrees within `[0, 180]`.
pub fn angle_between(u: Vec2, v: Vec2) -> Result<f64, GeometryError> {
    let nu = u.norm();
    let nv = v.norm();
    if nu < DEGENERATE_NORM || nv < DEGENERATE_NORM {
        return Err(GeometryError::DegenerateVector);
    }
    let cos = (u.dot(&v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

/// Virtual pinhole camera looking into a 360° panorama.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewParams {
    /// View longitude in degrees.
    pub theta_deg: f64,
    /// View latitude in degrees.
    pub phi_deg: f64,
    /// Horizontal field of view in degrees.
    pub fov_deg: f64,
    pub out_width: u32,
    pub out_height: u32,
    pub pano_width: u32,
    pub pano_height: u32,
}

impl Default for ViewParams {
    fn default() -> Self {
        Self {
            theta_deg: 0.0,
            phi_deg: 0.0,
            fov_deg: 90.0,
            out_width: 640,
            out_height: 640,
            pano_width: 3840,
            pano_height: 1920,
        }
    }
}

impl ViewParams {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(GeometryError::InvalidView("fov_deg must lie in (0, 180)"));
        }
        if !(-180.0..=180.0).contains(&self.theta_deg) {
            return Err(GeometryError::InvalidView("theta_deg must lie in [-180, 180]"));
        }
        if !(-90.0..=90.0).contains(&self.phi_deg) {
            return Err(GeometryError::InvalidView("phi_deg must lie in [-90, 90]"));
        }
        if self.out_width == 0 || self.out_height == 0 {
            return Err(GeometryError::InvalidView("output frame must be non-empty"));
        }
        Ok(())
    }

    fn center(&self) -> (f64, f64) {
        (self.out_width as f64 / 2.0, self.out_height as f64 / 2.0)
    }

    /// Focal length in pixels for the horizontal field of view.
    fn focal_px(&self) -> f64 {
        (self.out_width as f64 / 2.0) / (self.fov_deg.to_radians() / 2.0).tan()
    }

    /// Camera basis in world coordinates: (forward, right, up), with world
    /// `y` pointing up and longitude zero along world `z`.
    fn basis(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let (st, ct) = self.theta_deg.to_radians().sin_cos();
        let (sp, cp) = self.phi_deg.to_radians().sin_cos();
        let forward = Vector3::new(cp * st, sp, cp * ct);
        let right = Vector3::new(ct, 0.0, -st);
        let up = Vector3::new(-sp * st, cp, -sp * ct);
        (forward, right, up)
    }

    fn in_frame(&self, px: f64, py: f64) -> bool {
        px >= -FRAME_SLACK_PX
            && py >= -FRAME_SLACK_PX
            && px <= self.out_width as f64 + FRAME_SLACK_PX
            && py <= self.out_height as f64 + FRAME_SLACK_PX
    }
}

/// Un-projects a perspective pixel onto the sphere, returning
/// `(longitude, latitude)` in degrees.
pub fn perspective_to_sphere(px: f64, py: f64, view: &ViewParams) -> Result<(f64, f64), GeometryError> {
    if !view.in_frame(px, py) {
        return Err(GeometryError::OutOfFrame(px, py));
    }
    let (cx, cy) = view.center();
    if px == cx && py == cy {
        // Optical axis.
        return Ok((view.theta_deg, view.phi_deg));
    }
    let f = view.focal_px();
    let x = (px - cx) / f;
    let y_up = -(py - cy) / f;
    let (forward, right, up) = view.basis();
    let ray = forward + right * x + up * y_up;
    let lon = ray.x.atan2(ray.z).to_degrees();
    let lat = ray.y.atan2(ray.x.hypot(ray.z)).to_degrees();
    Ok((lon, lat))
}

/// Projects a sphere direction into the perspective frame.
pub fn sphere_to_perspective(lon_deg: f64, lat_deg: f64, view: &ViewParams) -> Result<(f64, f64), GeometryError> {
    let (cx, cy) = view.center();
    if lon_deg == view.theta_deg && lat_deg == view.phi_deg {
        return Ok((cx, cy));
    }
    let (sl, cl) = lon_deg.to_radians().sin_cos();
    let (sb, cb) = lat_deg.to_radians().sin_cos();
    let dir = Vector3::new(cb * sl, sb, cb * cl);
    let (forward, right, up) = view.basis();
    let z = dir.dot(&forward);
    if z <= 0.0 {
        return Err(GeometryError::BehindCamera);
    }
    let f = view.focal_px();
    let px = cx + f * dir.dot(&right) / z;
    let py = cy - f * dir.dot(&up) / z;
    if !view.in_frame(px, py) {
        return Err(GeometryError::OutOfFov);
    }
    Ok((px, py))
}

/// Linear longitude/latitude to panorama pixel mapping.
pub fn sphere_to_equirect(lon_deg: f64, lat_deg: f64, pano_width: u32, pano_height: u32) -> (f64, f64) {
    let ex = (lon_deg + 180.0) / 360.0 * pano_width as f64;
    let ey = (90.0 - lat_deg) / 180.0 * pano_height as f64;
    (ex, ey)
}

pub fn equirect_to_sphere(ex: f64, ey: f64, pano_width: u32, pano_height: u32) -> (f64, f64) {
    let lon = ex / pano_width as f64 * 360.0 - 180.0;
    let lat = 90.0 - ey / pano_height as f64 * 180.0;
    (lon, lat)
}

/// Horizontal and gravity directions recovered from the reference marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxesFrame {
    pub horizontal: Vec2,
    pub gravity: Vec2,
}

impl AxesFrame {
    pub fn identity() -> Self {
        Self {
            horizontal: Vec2::new(1.0, 0.0),
            gravity: Vec2::new(0.0, 1.0),
        }
    }

    /// Image-space direction of the horizontal axis in degrees (`atan2`, y down).
    pub fn horizontal_deg(&self) -> f64 {
        self.horizontal.y.atan2(self.horizontal.x).to_degrees()
    }
}

/// Averages opposite marker edges: top/bottom for the horizontal axis
/// (left to right) and left/right for gravity (top to bottom).
pub fn marker_axes(marker: &MarkerFrame) -> Result<AxesFrame, GeometryError> {
    let [tl, tr, br, bl] = marker.corners.map(|k| k.position());
    let top = tr - tl;
    let bottom = br - bl;
    let left = bl - tl;
    let right = br - tr;
    if [top, bottom, left, right].iter().any(|e| e.norm() < DEGENERATE_EDGE) {
        return Err(GeometryError::DegenerateMarker);
    }
    let horizontal = (top + bottom) / 2.0;
    let gravity = (left + right) / 2.0;
    if horizontal.norm() < DEGENERATE_EDGE || gravity.norm() < DEGENERATE_EDGE {
        return Err(GeometryError::DegenerateMarker);
    }
    Ok(AxesFrame {
        horizontal: horizontal.normalize(),
        gravity: gravity.normalize(),
    })
}

/// Rotates a planar vector counter-clockwise in the mathematical sense,
/// which is clockwise on screen because image `y` points down.
pub fn rotate(v: Vec2, deg: f64) -> Vec2 {
    let (s, c) = deg.to_radians().sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}
