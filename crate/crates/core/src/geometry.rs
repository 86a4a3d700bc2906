//! Camera model and equisolid <-> perspective coordinate transforms.
//!
//! Sensor coordinates are millimeters relative to the principal point, with
//! x pointing right and y pointing down (image row order). Polar angles are
//! `atan2(y, x)` normalized into `[-pi, pi)`.
//!
//! Two routes are provided for the projections. The polar functions
//! ([`equisolid_to_perspective`], [`perspective_to_equisolid`]) evaluate the
//! projection formulas literally. The Cartesian helpers
//! ([`back_project_xy`], [`reproject_xy`]) are algebraically equivalent
//! forms that avoid trigonometry and are used in the search kernels.

use std::f64::consts::{FRAC_PI_2, PI};
use std::marker::PhantomData;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concealment::MotionVector;
use crate::error::{Error, Result};

/// Default incident-angle cutoff for perspective back-projection, degrees.
pub const DEFAULT_THETA_LIMIT_DEG: f64 = 89.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ProjectionError {
    /// Incident angle at or beyond the configured cutoff; the point sits at
    /// (or past) the perspective horizon.
    #[error("incident angle {theta_deg:.4} deg reaches limit {limit_deg:.4} deg")]
    DomainOverflow { theta_deg: f64, limit_deg: f64 },
    /// Equisolid radius larger than 2f has no incident angle.
    #[error("equisolid radius {radius} mm exceeds 2f = {max} mm")]
    InvalidRadius { radius: f64, max: f64 },
}

/// Runtime tag for the projection domain a coordinate lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainTag {
    Equisolid,
    Perspective,
}

pub trait Domain: Copy + std::fmt::Debug {
    const TAG: DomainTag;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Equisolid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Perspective;

impl Domain for Equisolid {
    const TAG: DomainTag = DomainTag::Equisolid;
}

impl Domain for Perspective {
    const TAG: DomainTag = DomainTag::Perspective;
}

/// Polar sensor coordinate in millimeters, tagged with its projection domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarCoord<D: Domain> {
    radius: f64,
    angle: f64,
    _domain: PhantomData<D>,
}

impl<D: Domain> PolarCoord<D> {
    /// Builds a coordinate; a negative radius is folded onto the opposite
    /// angle and the angle is wrapped into `[-pi, pi)`.
    pub fn new(radius: f64, angle: f64) -> Self {
        let (radius, angle) = if radius < 0.0 {
            (-radius, angle + PI)
        } else {
            (radius, angle)
        };
        PolarCoord {
            radius,
            angle: wrap_angle(angle),
            _domain: PhantomData,
        }
    }

    pub fn from_cartesian(x: f64, y: f64) -> Self {
        Self::new(x.hypot(y), y.atan2(x))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn domain(&self) -> DomainTag {
        D::TAG
    }

    pub fn to_cartesian(&self) -> (f64, f64) {
        let (s, c) = self.angle.sin_cos();
        (self.radius * c, self.radius * s)
    }

    fn with_radius<E: Domain>(&self, radius: f64) -> PolarCoord<E> {
        PolarCoord {
            radius,
            angle: self.angle,
            _domain: PhantomData,
        }
    }
}

fn wrap_angle(angle: f64) -> f64 {
    if (-PI..PI).contains(&angle) {
        return angle;
    }
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

/// Continuous pixel coordinate; integer values are sample centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: f64,
    pub y: f64,
}

impl PixelCoord {
    pub fn new(x: f64, y: f64) -> Self {
        PixelCoord { x, y }
    }
}

/// Equisolid fisheye camera: lens, sensor and raster geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Focal length f, mm.
    pub focal_length: f64,
    /// Sensor extent, mm.
    pub sensor_width: f64,
    pub sensor_height: f64,
    /// Raster extent, pixels.
    pub image_width: usize,
    pub image_height: usize,
    /// Full field of view, degrees.
    pub fov_degrees: f64,
    /// Optical center in continuous pixel coordinates.
    pub principal_point: PixelCoord,
}

impl CameraModel {
    /// Validated camera with the principal point at the raster center,
    /// `((W - 1) / 2, (H - 1) / 2)`.
    pub fn new(
        focal_length: f64,
        sensor_width: f64,
        sensor_height: f64,
        image_width: usize,
        image_height: usize,
        fov_degrees: f64,
    ) -> Result<Self> {
        let cam = CameraModel {
            focal_length,
            sensor_width,
            sensor_height,
            image_width,
            image_height,
            fov_degrees,
            principal_point: PixelCoord::new(
                (image_width as f64 - 1.0) / 2.0,
                (image_height as f64 - 1.0) / 2.0,
            ),
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn with_principal_point(mut self, principal_point: PixelCoord) -> Self {
        self.principal_point = principal_point;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.focal_length) {
            return Err(Error::Config(format!(
                "focal length must be positive, got {}",
                self.focal_length
            )));
        }
        if !positive(self.sensor_width) || !positive(self.sensor_height) {
            return Err(Error::Config(format!(
                "sensor size must be positive, got {}x{}",
                self.sensor_width, self.sensor_height
            )));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::Config(format!(
                "image size must be positive, got {}x{}",
                self.image_width, self.image_height
            )));
        }
        if !positive(self.fov_degrees) {
            return Err(Error::Config(format!(
                "field of view must be positive, got {}",
                self.fov_degrees
            )));
        }
        if !self.principal_point.x.is_finite() || !self.principal_point.y.is_finite() {
            return Err(Error::Config("principal point must be finite".into()));
        }
        Ok(())
    }

    /// Horizontal pixel pitch, mm/pixel.
    pub fn pitch_x(&self) -> f64 {
        self.sensor_width / self.image_width as f64
    }

    /// Vertical pixel pitch, mm/pixel.
    pub fn pitch_y(&self) -> f64 {
        self.sensor_height / self.image_height as f64
    }

    pub fn is_square_pixel(&self) -> bool {
        let (px, py) = (self.pitch_x(), self.pitch_y());
        ((px - py) / px).abs() <= 1e-9
    }

    /// Largest equisolid radius reached inside the field of view, mm.
    pub fn max_equisolid_radius(&self) -> f64 {
        let half_fov = (self.fov_degrees / 2.0).min(180.0).to_radians();
        2.0 * self.focal_length * (half_fov / 2.0).sin()
    }

    /// Incident angle (radians) for an equisolid radius, `2 asin(r / 2f)`.
    pub fn incident_angle(&self, equisolid_radius: f64) -> Result<f64, ProjectionError> {
        let max = 2.0 * self.focal_length;
        if equisolid_radius > max {
            return Err(ProjectionError::InvalidRadius {
                radius: equisolid_radius,
                max,
            });
        }
        Ok(2.0 * (equisolid_radius / max).asin())
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x >= 0.0
            && p.y >= 0.0
            && p.x <= (self.image_width - 1) as f64
            && p.y <= (self.image_height - 1) as f64
    }

    /// Whether a pixel lies inside the imaged field-of-view circle.
    pub fn in_fov(&self, p: PixelCoord) -> bool {
        let (x, y) = self.pixel_to_mm(p);
        x.hypot(y) <= self.max_equisolid_radius()
    }

    /// Cartesian sensor offset from the principal point, mm.
    pub fn pixel_to_mm(&self, p: PixelCoord) -> (f64, f64) {
        (
            (p.x - self.principal_point.x) * self.pitch_x(),
            (p.y - self.principal_point.y) * self.pitch_y(),
        )
    }

    pub fn mm_to_pixel(&self, x: f64, y: f64) -> PixelCoord {
        PixelCoord::new(
            x / self.pitch_x() + self.principal_point.x,
            y / self.pitch_y() + self.principal_point.y,
        )
    }
}

/// Pixel position to equisolid polar sensor coordinates. Out-of-raster
/// positions are converted as well; check [`CameraModel::contains`] first
/// where that matters.
pub fn pixel_to_sensor(p: PixelCoord, cam: &CameraModel) -> PolarCoord<Equisolid> {
    let (x, y) = cam.pixel_to_mm(p);
    PolarCoord::from_cartesian(x, y)
}

pub fn sensor_to_pixel(c: PolarCoord<Equisolid>, cam: &CameraModel) -> PixelCoord {
    let (x, y) = c.to_cartesian();
    cam.mm_to_pixel(x, y)
}

/// Back-projects an equisolid coordinate into the perspective domain:
/// `r_p = f tan(2 asin(r_e / 2f))`, angle untouched.
pub fn equisolid_to_perspective(
    c: PolarCoord<Equisolid>,
    cam: &CameraModel,
    theta_limit: f64,
) -> Result<PolarCoord<Perspective>, ProjectionError> {
    let theta = cam.incident_angle(c.radius())?;
    if theta >= theta_limit {
        return Err(ProjectionError::DomainOverflow {
            theta_deg: theta.to_degrees(),
            limit_deg: theta_limit.to_degrees(),
        });
    }
    Ok(c.with_radius(cam.focal_length * theta.tan()))
}

/// Re-projects a perspective coordinate into the equisolid domain:
/// `r_e = 2f sin(atan(r_p / f) / 2)`, angle untouched.
pub fn perspective_to_equisolid(c: PolarCoord<Perspective>, cam: &CameraModel) -> PolarCoord<Equisolid> {
    let f = cam.focal_length;
    c.with_radius(2.0 * f * (0.5 * (c.radius() / f).atan()).sin())
}

/// Back-projects, adds `mv` (in pixel-pitch units) in perspective Cartesian
/// millimeters, and re-projects into the equisolid domain.
pub fn shift_in_perspective(
    c: PolarCoord<Equisolid>,
    mv: MotionVector,
    cam: &CameraModel,
    theta_limit: f64,
) -> Result<PolarCoord<Equisolid>, ProjectionError> {
    let persp = equisolid_to_perspective(c, cam, theta_limit)?;
    if mv.is_zero() {
        return Ok(perspective_to_equisolid(persp, cam));
    }
    let (x, y) = persp.to_cartesian();
    let shifted = PolarCoord::<Perspective>::from_cartesian(
        x + mv.dm as f64 * cam.pitch_x(),
        y + mv.dn as f64 * cam.pitch_y(),
    );
    Ok(perspective_to_equisolid(shifted, cam))
}

/// Cartesian back-projection. Returns perspective-plane millimeters for an
/// equisolid sensor offset `(x, y)`.
///
/// With `s = r_e / 2f` and `c = sqrt(1 - s^2)`, `r_p / r_e = c / (1 - 2 s^2)`.
pub fn back_project_xy(
    x: f64,
    y: f64,
    cam: &CameraModel,
    theta_limit: f64,
) -> Result<(f64, f64), ProjectionError> {
    let r = x.hypot(y);
    let theta = cam.incident_angle(r)?;
    if theta >= theta_limit {
        return Err(ProjectionError::DomainOverflow {
            theta_deg: theta.to_degrees(),
            limit_deg: theta_limit.to_degrees(),
        });
    }
    let s = r / (2.0 * cam.focal_length);
    let scale = (1.0 - s * s).sqrt() / (1.0 - 2.0 * s * s);
    Ok((x * scale, y * scale))
}

/// Cartesian re-projection of perspective-plane millimeters into the
/// equisolid domain.
///
/// With `q = sqrt(1 + r_p^2 / f^2)`, `r_e / r_p = sqrt(2 / (q (q + 1)))`,
/// which stays well conditioned at `r_p = 0`.
#[inline]
pub fn reproject_xy(x: f64, y: f64, inv_f2: f64) -> (f64, f64) {
    let q = (1.0 + (x * x + y * y) * inv_f2).sqrt();
    let scale = (2.0 / (q * (q + 1.0))).sqrt();
    (x * scale, y * scale)
}

/// Upper bound (exclusive) of re-projected equisolid radii, `2f sin 45deg`.
pub fn reprojection_bound(cam: &CameraModel) -> f64 {
    2.0 * cam.focal_length * (FRAC_PI_2 / 2.0).sin()
}
