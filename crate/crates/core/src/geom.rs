//! Pinhole-camera geometry.
//!
//! Conventions used throughout the crate: the projection center sits at the
//! 3D origin, the optical axis is +Z and the image plane is `{Z = f}`. Image
//! points are stored relative to the principal point, so a 2D point `(u, v)`
//! embeds into 3D as `(u, v, f)`.

use nalgebra::{Point2, Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum image displacement that still defines a motion line.
pub const EPS_MOTION: f64 = 1e-9;

/// Triangulation is rejected when `sin(angle(ray, dir))` falls below this.
pub const EPS_PARALLEL: f64 = 1e-6;

/// Cross products of canonical lines at or below this norm mean the lines coincide.
pub const EPS_COINCIDENT: f64 = 1e-12;

/// Components of a unit homogeneous vector at or below this magnitude are
/// treated as zero when choosing the canonical sign.
pub const EPS_SIGN: f64 = 1e-12;

/// A canonical vanishing point whose `|w|` is at or below this is an ideal point.
pub const EPS_IDEAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeomError {
    #[error("focal length must be finite and positive, got {0}")]
    InvalidFocal(f64),
    #[error("point depth {0} is not in front of the projection center")]
    NonPositiveDepth(f64),
    #[error("points are closer than {EPS_MOTION}; no line through them")]
    DegenerateLine,
    #[error("lines coincide; no unique intersection")]
    CoincidentLines,
    #[error("homogeneous vector is zero or not finite")]
    ZeroVector,
    #[error("motion direction is parallel to the projection ray (sin = {0:e})")]
    NearParallel(f64),
    #[error("reconstructed point lies behind the camera (lambda = {0})")]
    BehindCamera(f64),
}

/// Static pinhole camera with square pixels and no distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    focal: f64,
    principal_point: Point2<f64>,
    image_half_extent: Option<Vector2<f64>>,
}

impl Camera {
    pub fn new(focal: f64) -> Result<Self, GeomError> {
        if !(focal.is_finite() && focal > 0.0) {
            return Err(GeomError::InvalidFocal(focal));
        }
        Ok(Self {
            focal,
            principal_point: Point2::origin(),
            image_half_extent: None,
        })
    }

    pub fn with_principal_point(mut self, principal_point: Point2<f64>) -> Self {
        self.principal_point = principal_point;
        self
    }

    pub fn with_half_extent(mut self, half_extent: Vector2<f64>) -> Self {
        self.image_half_extent = Some(half_extent);
        self
    }

    pub fn focal(&self) -> f64 {
        self.focal
    }

    pub fn principal_point(&self) -> Point2<f64> {
        self.principal_point
    }

    pub fn image_half_extent(&self) -> Option<Vector2<f64>> {
        self.image_half_extent
    }

    /// Converts absolute image coordinates to principal-point-relative ones.
    pub fn to_relative(&self, absolute: Point2<f64>) -> Point2<f64> {
        Point2::from(absolute - self.principal_point)
    }

    pub fn to_absolute(&self, relative: Point2<f64>) -> Point2<f64> {
        self.principal_point + relative.coords
    }

    /// Whether a principal-point-relative point falls inside the image bounds.
    /// Unbounded cameras contain every point.
    pub fn contains(&self, p: &Point2<f64>) -> bool {
        match self.image_half_extent {
            None => true,
            Some(h) => p.x.abs() <= h.x && p.y.abs() <= h.y,
        }
    }

    /// 3D embedding of an image point on the plane `Z = f`.
    pub fn embed(&self, p: &Point2<f64>) -> Point3<f64> {
        Point3::new(p.x, p.y, self.focal)
    }
}

/// Homogeneous image point. Stored in canonical form: unit norm with the
/// first non-negligible component positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomPoint2(Vector3<f64>);

/// Homogeneous image line `l1*x + l2*y + l3*w = 0`, normalized so that
/// `(l1, l2)` is a unit normal and the sign is canonical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomLine2(Vector3<f64>);

fn canonical_sign(mut v: Vector3<f64>) -> Vector3<f64> {
    if let Some(c) = v.iter().copied().find(|c| c.abs() > EPS_SIGN) {
        if c < 0.0 {
            v = -v;
        }
    }
    v
}

impl HomPoint2 {
    pub fn new(x: f64, y: f64, w: f64) -> Result<Self, GeomError> {
        Self::from_vector(Vector3::new(x, y, w))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self, GeomError> {
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(GeomError::ZeroVector);
        }
        Ok(Self(canonical_sign(v / n)))
    }

    pub fn from_euclidean(p: &Point2<f64>) -> Self {
        // (x, y, 1) never has zero norm.
        Self(canonical_sign(Vector3::new(p.x, p.y, 1.0).normalize()))
    }

    pub fn coords(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn is_ideal(&self) -> bool {
        self.0.z.abs() <= EPS_IDEAL
    }

    /// Euclidean image point, or `None` for an ideal point.
    pub fn to_euclidean(&self) -> Option<Point2<f64>> {
        if self.is_ideal() {
            None
        } else {
            Some(Point2::new(self.0.x / self.0.z, self.0.y / self.0.z))
        }
    }

    /// Distance between canonical representatives, insensitive to the overall
    /// sign so that near-zero leading components cannot flip the comparison.
    pub fn distance(&self, other: &HomPoint2) -> f64 {
        (self.0 - other.0).norm().min((self.0 + other.0).norm())
    }
}

impl HomLine2 {
    pub fn from_vector(v: Vector3<f64>) -> Result<Self, GeomError> {
        let n = v.xy().norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(GeomError::ZeroVector);
        }
        Ok(Self(canonical_sign(v / n)))
    }

    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, GeomError> {
        Self::from_vector(Vector3::new(a, b, c))
    }

    pub fn coords(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn normal(&self) -> Vector2<f64> {
        self.0.xy()
    }

    /// Signed Euclidean distance from an image point to the line.
    pub fn signed_distance(&self, p: &Point2<f64>) -> f64 {
        self.0.x * p.x + self.0.y * p.y + self.0.z
    }
}

/// Ray from `origin` along the unit vector `dir`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray3 {
    pub origin: Point3<f64>,
    pub dir: Vector3<f64>,
}

impl Ray3 {
    pub fn at(&self, lambda: f64) -> Point3<f64> {
        self.origin + self.dir * lambda
    }

    pub fn distance_to(&self, p: &Point3<f64>) -> f64 {
        let w = p - self.origin;
        (w - self.dir * w.dot(&self.dir)).norm()
    }
}

/// Outcome of intersecting a projection ray with a line through an anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangulationResult {
    /// Closest-approach point on the projection ray.
    pub point: Point3<f64>,
    /// Distance between ray and line at closest approach.
    pub gap: f64,
    /// Ray parameter of `point`; the ray direction has unit length.
    pub lambda: f64,
    /// Line parameter of the closest point on the anchor line.
    pub t: f64,
    /// Lateral offset of `point` from the anchor.
    pub d_x: f64,
    /// Depth offset of `point` from the image plane, `point.z - f`.
    pub d_z: f64,
}

pub fn project(cam: &Camera, p: &Point3<f64>) -> Result<Point2<f64>, GeomError> {
    if p.z.is_nan() || p.z <= 0.0 {
        return Err(GeomError::NonPositiveDepth(p.z));
    }
    let f = cam.focal;
    Ok(Point2::new(f * p.x / p.z, f * p.y / p.z))
}

pub fn backproject_ray(cam: &Camera, p: &Point2<f64>) -> Ray3 {
    Ray3 {
        origin: Point3::origin(),
        dir: Vector3::new(p.x, p.y, cam.focal).normalize(),
    }
}

pub fn image_line_through(p: &Point2<f64>, q: &Point2<f64>) -> Result<HomLine2, GeomError> {
    if (p - q).norm() <= EPS_MOTION {
        return Err(GeomError::DegenerateLine);
    }
    let hp = Vector3::new(p.x, p.y, 1.0);
    let hq = Vector3::new(q.x, q.y, 1.0);
    HomLine2::from_vector(hp.cross(&hq))
}

pub fn intersect_lines(l1: &HomLine2, l2: &HomLine2) -> Result<HomPoint2, GeomError> {
    let x = l1.0.cross(&l2.0);
    if x.norm() <= EPS_COINCIDENT {
        return Err(GeomError::CoincidentLines);
    }
    HomPoint2::from_vector(x)
}

/// 3D direction from the projection center through the embedded vanishing
/// point. Orientation is canonical, not physical: callers must treat `d` and
/// `-d` alike.
pub fn direction_from_vp(cam: &Camera, vp: &HomPoint2) -> Vector3<f64> {
    let h = vp.coords();
    canonical_sign(Vector3::new(h.x, h.y, h.z * cam.focal).normalize())
}

/// Intersects the projection ray with the line `{anchor + t * dir}`.
///
/// With noisy inputs the two lines are skew; the reconstructed point is the
/// closest-approach point on the ray, so the camera center, the image point
/// and the result stay collinear, and the skew distance is reported as `gap`.
pub fn triangulate(
    cam: &Camera,
    ray: &Ray3,
    anchor: &Point3<f64>,
    dir: &Vector3<f64>,
) -> Result<TriangulationResult, GeomError> {
    let d = dir.normalize();
    let r = ray.dir;
    let sin = r.cross(&d).norm();
    if sin.is_nan() || sin < EPS_PARALLEL {
        return Err(GeomError::NearParallel(sin));
    }
    let a = anchor - ray.origin;
    let b = r.dot(&d);
    let ra = r.dot(&a);
    let da = d.dot(&a);
    let denom = sin * sin;
    let lambda = (ra - b * da) / denom;
    let t = (b * ra - da) / denom;
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(GeomError::BehindCamera(lambda));
    }
    let on_ray = ray.at(lambda);
    let on_line = anchor + d * t;
    Ok(TriangulationResult {
        point: on_ray,
        gap: (on_ray - on_line).norm(),
        lambda,
        t,
        d_x: on_ray.x - anchor.x,
        d_z: on_ray.z - cam.focal,
    })
}
