//! Scene documents.
//!
//! ```toml
//! n_frames = 4
//! noise_sigma = 0.0   # optional, default 0
//! seed = 0            # optional, default 0
//!
//! [camera]
//! focal = 1.0
//! principal_point = [0.0, 0.0]   # optional
//! image_half_extent = [1.0, 1.0] # optional, unbounded when absent
//!
//! [[objects]]
//! id = 0
//! waypoints = [[0, 10, 20], [0, 8, 24], [2, 8, 22], [4, 5, 26]]
//! shape = { sphere = { center = [0, 10, 20], radius = 2.0, n_points = 200 } }
//! ```
//!
//! Other shapes: `{ points = { points = [[x, y, z], ...] } }` and, for
//! motions that are not pure translation, `{ frames = { frames = [[[x, y, z], ...], ...] } }`
//! with one point list per frame and no waypoints.

use std::path::Path;

use nalgebra::{Point2, Point3, Vector2};
use serde::Deserialize;

use super::{read_text, IoError};
use crate::geom::Camera;
use crate::sim::{ObjectSpec, SceneSpec, Shape};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    n_frames: u32,
    #[serde(default)]
    noise_sigma: f64,
    #[serde(default)]
    seed: u64,
    camera: CameraDoc,
    objects: Vec<ObjectDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraDoc {
    focal: f64,
    principal_point: Option<[f64; 2]>,
    image_half_extent: Option<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    id: u32,
    shape: ShapeDoc,
    #[serde(default)]
    waypoints: Vec<[f64; 3]>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ShapeDoc {
    Sphere {
        center: [f64; 3],
        radius: f64,
        n_points: usize,
    },
    Points {
        points: Vec<[f64; 3]>,
    },
    Frames {
        frames: Vec<Vec<[f64; 3]>>,
    },
}

fn point(p: &[f64; 3]) -> Point3<f64> {
    Point3::new(p[0], p[1], p[2])
}

pub fn parse_scene(path: &Path) -> Result<SceneSpec, IoError> {
    parse_scene_str(&read_text(path)?)
}

pub fn parse_scene_str(text: &str) -> Result<SceneSpec, IoError> {
    let doc: SceneDoc = toml::from_str(text).map_err(|e| IoError::Document(e.to_string()))?;

    let mut camera = Camera::new(doc.camera.focal).map_err(|e| IoError::Validation(e.to_string()))?;
    if let Some([u, v]) = doc.camera.principal_point {
        camera = camera.with_principal_point(Point2::new(u, v));
    }
    if let Some([w, h]) = doc.camera.image_half_extent {
        if !(w > 0.0 && h > 0.0) {
            return Err(IoError::Validation("image_half_extent must be positive".into()));
        }
        camera = camera.with_half_extent(Vector2::new(w, h));
    }

    let objects = doc
        .objects
        .into_iter()
        .map(|o| ObjectSpec {
            object_id: o.id,
            shape: match o.shape {
                ShapeDoc::Sphere {
                    center,
                    radius,
                    n_points,
                } => Shape::Sphere {
                    center: point(&center),
                    radius,
                    n_points,
                },
                ShapeDoc::Points { points } => Shape::Points(points.iter().map(point).collect()),
                ShapeDoc::Frames { frames } => {
                    Shape::Frames(frames.iter().map(|f| f.iter().map(point).collect()).collect())
                }
            },
            waypoints: o.waypoints.iter().map(point).collect(),
        })
        .collect();

    let spec = SceneSpec {
        camera,
        objects,
        n_frames: doc.n_frames,
        noise_sigma: doc.noise_sigma,
        seed: doc.seed,
    };
    spec.validate().map_err(|e| IoError::Validation(e.to_string()))?;
    Ok(spec)
}
