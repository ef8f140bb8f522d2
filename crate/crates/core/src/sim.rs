//! Synthetic scenes: rigid point clouds moved through waypoints and projected
//! into keypoint tracks, with exact ground truth.

use std::f64::consts::PI;

use nalgebra::{Point2, Point3, Rotation3, Unit, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{project, Camera};
use crate::recon::Track;

/// Track ids are `object_id * TRACK_ID_STRIDE + point_index`.
pub const TRACK_ID_STRIDE: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scene: {0}")]
    Validation(String),
    #[error("track {track_id} has depth {z} <= 0 at frame {frame}")]
    DepthViolation { track_id: u64, frame: u32, z: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Sphere {
        center: Point3<f64>,
        radius: f64,
        n_points: usize,
    },
    /// Fixed point set moved by the object's waypoints.
    Points(Vec<Point3<f64>>),
    /// Explicit points for every frame; index `i` of each frame is the same
    /// keypoint. Used for motions outside pure translation, e.g. rotation.
    Frames(Vec<Vec<Point3<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub object_id: u32,
    pub shape: Shape,
    /// Per-frame positions of the shape's reference point. Empty for `Frames`.
    pub waypoints: Vec<Point3<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub camera: Camera,
    pub objects: Vec<ObjectSpec>,
    pub n_frames: u32,
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTrack {
    pub id: u64,
    pub object_id: u32,
    pub points: Vec<(u32, Point3<f64>)>,
}

/// Noise-free 3D positions aligned with the rendered tracks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub tracks: Vec<TruthTrack>,
}

impl GroundTruth {
    pub fn get(&self, id: u64) -> Option<&TruthTrack> {
        self.tracks
            .binary_search_by_key(&id, |t| t.id)
            .ok()
            .map(|i| &self.tracks[i])
    }
}

impl TruthTrack {
    pub fn point_at(&self, frame: u32) -> Option<Point3<f64>> {
        let first = self.points.first()?.0;
        let idx = frame.checked_sub(first)? as usize;
        self.points.get(idx).map(|(_, p)| *p)
    }
}

impl SceneSpec {
    /// Single sphere following `waypoints`, one frame per waypoint.
    pub fn sphere(
        camera: Camera,
        waypoints: Vec<Point3<f64>>,
        radius: f64,
        n_points: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        let n_frames = waypoints.len() as u32;
        let center = waypoints.first().copied().unwrap_or_else(Point3::origin);
        SceneSpec {
            camera,
            objects: vec![ObjectSpec {
                object_id: 0,
                shape: Shape::Sphere {
                    center,
                    radius,
                    n_points,
                },
                waypoints,
            }],
            n_frames,
            noise_sigma,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |msg: String| Err(SimError::Validation(msg));
        if self.n_frames < 1 {
            return invalid("n_frames must be >= 1".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return invalid(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if self.objects.is_empty() {
            return invalid("scene has no objects".into());
        }
        let n = self.n_frames as usize;
        let mut ids: Vec<u32> = self.objects.iter().map(|o| o.object_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return invalid("object ids must be unique".into());
        }
        for o in &self.objects {
            let id = o.object_id;
            if u64::from(id) >= u64::MAX / TRACK_ID_STRIDE {
                return invalid(format!("object {id}: id too large"));
            }
            let n_points = match &o.shape {
                Shape::Sphere { radius, n_points, .. } => {
                    if !(radius.is_finite() && *radius > 0.0) {
                        return invalid(format!("object {id}: sphere radius must be > 0"));
                    }
                    if *n_points < 2 {
                        return invalid(format!("object {id}: sphere needs n_points >= 2"));
                    }
                    *n_points
                }
                Shape::Points(pts) => pts.len(),
                Shape::Frames(frames) => {
                    if frames.len() != n {
                        return invalid(format!(
                            "object {id}: {} point frames for {n} frames",
                            frames.len()
                        ));
                    }
                    let k = frames[0].len();
                    if frames.iter().any(|f| f.len() != k) {
                        return invalid(format!("object {id}: point frames differ in size"));
                    }
                    if !o.waypoints.is_empty() {
                        return invalid(format!("object {id}: explicit frames take no waypoints"));
                    }
                    k
                }
            };
            if n_points as u64 >= TRACK_ID_STRIDE {
                return invalid(format!("object {id}: too many points"));
            }
            if !matches!(o.shape, Shape::Frames(_)) && o.waypoints.len() != n {
                return invalid(format!(
                    "object {id}: waypoint count {} must equal n_frames {n}",
                    o.waypoints.len()
                ));
            }
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Fibonacci-spiral samples on a sphere surface. The seed only rotates the
/// spiral about the polar axis.
pub fn make_sphere_cloud(center: Point3<f64>, radius: f64, n_points: usize, seed: u64) -> Vec<Point3<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let phase = 2.0 * PI * (splitmix64(seed) >> 11) as f64 / (1u64 << 53) as f64;
    let n = n_points as f64;
    (0..n_points)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n;
            let r = (1.0 - z * z).sqrt();
            let (s, c) = (phase + golden * i as f64).sin_cos();
            let unit = Vector3::new(r * c, r * s, z).normalize();
            center + unit * radius
        })
        .collect()
}

fn base_cloud(obj: &ObjectSpec, seed: u64) -> Vec<Point3<f64>> {
    match &obj.shape {
        Shape::Sphere {
            center,
            radius,
            n_points,
        } => make_sphere_cloud(*center, *radius, *n_points, seed ^ u64::from(obj.object_id)),
        Shape::Points(pts) => pts.clone(),
        Shape::Frames(frames) => frames.first().cloned().unwrap_or_default(),
    }
}

/// The object's points at `frame`: the base cloud translated by
/// `waypoints[frame] - waypoints[0]`, or the explicit frame for `Frames`.
pub fn pose_at_frame(obj: &ObjectSpec, seed: u64, frame: u32) -> Vec<Point3<f64>> {
    let f = frame as usize;
    if let Shape::Frames(frames) = &obj.shape {
        return frames[f].clone();
    }
    let shift = obj.waypoints[f] - obj.waypoints[0];
    base_cloud(obj, seed).into_iter().map(|p| p + shift).collect()
}

/// Explicit per-frame points for a cloud rotating about `pivot` by
/// `angle_per_frame` radians per frame while the pivot follows `waypoints`.
pub fn rotating_frames(
    cloud: &[Point3<f64>],
    pivot: Point3<f64>,
    axis: Vector3<f64>,
    angle_per_frame: f64,
    waypoints: &[Point3<f64>],
) -> Vec<Vec<Point3<f64>>> {
    let axis = Unit::new_normalize(axis);
    waypoints
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let rot = Rotation3::from_axis_angle(&axis, angle_per_frame * i as f64);
            cloud.iter().map(|p| w + rot * (p - pivot)).collect()
        })
        .collect()
}

/// Gaussian image noise for one observation, keyed on `(seed, track, frame)`
/// so that any generation order yields the same values.
pub fn observation_noise(seed: u64, track_id: u64, frame: u32, sigma: f64) -> Point2<f64> {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&track_id.to_le_bytes());
    key[16..20].copy_from_slice(&frame.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    let du: f64 = StandardNormal.sample(&mut rng);
    let dv: f64 = StandardNormal.sample(&mut rng);
    Point2::new(du * sigma, dv * sigma)
}

/// Projects every object point into a track. A track covers the first
/// contiguous run of frames in which its point lies inside the image bounds;
/// points never inside the bounds produce no track.
pub fn render_tracks(spec: &SceneSpec) -> Result<(Vec<Track>, GroundTruth), SimError> {
    spec.validate()?;
    let cam = &spec.camera;
    let mut tracks = Vec::new();
    let mut truth = GroundTruth::default();

    let mut objects: Vec<&ObjectSpec> = spec.objects.iter().collect();
    objects.sort_by_key(|o| o.object_id);
    for obj in objects {
        let poses: Vec<Vec<Point3<f64>>> = (0..spec.n_frames)
            .map(|f| pose_at_frame(obj, spec.seed, f))
            .collect();
        for idx in 0..poses[0].len() {
            let id = u64::from(obj.object_id) * TRACK_ID_STRIDE + idx as u64;
            let mut obs = Vec::new();
            let mut pts = Vec::new();
            for (f, pose) in poses.iter().enumerate() {
                let frame = f as u32;
                let p = pose[idx];
                let Ok(img) = project(cam, &p) else {
                    return Err(SimError::DepthViolation {
                        track_id: id,
                        frame,
                        z: p.z,
                    });
                };
                if !cam.contains(&img) {
                    if !obs.is_empty() {
                        break;
                    }
                    continue;
                }
                let noisy = if spec.noise_sigma > 0.0 {
                    img + observation_noise(spec.seed, id, frame, spec.noise_sigma).coords
                } else {
                    img
                };
                obs.push((frame, noisy));
                pts.push((frame, p));
            }
            // A depth violation after the visible run still invalidates the scene.
            if let Some((frame, p)) = poses
                .iter()
                .enumerate()
                .map(|(f, pose)| (f as u32, pose[idx]))
                .find(|(_, p)| p.z.is_nan() || p.z <= 0.0)
            {
                return Err(SimError::DepthViolation {
                    track_id: id,
                    frame,
                    z: p.z,
                });
            }
            if obs.is_empty() {
                continue;
            }
            tracks.push(Track {
                id,
                object_id: obj.object_id,
                obs,
            });
            truth.tracks.push(TruthTrack {
                id,
                object_id: obj.object_id,
                points: pts,
            });
        }
    }
    Ok((tracks, truth))
}
