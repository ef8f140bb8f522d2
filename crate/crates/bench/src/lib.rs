//! Workloads shared by the benchmarks.

use nalgebra::{Point3, Vector3};
use vprecon::{render_tracks, Camera, ObjectSpec, SceneSpec, Shape, Track};

/// Sphere of `n_points` keypoints taking a deterministic zig-zag walk of
/// `n_frames` waypoints that stays well in front of the camera.
pub fn walking_sphere(n_points: usize, n_frames: u32) -> SceneSpec {
    let waypoints = (0..n_frames)
        .map(|i| {
            let t = i as f64;
            Point3::new(0.0, 10.0, 20.0)
                + Vector3::new(
                    (0.7 * t).sin() * 3.0,
                    (0.3 * t).cos() * 2.0,
                    (0.5 * t).sin() * 4.0,
                )
        })
        .collect::<Vec<_>>();
    SceneSpec {
        camera: Camera::new(1.0).expect("positive focal"),
        objects: vec![ObjectSpec {
            object_id: 0,
            shape: Shape::Sphere {
                center: waypoints[0],
                radius: 2.0,
                n_points,
            },
            waypoints,
        }],
        n_frames,
        noise_sigma: 0.0,
        seed: 1,
    }
}

pub fn walking_tracks(n_points: usize, n_frames: u32) -> (Camera, Vec<Track>) {
    let spec = walking_sphere(n_points, n_frames);
    let (tracks, _) = render_tracks(&spec).expect("scene stays in front of the camera");
    (spec.camera, tracks)
}
