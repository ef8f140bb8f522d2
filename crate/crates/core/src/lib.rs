//! Reconstruction of rigidly translating objects from keypoint tracks seen
//! by a static pinhole camera.
//!
//! For each pair of consecutive frames, the image lines joining every
//! keypoint's two positions meet at the vanishing point of the object's
//! translation ([`vp`]). Starting from the first image embedded on the plane
//! `Z = f`, each keypoint is moved along that 3D direction until it reaches
//! the projection ray of its next observation ([`recon`]). The result is each
//! keypoint's true trajectory up to a per-keypoint scale.
//!
//! [`sim`] generates synthetic scenes with ground truth, [`verify`] measures
//! a reconstruction against it, and [`io`] holds the file formats.

pub mod eigen;
pub mod geom;
pub mod io;
pub mod recon;
pub mod sim;
pub mod verify;
pub mod vp;

pub use geom::{
    backproject_ray, direction_from_vp, image_line_through, intersect_lines, project, triangulate, Camera,
    GeomError, HomLine2, HomPoint2, Ray3, TriangulationResult,
};
pub use recon::{
    anchor, reconstruct_sequence, step, IntervalOutcome, IntervalRecord, ReconError, ReconTrack,
    Reconstruction, StepStatus, Track,
};
pub use sim::{
    make_sphere_cloud, pose_at_frame, render_tracks, GroundTruth, ObjectSpec, SceneSpec, Shape, SimError,
};
pub use verify::{depth_identity_audit, verify, Thresholds, VerifyError, VerifyReport};
pub use vp::{estimate_vp, estimate_vp_pairwise, motion_lines, MotionPair, VpError, VpEstimate};

pub use nalgebra::{Point2, Point3, Vector2, Vector3};
