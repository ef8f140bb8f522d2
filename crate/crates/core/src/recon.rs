//! Frame-to-frame reconstruction of keypoint tracks.
//!
//! Each track starts at its first image position embedded on the plane
//! `Z = f`. For every interval of every object the vanishing point of the
//! object's motion is estimated once from all of its moving keypoints; each
//! track then advances from its current 3D point along the vanishing
//! direction until it meets the projection ray of its next observation.
//!
//! Under pure per-interval translation the reconstruction of track `j` equals
//! its true trajectory scaled by `f / Z_j(birth)`.

use std::collections::BTreeMap;

use nalgebra::{Point2, Point3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{
    backproject_ray, direction_from_vp, project, triangulate, Camera, GeomError, HomPoint2,
    TriangulationResult, EPS_MOTION, EPS_PARALLEL,
};
use crate::vp::{estimate_vp, motion_lines, MotionPair, VpError, VpEstimate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconError {
    #[error("no tracks to reconstruct")]
    EmptyInput,
    #[error("track {0} has no observations")]
    EmptyTrack(u64),
    #[error("track {0} has non-contiguous or unordered frames")]
    NonContiguousFrames(u64),
    #[error("track id {0} appears more than once")]
    DuplicateTrack(u64),
}

/// One keypoint's principal-point-relative image positions over contiguous frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: u64,
    pub object_id: u32,
    pub obs: Vec<(u32, Point2<f64>)>,
}

impl Track {
    pub fn first_frame(&self) -> Option<u32> {
        self.obs.first().map(|(f, _)| *f)
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.obs.last().map(|(f, _)| *f)
    }

    pub fn at(&self, frame: u32) -> Option<Point2<f64>> {
        let first = self.first_frame()?;
        let idx = frame.checked_sub(first)? as usize;
        self.obs.get(idx).map(|(_, p)| *p)
    }

    pub fn validate(&self) -> Result<(), ReconError> {
        if self.obs.is_empty() {
            return Err(ReconError::EmptyTrack(self.id));
        }
        let contiguous = self.obs.windows(2).all(|w| w[0].0.checked_add(1) == Some(w[1].0));
        if !contiguous {
            return Err(ReconError::NonContiguousFrames(self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Ok,
    Stationary,
    NearParallel,
    BehindCamera,
    NonPositiveDepth,
    InsufficientLines,
    DegenerateBundle,
}

impl StepStatus {
    pub fn is_accepted(self) -> bool {
        matches!(self, StepStatus::Ok | StepStatus::Stationary)
    }
}

impl From<&GeomError> for StepStatus {
    fn from(e: &GeomError) -> Self {
        match e {
            GeomError::NearParallel(_) => StepStatus::NearParallel,
            GeomError::BehindCamera(_) => StepStatus::BehindCamera,
            _ => StepStatus::NonPositiveDepth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiag {
    pub d_x: f64,
    pub d_z: f64,
    pub gap: f64,
    pub lambda: f64,
}

impl From<&TriangulationResult> for StepDiag {
    fn from(r: &TriangulationResult) -> Self {
        Self {
            d_x: r.d_x,
            d_z: r.d_z,
            gap: r.gap,
            lambda: r.lambda,
        }
    }
}

/// Diagnostics for the step that produced (or failed to produce) `frame`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub frame: u32,
    pub status: StepStatus,
    pub diag: Option<StepDiag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconTrack {
    pub id: u64,
    pub object_id: u32,
    pub points: Vec<(u32, Point3<f64>)>,
    pub steps: Vec<StepRecord>,
}

impl ReconTrack {
    pub fn is_truncated(&self) -> bool {
        self.steps.iter().any(|s| !s.status.is_accepted())
    }

    pub fn point_at(&self, frame: u32) -> Option<Point3<f64>> {
        let first = self.points.first()?.0;
        let idx = frame.checked_sub(first)? as usize;
        self.points.get(idx).map(|(_, p)| *p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalOutcome {
    Estimated(VpEstimate),
    /// No keypoint of the object moved in the image.
    Stationary,
    InsufficientLines,
    DegenerateBundle,
}

/// Vanishing-point estimation for one object over frames `frame -> frame + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub object_id: u32,
    pub frame: u32,
    pub n_pairs: usize,
    pub n_dropped: usize,
    pub outcome: IntervalOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub camera: Camera,
    pub tracks: Vec<ReconTrack>,
    pub intervals: Vec<IntervalRecord>,
}

impl Reconstruction {
    pub fn interval(&self, object_id: u32, frame: u32) -> Option<&IntervalRecord> {
        self.intervals
            .iter()
            .find(|r| r.object_id == object_id && r.frame == frame)
    }

    pub fn truncated_count(&self) -> usize {
        self.tracks.iter().filter(|t| t.is_truncated()).count()
    }

    pub fn max_frame(&self) -> Option<u32> {
        self.tracks
            .iter()
            .filter_map(|t| t.points.last().map(|(f, _)| *f))
            .max()
    }

    /// True when there were intervals to process and every one of them failed
    /// to produce a usable vanishing point.
    pub fn all_intervals_failed(&self) -> bool {
        !self.intervals.is_empty()
            && self.intervals.iter().all(|r| {
                matches!(
                    r.outcome,
                    IntervalOutcome::InsufficientLines | IntervalOutcome::DegenerateBundle
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Moved,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub result: TriangulationResult,
    pub kind: StepKind,
}

pub fn anchor(cam: &Camera, first_obs: &Point2<f64>) -> Point3<f64> {
    cam.embed(first_obs)
}

/// Advances one track from `current` to the frame where it is seen at `next_obs`.
///
/// Motion along the observation's own projection ray is rejected before the
/// zero-motion check: such a point does not move in the image, yet its depth
/// changed and cannot be recovered.
pub fn step(
    cam: &Camera,
    current: &Point3<f64>,
    next_obs: &Point2<f64>,
    vp: &HomPoint2,
) -> Result<StepOutcome, GeomError> {
    if current.z.is_nan() || current.z <= 0.0 {
        return Err(GeomError::NonPositiveDepth(current.z));
    }
    let dir = direction_from_vp(cam, vp);
    let ray = backproject_ray(cam, next_obs);
    let sin = ray.dir.cross(&dir).norm();
    if sin.is_nan() || sin < EPS_PARALLEL {
        return Err(GeomError::NearParallel(sin));
    }

    let seen = project(cam, current)?;
    if (next_obs - seen).norm() <= EPS_MOTION {
        return Ok(StepOutcome {
            result: stationary_result(cam, current),
            kind: StepKind::Stationary,
        });
    }
    let result = triangulate(cam, &ray, current, &dir)?;
    Ok(StepOutcome {
        result,
        kind: StepKind::Moved,
    })
}

fn stationary_result(cam: &Camera, current: &Point3<f64>) -> TriangulationResult {
    TriangulationResult {
        point: *current,
        gap: 0.0,
        lambda: current.coords.norm(),
        t: 0.0,
        d_x: 0.0,
        d_z: current.z - cam.focal(),
    }
}

struct TrackState<'a> {
    track: &'a Track,
    current: Option<Point3<f64>>,
    truncated: bool,
    out: ReconTrack,
}

impl TrackState<'_> {
    fn fail(&mut self, frame: u32, status: StepStatus) {
        self.out.steps.push(StepRecord {
            frame,
            status,
            diag: None,
        });
        self.current = None;
        self.truncated = true;
    }

    fn advance(&mut self, frame: u32, status: StepStatus, result: &TriangulationResult) {
        self.out.steps.push(StepRecord {
            frame,
            status,
            diag: Some(result.into()),
        });
        self.out.points.push((frame, result.point));
        self.current = Some(result.point);
    }
}

/// Runs the chained reconstruction over every object and interval.
/// Tracks, objects and intervals are processed in ascending order, so the
/// output is fully determined by the input set.
pub fn reconstruct_sequence(cam: &Camera, tracks: &[Track]) -> Result<Reconstruction, ReconError> {
    if tracks.is_empty() {
        return Err(ReconError::EmptyInput);
    }
    let mut sorted: Vec<&Track> = tracks.iter().collect();
    sorted.sort_by_key(|t| t.id);
    for w in sorted.windows(2) {
        if w[0].id == w[1].id {
            return Err(ReconError::DuplicateTrack(w[0].id));
        }
    }
    let mut objects: BTreeMap<u32, Vec<&Track>> = BTreeMap::new();
    for t in sorted {
        t.validate()?;
        objects.entry(t.object_id).or_default().push(t);
    }

    let mut out_tracks = Vec::with_capacity(tracks.len());
    let mut intervals = Vec::new();
    for (object_id, members) in objects {
        let (recon, records) = reconstruct_object(cam, object_id, &members);
        out_tracks.extend(recon);
        intervals.extend(records);
    }
    out_tracks.sort_by_key(|t: &ReconTrack| t.id);

    Ok(Reconstruction {
        camera: *cam,
        tracks: out_tracks,
        intervals,
    })
}

fn reconstruct_object(
    cam: &Camera,
    object_id: u32,
    members: &[&Track],
) -> (Vec<ReconTrack>, Vec<IntervalRecord>) {
    let mut states: Vec<TrackState> = members
        .iter()
        .map(|t| TrackState {
            track: t,
            current: None,
            truncated: false,
            out: ReconTrack {
                id: t.id,
                object_id,
                points: Vec::with_capacity(t.obs.len()),
                steps: Vec::with_capacity(t.obs.len().saturating_sub(1)),
            },
        })
        .collect();

    // validate() guarantees at least one observation per track
    let first = members.iter().filter_map(|t| t.first_frame()).min().unwrap_or(0);
    let last = members.iter().filter_map(|t| t.last_frame()).max().unwrap_or(0);
    let mut records = Vec::new();

    for frame in first..=last {
        if frame > first {
            let from = frame - 1;
            if let Some(record) = run_interval(cam, object_id, from, &mut states) {
                records.push(record);
            }
        }
        for s in &mut states {
            if s.track.first_frame() == Some(frame) {
                let a = anchor(cam, &s.track.obs[0].1);
                s.current = Some(a);
                s.out.points.push((frame, a));
            }
        }
    }

    (states.into_iter().map(|s| s.out).collect(), records)
}

fn run_interval(
    cam: &Camera,
    object_id: u32,
    from: u32,
    states: &mut [TrackState],
) -> Option<IntervalRecord> {
    let to = from + 1;
    let pairs: Vec<MotionPair> = states
        .iter()
        .filter_map(|s| {
            Some(MotionPair {
                track_id: s.track.id,
                p: s.track.at(from)?,
                q: s.track.at(to)?,
            })
        })
        .collect();

    // Tracks ending at `from` are finished, not failed.
    for s in states.iter_mut() {
        if s.track.at(to).is_none() {
            s.current = None;
        }
    }
    if pairs.is_empty() {
        return None;
    }

    let lines = motion_lines(&pairs);
    let outcome = if lines.lines.is_empty() {
        IntervalOutcome::Stationary
    } else {
        match estimate_vp(&lines.lines) {
            Ok(est) => IntervalOutcome::Estimated(est),
            Err(VpError::InsufficientLines(_)) => IntervalOutcome::InsufficientLines,
            Err(VpError::DegenerateBundle) => IntervalOutcome::DegenerateBundle,
        }
    };

    for s in states.iter_mut() {
        let (Some(current), Some(next_obs)) = (s.current, s.track.at(to)) else {
            continue;
        };
        match &outcome {
            IntervalOutcome::Stationary => {
                let r = stationary_result(cam, &current);
                s.advance(to, StepStatus::Stationary, &r);
            }
            IntervalOutcome::InsufficientLines => s.fail(to, StepStatus::InsufficientLines),
            IntervalOutcome::DegenerateBundle => s.fail(to, StepStatus::DegenerateBundle),
            IntervalOutcome::Estimated(est) => match step(cam, &current, &next_obs, &est.vp) {
                Ok(o) => {
                    let status = match o.kind {
                        StepKind::Moved => StepStatus::Ok,
                        StepKind::Stationary => StepStatus::Stationary,
                    };
                    s.advance(to, status, &o.result);
                }
                Err(e) => s.fail(to, StepStatus::from(&e)),
            },
        }
    }

    Some(IntervalRecord {
        object_id,
        frame: from,
        n_pairs: pairs.len(),
        n_dropped: lines.dropped.len(),
        outcome,
    })
}
