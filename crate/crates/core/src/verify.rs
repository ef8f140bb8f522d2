//! Comparison of a reconstruction against ground truth.
//!
//! A reconstruction from images alone is only defined up to a per-track
//! scale about the projection center. Each track is therefore aligned to
//! its truth with the least-squares scale `s = sum <r, g> / sum |g|^2`
//! before measuring the residual error; for exact translation data `s`
//! should equal `f / Z(first frame)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::recon::{IntervalOutcome, Reconstruction, StepStatus, Track};
use crate::sim::{GroundTruth, TruthTrack};

/// Relative tolerance for the depth identity `Y(b'') f = Y(b') (f + d_Z)`.
pub const DEPTH_IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("track {0} has no ground truth")]
    MissingTruth(u64),
    #[error("ground-truth track {0} is not in the reconstruction")]
    MissingRecon(u64),
    #[error("track {id} has no ground truth at frame {frame}")]
    MissingFrame { id: u64, frame: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub scale_rel_tol: f64,
    pub rmse_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            scale_rel_tol: 1e-9,
            rmse_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub id: u64,
    pub object_id: u32,
    pub n_points: usize,
    pub fitted_scale: f64,
    pub expected_scale: Option<f64>,
    pub scale_rel_error: Option<f64>,
    pub rmse: f64,
    pub max_error: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub object_id: u32,
    pub frame: u32,
    pub rms_residual: Option<f64>,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tracks: Vec<TrackReport>,
    pub intervals: Vec<IntervalReport>,
    pub n_tracks: usize,
    pub truncated_tracks: usize,
    pub worst_rmse: f64,
    pub global_rmse: f64,
    pub worst_scale_rel_error: f64,
    pub mean_vp_residual: Option<f64>,
    pub thresholds: Thresholds,
    pub passed: bool,
}

fn fit_track(
    cam_focal: f64,
    recon: &crate::recon::ReconTrack,
    truth: &TruthTrack,
) -> Result<(TrackReport, f64), VerifyError> {
    let mut pairs = Vec::with_capacity(recon.points.len());
    for (frame, r) in &recon.points {
        let g = truth.point_at(*frame).ok_or(VerifyError::MissingFrame {
            id: recon.id,
            frame: *frame,
        })?;
        pairs.push((r.coords, g.coords));
    }
    let num: f64 = pairs.iter().map(|(r, g)| r.dot(g)).sum();
    let den: f64 = pairs.iter().map(|(_, g)| g.norm_squared()).sum();
    let scale = if den > 0.0 { num / den } else { 0.0 };

    let mut sq_sum = 0.0;
    let mut max_error = 0.0f64;
    for (r, g) in &pairs {
        let e = (r - g * scale).norm();
        sq_sum += e * e;
        max_error = max_error.max(e);
    }
    let n = pairs.len();
    let rmse = if n > 0 { (sq_sum / n as f64).sqrt() } else { 0.0 };

    let expected_scale = recon
        .points
        .first()
        .and_then(|(f, _)| truth.point_at(*f))
        .filter(|g| g.z > 0.0)
        .map(|g| cam_focal / g.z);
    let scale_rel_error = expected_scale.map(|e| (scale - e).abs() / e);

    Ok((
        TrackReport {
            id: recon.id,
            object_id: recon.object_id,
            n_points: n,
            fitted_scale: scale,
            expected_scale,
            scale_rel_error,
            rmse,
            max_error,
            truncated: recon.is_truncated(),
        },
        sq_sum,
    ))
}

fn outcome_name(o: &IntervalOutcome) -> &'static str {
    match o {
        IntervalOutcome::Estimated(_) => "estimated",
        IntervalOutcome::Stationary => "stationary",
        IntervalOutcome::InsufficientLines => "insufficient_lines",
        IntervalOutcome::DegenerateBundle => "degenerate_bundle",
    }
}

pub fn verify(
    recon: &Reconstruction,
    truth: &GroundTruth,
    thresholds: Thresholds,
) -> Result<VerifyReport, VerifyError> {
    let mut truth_sorted: Vec<&TruthTrack> = truth.tracks.iter().collect();
    truth_sorted.sort_by_key(|t| t.id);
    let lookup = |id: u64| {
        truth_sorted
            .binary_search_by_key(&id, |t| t.id)
            .ok()
            .map(|i| truth_sorted[i])
    };
    for t in &truth_sorted {
        if !recon.tracks.iter().any(|r| r.id == t.id) {
            return Err(VerifyError::MissingRecon(t.id));
        }
    }

    let focal = recon.camera.focal();
    let mut tracks = Vec::with_capacity(recon.tracks.len());
    let mut sq_total = 0.0;
    let mut n_total = 0usize;
    for r in &recon.tracks {
        let g = lookup(r.id).ok_or(VerifyError::MissingTruth(r.id))?;
        let (report, sq) = fit_track(focal, r, g)?;
        sq_total += sq;
        n_total += report.n_points;
        tracks.push(report);
    }
    tracks.sort_by_key(|t| t.id);

    let intervals: Vec<IntervalReport> = recon
        .intervals
        .iter()
        .map(|i| IntervalReport {
            object_id: i.object_id,
            frame: i.frame,
            rms_residual: match &i.outcome {
                IntervalOutcome::Estimated(e) => Some(e.rms_residual),
                _ => None,
            },
            outcome: outcome_name(&i.outcome).into(),
        })
        .collect();
    let residuals: Vec<f64> = intervals.iter().filter_map(|i| i.rms_residual).collect();
    let mean_vp_residual =
        (!residuals.is_empty()).then(|| residuals.iter().sum::<f64>() / residuals.len() as f64);

    let truncated_tracks = tracks.iter().filter(|t| t.truncated).count();
    let worst_rmse = tracks.iter().map(|t| t.rmse).fold(0.0, f64::max);
    let worst_scale_rel_error = tracks
        .iter()
        .filter_map(|t| t.scale_rel_error)
        .fold(0.0, f64::max);
    let global_rmse = if n_total > 0 {
        (sq_total / n_total as f64).sqrt()
    } else {
        0.0
    };
    let passed = truncated_tracks == 0
        && worst_rmse <= thresholds.rmse_tol
        && worst_scale_rel_error <= thresholds.scale_rel_tol;

    Ok(VerifyReport {
        n_tracks: tracks.len(),
        tracks,
        intervals,
        truncated_tracks,
        worst_rmse,
        global_rmse,
        worst_scale_rel_error,
        mean_vp_residual,
        thresholds,
        passed,
    })
}

/// Uses a reconstruction's own points as ground truth.
pub fn truth_from_reconstruction(recon: &Reconstruction) -> GroundTruth {
    let mut tracks: Vec<TruthTrack> = recon
        .tracks
        .iter()
        .map(|t| TruthTrack {
            id: t.id,
            object_id: t.object_id,
            points: t.points.clone(),
        })
        .collect();
    tracks.sort_by_key(|t| t.id);
    GroundTruth { tracks }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DepthAudit {
    pub checked: usize,
    pub violations: usize,
    /// Largest `|Y(b'') f - Y(b') (f + d_Z)| / max(1, |Y(b'') f|)`.
    pub worst: f64,
}

/// Checks every accepted moving step against the depth identity: the
/// reconstructed point lies on the projection ray of its observation, so
/// `Y(b'') / Y(b') = (f + d_Z) / f`.
pub fn depth_identity_audit(recon: &Reconstruction, tracks: &[Track]) -> DepthAudit {
    let f = recon.camera.focal();
    let by_id: HashMap<u64, &Track> = tracks.iter().map(|t| (t.id, t)).collect();
    let mut audit = DepthAudit::default();
    for rt in &recon.tracks {
        let Some(track) = by_id.get(&rt.id) else {
            continue;
        };
        for s in rt.steps.iter().filter(|s| s.status == StepStatus::Ok) {
            let (Some(diag), Some(p), Some(obs)) = (s.diag, rt.point_at(s.frame), track.at(s.frame)) else {
                continue;
            };
            let lhs = p.y * f;
            let dev = (lhs - obs.y * (f + diag.d_z)).abs() / lhs.abs().max(1.0);
            audit.checked += 1;
            audit.worst = audit.worst.max(dev);
            if dev > DEPTH_IDENTITY_TOL {
                audit.violations += 1;
            }
        }
    }
    audit
}
