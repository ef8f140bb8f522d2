//! ASCII PLY export: one cloud per frame plus one cloud of track anchors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Point3;

use super::tables::fmt_f64;
use super::{write_text, IoError};
use crate::recon::Reconstruction;

fn ply_text(comment: &str, points: &[Point3<f64>]) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "ply\nformat ascii 1.0\ncomment {comment}\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\nend_header\n",
        points.len()
    );
    for p in points {
        let _ = writeln!(out, "{} {} {}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z));
    }
    out
}

/// Writes `frame_NNNN.ply` for every frame between the first and last
/// reconstructed frame, and `anchors.ply`. Vertices are in ascending track
/// id order. Returns the written paths.
pub fn write_ply(dir: &Path, recon: &Reconstruction) -> Result<Vec<PathBuf>, IoError> {
    let mut frames: BTreeMap<u32, Vec<Point3<f64>>> = BTreeMap::new();
    let mut anchors = Vec::new();
    let mut tracks: Vec<_> = recon.tracks.iter().collect();
    tracks.sort_by_key(|t| t.id);
    for t in tracks {
        if let Some((_, a)) = t.points.first() {
            anchors.push(*a);
        }
        for (f, p) in &t.points {
            frames.entry(*f).or_default().push(*p);
        }
    }
    let (Some(&first), Some(&last)) = (frames.keys().next(), frames.keys().next_back()) else {
        return Err(IoError::EmptyReconstruction);
    };

    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let mut written = Vec::new();
    for f in first..=last {
        let path = dir.join(format!("frame_{f:04}.ply"));
        let pts = frames.get(&f).map(Vec::as_slice).unwrap_or(&[]);
        write_text(&path, &ply_text(&format!("frame {f}"), pts))?;
        written.push(path);
    }
    let path = dir.join("anchors.ply");
    write_text(&path, &ply_text("anchors", &anchors))?;
    written.push(path);
    Ok(written)
}
