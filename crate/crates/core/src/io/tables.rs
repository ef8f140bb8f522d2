//! Comma-separated track and ground-truth tables.
//!
//! Tracks: `track_id,object_id,frame,u,v` with principal-point-relative image
//! coordinates. Ground truth: `track_id,object_id,frame,x,y,z`. Rows are
//! written sorted by `(track_id, frame)` and floats carry 17 significant
//! digits, so a write-parse-write cycle reproduces the text exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Point2, Point3};

use super::{read_text, write_text, IoError};
use crate::recon::Track;
use crate::sim::{GroundTruth, TruthTrack};

pub const TRACKS_HEADER: &str = "track_id,object_id,frame,u,v";
pub const TRUTH_HEADER: &str = "track_id,object_id,frame,x,y,z";

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parsed track file plus the number of rows found out of order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackTable {
    pub tracks: Vec<Track>,
    pub unsorted_rows: usize,
}

struct Row<const N: usize> {
    line: usize,
    track_id: u64,
    object_id: u32,
    frame: u32,
    values: [f64; N],
}

fn field<T: std::str::FromStr>(raw: &str, line: usize, name: &str) -> Result<T, IoError>
where
    T::Err: std::fmt::Display,
{
    raw.trim().parse().map_err(|e| IoError::Parse {
        line,
        msg: format!("field {name}: {e} ({raw:?})"),
    })
}

/// Parses rows and sorts them by `(track_id, frame)`; returns the rows and
/// how many of them arrived out of order.
fn parse_rows<const N: usize>(
    text: &str,
    header: &str,
    names: [&str; N],
) -> Result<(Vec<Row<N>>, usize), IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((_, h)) => {
            return Err(IoError::Parse {
                line: 1,
                msg: format!("expected header {header:?}, found {h:?}"),
            })
        }
        None => {
            return Err(IoError::Parse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    }

    let mut rows = Vec::new();
    let mut unsorted = 0;
    let mut prev: Option<(u64, u32)> = None;
    for (i, text) in lines {
        let line = i + 1;
        if text.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = text.split(',').collect();
        if cols.len() != 3 + N {
            return Err(IoError::Parse {
                line,
                msg: format!("expected {} fields, found {}", 3 + N, cols.len()),
            });
        }
        let mut values = [0.0f64; N];
        for (k, v) in values.iter_mut().enumerate() {
            *v = field(cols[3 + k], line, names[k])?;
            if !v.is_finite() {
                return Err(IoError::Parse {
                    line,
                    msg: format!("field {}: not finite", names[k]),
                });
            }
        }
        let row = Row {
            line,
            track_id: field(cols[0], line, "track_id")?,
            object_id: field(cols[1], line, "object_id")?,
            frame: field(cols[2], line, "frame")?,
            values,
        };
        let key = (row.track_id, row.frame);
        if prev.is_some_and(|p| key < p) {
            unsorted += 1;
        }
        prev = Some(key);
        rows.push(row);
    }

    rows.sort_by_key(|r| (r.track_id, r.frame, r.line));
    for w in rows.windows(2) {
        if (w[0].track_id, w[0].frame) == (w[1].track_id, w[1].frame) {
            return Err(IoError::Parse {
                line: w[1].line,
                msg: format!("duplicate row for track {} frame {}", w[1].track_id, w[1].frame),
            });
        }
    }
    Ok((rows, unsorted))
}

type Groups<const N: usize> = BTreeMap<u64, (u32, Vec<(u32, [f64; N])>)>;

/// Groups sorted rows per track, checking object ids and frame contiguity.
fn group_rows<const N: usize>(rows: Vec<Row<N>>) -> Result<Groups<N>, IoError> {
    let mut groups: Groups<N> = BTreeMap::new();
    for r in rows {
        let entry = groups
            .entry(r.track_id)
            .or_insert_with(|| (r.object_id, Vec::new()));
        if entry.0 != r.object_id {
            return Err(IoError::Parse {
                line: r.line,
                msg: format!(
                    "track {} changes object id {} -> {}",
                    r.track_id, entry.0, r.object_id
                ),
            });
        }
        if let Some((last, _)) = entry.1.last() {
            if last.checked_add(1) != Some(r.frame) {
                return Err(IoError::NonContiguousFrames(r.track_id));
            }
        }
        entry.1.push((r.frame, r.values));
    }
    Ok(groups)
}

pub fn parse_tracks_str(text: &str) -> Result<TrackTable, IoError> {
    let (rows, unsorted_rows) = parse_rows(text, TRACKS_HEADER, ["u", "v"])?;
    let tracks = group_rows(rows)?
        .into_iter()
        .map(|(id, (object_id, obs))| Track {
            id,
            object_id,
            obs: obs
                .into_iter()
                .map(|(f, [u, v])| (f, Point2::new(u, v)))
                .collect(),
        })
        .collect();
    Ok(TrackTable {
        tracks,
        unsorted_rows,
    })
}

pub fn parse_tracks(path: &Path) -> Result<TrackTable, IoError> {
    parse_tracks_str(&read_text(path)?)
}

pub fn tracks_to_string(tracks: &[Track]) -> String {
    let mut sorted: Vec<&Track> = tracks.iter().collect();
    sorted.sort_by_key(|t| t.id);
    let mut out = String::from(TRACKS_HEADER);
    out.push('\n');
    for t in sorted {
        let mut obs: Vec<&(u32, Point2<f64>)> = t.obs.iter().collect();
        obs.sort_by_key(|(f, _)| *f);
        for (f, p) in obs {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                t.id,
                t.object_id,
                f,
                fmt_f64(p.x),
                fmt_f64(p.y)
            );
        }
    }
    out
}

pub fn write_tracks(path: &Path, tracks: &[Track]) -> Result<(), IoError> {
    write_text(path, &tracks_to_string(tracks))
}

pub fn parse_truth_str(text: &str) -> Result<GroundTruth, IoError> {
    let (rows, _) = parse_rows(text, TRUTH_HEADER, ["x", "y", "z"])?;
    let tracks = group_rows(rows)?
        .into_iter()
        .map(|(id, (object_id, pts))| TruthTrack {
            id,
            object_id,
            points: pts
                .into_iter()
                .map(|(f, [x, y, z])| (f, Point3::new(x, y, z)))
                .collect(),
        })
        .collect();
    Ok(GroundTruth { tracks })
}

pub fn parse_truth(path: &Path) -> Result<GroundTruth, IoError> {
    parse_truth_str(&read_text(path)?)
}

pub fn truth_to_string(truth: &GroundTruth) -> String {
    let mut sorted: Vec<&TruthTrack> = truth.tracks.iter().collect();
    sorted.sort_by_key(|t| t.id);
    let mut out = String::from(TRUTH_HEADER);
    out.push('\n');
    for t in sorted {
        for (f, p) in &t.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                t.id,
                t.object_id,
                f,
                fmt_f64(p.x),
                fmt_f64(p.y),
                fmt_f64(p.z)
            );
        }
    }
    out
}

pub fn write_truth(path: &Path, truth: &GroundTruth) -> Result<(), IoError> {
    write_text(path, &truth_to_string(truth))
}
