//! File formats for the pipeline: TOML scene descriptions, CSV track and
//! ground-truth tables, JSON reconstruction and report documents, and ASCII
//! PLY point clouds.

use std::path::{Path, PathBuf};

use thiserror::Error;

mod ply;
mod recon;
mod scene;
mod tables;

pub use ply::write_ply;
pub use recon::{parse_reconstruction, read_reconstruction, reconstruction_to_string, write_reconstruction};
pub use scene::{parse_scene, parse_scene_str};
pub use tables::{
    fmt_f64, parse_tracks, parse_tracks_str, parse_truth, parse_truth_str, tracks_to_string, truth_to_string,
    write_tracks, write_truth, TrackTable, TRACKS_HEADER, TRUTH_HEADER,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Document(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("track {0} has non-contiguous frames")]
    NonContiguousFrames(u64),
    #[error("reconstruction has no points")]
    EmptyReconstruction,
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}
