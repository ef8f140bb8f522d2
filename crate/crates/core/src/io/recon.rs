//! JSON reconstruction documents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, write_text, IoError};
use crate::recon::Reconstruction;

const FORMAT: &str = "vprecon-reconstruction";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReconDoc {
    format: String,
    version: u32,
    reconstruction: Reconstruction,
}

pub fn reconstruction_to_string(recon: &Reconstruction) -> String {
    let doc = ReconDoc {
        format: FORMAT.into(),
        version: VERSION,
        reconstruction: recon.clone(),
    };
    // Only finite floats and string keys: serialization cannot fail.
    let mut text = serde_json::to_string_pretty(&doc).expect("reconstruction serializes");
    text.push('\n');
    text
}

pub fn write_reconstruction(path: &Path, recon: &Reconstruction) -> Result<(), IoError> {
    if recon.tracks.is_empty() {
        return Err(IoError::EmptyReconstruction);
    }
    write_text(path, &reconstruction_to_string(recon))
}

pub fn parse_reconstruction(text: &str) -> Result<Reconstruction, IoError> {
    let doc: ReconDoc = serde_json::from_str(text).map_err(|e| IoError::Document(e.to_string()))?;
    if doc.format != FORMAT || doc.version != VERSION {
        return Err(IoError::Document(format!(
            "unsupported document {} v{}",
            doc.format, doc.version
        )));
    }
    Ok(doc.reconstruction)
}

pub fn read_reconstruction(path: &Path) -> Result<Reconstruction, IoError> {
    parse_reconstruction(&read_text(path)?)
}
