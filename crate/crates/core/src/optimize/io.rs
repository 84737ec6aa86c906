use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::{polyline_length, TraceSample};
use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::manifest::RunManifest;

pub const PATH_FORMAT_VERSION: u32 = 1;

/// Incumbent improvement as stored in a path file. Wall-clock times are left
/// out so that files from k-bounded runs are reproducible byte for byte.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub k: usize,
    pub length: f64,
}

/// Serialized planner output. `cells` is empty for grid planners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathDoc {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub planner: String,
    pub waypoints: Vec<Point3>,
    #[serde(default)]
    pub cells: Vec<usize>,
    pub length: f64,
    #[serde(default)]
    pub trace: Vec<TraceStep>,
}

impl PathDoc {
    pub fn new(planner: &str, waypoints: Vec<Point3>, cells: Vec<usize>, length: f64, trace: &[TraceSample]) -> Self {
        Self {
            format_version: PATH_FORMAT_VERSION,
            manifest: None,
            planner: planner.into(),
            waypoints,
            cells,
            length,
            trace: trace.iter().map(|s| TraceStep { k: s.k, length: s.length }).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != PATH_FORMAT_VERSION {
            return Err(Error::Document(format!(
                "unsupported path format version {}",
                self.format_version
            )));
        }
        if self.waypoints.is_empty() {
            return Err(Error::Document("path has no waypoints".into()));
        }
        if !self.cells.is_empty() && self.cells.len() != self.waypoints.len() {
            return Err(Error::Document(format!(
                "{} cells for {} waypoints",
                self.cells.len(),
                self.waypoints.len()
            )));
        }
        let recomputed = polyline_length(&self.waypoints);
        if (recomputed - self.length).abs() > 1e-9 * recomputed.max(1.0) {
            return Err(Error::Document(format!(
                "stored length {} disagrees with the waypoints ({recomputed})",
                self.length
            )));
        }
        Ok(())
    }
}

pub fn save_path(doc: &PathDoc, path: impl AsRef<FsPath>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Loads and validates a path document.
pub fn load_path(path: impl AsRef<FsPath>) -> Result<PathDoc> {
    let doc: PathDoc = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    doc.validate()?;
    Ok(doc)
}
