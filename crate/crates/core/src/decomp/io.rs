use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cell, Decomposition};
use crate::error::{Error, Result};
use crate::manifest::RunManifest;

pub const DECOMPOSITION_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredCell {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    pub obstacle: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDoc {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub dims: [usize; 3],
    pub resolution: f64,
    pub cells: Vec<StoredCell>,
    /// Owner per voxel (cell index + 1), x fastest. Optional since it can be
    /// rebuilt from the cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<Vec<u32>>,
}

impl DecompositionDoc {
    pub fn new(d: &Decomposition, with_coverage: bool) -> Self {
        Self {
            format_version: DECOMPOSITION_FORMAT_VERSION,
            manifest: None,
            dims: d.dims,
            resolution: d.resolution,
            cells: d
                .cells
                .iter()
                .zip(&d.occ)
                .map(|(c, &obstacle)| StoredCell {
                    lo: c.lo,
                    hi: c.hi,
                    obstacle,
                })
                .collect(),
            coverage: with_coverage.then(|| d.coverage.raw_entries().to_vec()),
        }
    }

    pub fn to_decomposition(&self) -> Result<Decomposition> {
        if self.format_version != DECOMPOSITION_FORMAT_VERSION {
            return Err(Error::Document(format!(
                "unsupported decomposition format version {}",
                self.format_version
            )));
        }
        if self.dims.iter().any(|&n| n == 0) || !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Document("grid dims and resolution must be positive".into()));
        }
        let mut cells = Vec::with_capacity(self.cells.len());
        for (n, c) in self.cells.iter().enumerate() {
            let ok = (0..3).all(|k| c.lo[k] >= 1 && c.lo[k] <= c.hi[k] && c.hi[k] <= self.dims[k]);
            if !ok {
                return Err(Error::Document(format!(
                    "cell {n} {:?}..{:?} is not a box inside {:?}",
                    c.lo, c.hi, self.dims
                )));
            }
            cells.push(Cell { lo: c.lo, hi: c.hi });
        }
        let occ = self.cells.iter().map(|c| c.obstacle).collect();
        let d = Decomposition::from_cells(self.dims, self.resolution, cells, occ);
        if let Some(stored) = &self.coverage {
            if stored.as_slice() != d.coverage.raw_entries() {
                return Err(Error::Document(
                    "stored coverage disagrees with the cell list".into(),
                ));
            }
        }
        Ok(d)
    }
}

pub fn save_decomposition(doc: &DecompositionDoc, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_decomposition(path: impl AsRef<Path>) -> Result<DecompositionDoc> {
    let r = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(r)?)
}
