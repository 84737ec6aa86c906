use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ConnectivityGraph;
use crate::decomp::Decomposition;
use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::manifest::RunManifest;

pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredVertex {
    pub cell: usize,
    pub point: Point3,
}

/// Edge between two cell ids.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    /// Safety margin the representative points were optimized with, meters.
    pub eps: f64,
    pub cell_count: usize,
    pub vertices: Vec<StoredVertex>,
    pub edges: Vec<StoredEdge>,
}

impl GraphDoc {
    pub fn new(g: &ConnectivityGraph, cell_count: usize, eps: f64) -> Self {
        Self {
            format_version: GRAPH_FORMAT_VERSION,
            manifest: None,
            eps,
            cell_count,
            vertices: (0..g.vertex_count())
                .map(|v| StoredVertex {
                    cell: g.cell_of(v),
                    point: g.points[v],
                })
                .collect(),
            edges: g
                .edges()
                .iter()
                .zip(&g.weights)
                .map(|(&(a, b), &weight)| StoredEdge {
                    a: g.cell_of(a),
                    b: g.cell_of(b),
                    weight,
                })
                .collect(),
        }
    }

    /// Rebuilds the graph, checking it against the decomposition it claims
    /// to describe.
    pub fn to_graph(&self, d: &Decomposition) -> Result<ConnectivityGraph> {
        let bad = |m: String| Err(Error::Document(m));
        if self.format_version != GRAPH_FORMAT_VERSION {
            return bad(format!("unsupported graph format version {}", self.format_version));
        }
        if self.cell_count != d.cells.len() {
            return bad(format!(
                "graph was built for {} cells, decomposition has {}",
                self.cell_count,
                d.cells.len()
            ));
        }
        let cells: Vec<usize> = self.vertices.iter().map(|v| v.cell).collect();
        let expected: Vec<usize> = d.free_cells().collect();
        if cells != expected {
            return bad("graph vertices are not the free cells of the decomposition".into());
        }
        let mut vertex_of = vec![usize::MAX; d.cells.len()];
        for (v, &c) in cells.iter().enumerate() {
            vertex_of[c] = v;
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let (Some(&a), Some(&b)) = (vertex_of.get(e.a), vertex_of.get(e.b)) else {
                return bad(format!("edge {}-{} names an unknown cell", e.a, e.b));
            };
            if a == usize::MAX || b == usize::MAX || a >= b {
                return bad(format!("edge {}-{} is not an ordered free-cell pair", e.a, e.b));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return bad(format!("edge {}-{} has weight {}", e.a, e.b, e.weight));
            }
            edges.push((a, b));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return bad("edges are not sorted and unique".into());
        }
        let mut g = ConnectivityGraph::from_parts(cells, d.cells.len(), edges);
        g.points = self.vertices.iter().map(|v| v.point).collect();
        g.weights = self.edges.iter().map(|e| e.weight).collect();
        Ok(g)
    }
}

pub fn save_graph(doc: &GraphDoc, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<GraphDoc> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
