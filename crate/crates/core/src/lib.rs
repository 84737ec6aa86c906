//! Exact box-cell decomposition of 3D occupancy grids and shortest-path
//! planning over the resulting cell graph.

pub mod baseline;
pub mod bench;
pub mod cellgraph;
pub mod decomp;
pub mod error;
pub mod geom;
pub mod grid;
pub mod manifest;
pub mod optimize;
pub mod search;

pub use error::{Error, Result};
