//! Path optimization over cell sequences.
//!
//! A path is a list of waypoints, one per cell of a sequence, with the first
//! and last pinned to the query points. Any two consecutive cells of a valid
//! sequence are graph neighbors, and every waypoint stays inside its cell
//! shrunk by the safety margins; together these guarantee a collision-free
//! polyline without any geometric check.

pub mod engine;
mod exact;
mod io;
mod ksp;

pub use exact::{exact_shortest_path, ExactOptions, ExactResult};
pub use io::{load_path, save_path, PathDoc, TraceStep, PATH_FORMAT_VERSION};
pub use ksp::{astar_socp, ksp_socp, KspOptions, PlanResult};

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cellgraph::{box_contains, query_overlay, shrunk_box, ConnectivityGraph, FaceMargins, QueryOverlay, POINT_TOL};
use crate::decomp::Decomposition;
use crate::error::{Error, Result};
use crate::geom::{distance, Point3};
use engine::{ConicEngine, DistanceProgram, Endpoint};

/// Waypoints closer than this are merged when reporting a polyline.
pub const COLLAPSE_TOL: f64 = 1e-9;

/// Everything a planner needs besides the query points.
#[derive(Clone, Copy)]
pub struct PlanContext<'a> {
    pub decomposition: &'a Decomposition,
    pub graph: &'a ConnectivityGraph,
    pub margins: &'a [FaceMargins],
    pub engine: &'a dyn ConicEngine,
}

impl<'a> PlanContext<'a> {
    pub fn overlay(&self, w_in: Point3, w_t: Point3) -> Result<QueryOverlay<'a>> {
        query_overlay(self.graph, self.decomposition, self.margins, w_in, w_t)
    }

    pub fn shrunk(&self, cell: usize) -> (Point3, Point3) {
        let d = self.decomposition;
        shrunk_box(&d.cells[cell], &self.margins[cell], d.resolution)
    }
}

/// Waypoints with the cell each one lies in. A query answered inside one
/// cell carries that cell twice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<Point3>,
    pub cells: Vec<usize>,
    pub length: f64,
}

impl Path {
    pub(crate) fn new(waypoints: Vec<Point3>, cells: Vec<usize>) -> Self {
        let length = polyline_length(&waypoints);
        Self {
            waypoints,
            cells,
            length,
        }
    }

    /// Waypoints with consecutive duplicates merged.
    pub fn polyline(&self) -> Vec<Point3> {
        let mut out: Vec<Point3> = Vec::with_capacity(self.waypoints.len());
        for (i, p) in self.waypoints.iter().enumerate() {
            let last = i + 1 == self.waypoints.len();
            match out.last() {
                Some(q) if distance(p, q) <= COLLAPSE_TOL => {
                    if last {
                        *out.last_mut().unwrap() = *p;
                    }
                }
                _ => out.push(*p),
            }
        }
        out
    }
}

pub fn polyline_length(points: &[Point3]) -> f64 {
    points.windows(2).map(|w| distance(&w[0], &w[1])).sum()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violation: Option<String>,
}

/// Checks the flow condition (consecutive cells equal or graph-adjacent) and
/// that every waypoint lies in its margin-shrunk cell.
pub fn check_feasibility(
    waypoints: &[Point3],
    cells: &[usize],
    graph: &ConnectivityGraph,
    d: &Decomposition,
    margins: &[FaceMargins],
) -> Result<Feasibility> {
    if waypoints.len() != cells.len() {
        return Err(Error::InvalidArgument(format!(
            "{} waypoints for {} cells",
            waypoints.len(),
            cells.len()
        )));
    }
    let fail = |m: String| {
        Ok(Feasibility {
            feasible: false,
            violation: Some(m),
        })
    };
    for (i, &c) in cells.iter().enumerate() {
        if c >= d.cells.len() || d.occ[c] {
            return fail(format!("waypoint {} is assigned to cell {c}, which is not free", i + 1));
        }
    }
    for (i, w) in cells.windows(2).enumerate() {
        if w[0] != w[1] && !graph.adjacent_cells(w[0], w[1]) {
            return fail(format!(
                "cells {} and {} at waypoints {} and {} are not connected",
                w[0],
                w[1],
                i + 1,
                i + 2
            ));
        }
    }
    for (i, (p, &c)) in waypoints.iter().zip(cells).enumerate() {
        let b = shrunk_box(&d.cells[c], &margins[c], d.resolution);
        if !box_contains(&b, p, POINT_TOL) {
            return fail(format!(
                "waypoint {} {p:?} lies outside cell {c} shrunk to {:?}..{:?}",
                i + 1,
                b.0,
                b.1
            ));
        }
    }
    Ok(Feasibility {
        feasible: true,
        violation: None,
    })
}

fn check_endpoint(ctx: &PlanContext, cell: usize, p: &Point3, what: &str) -> Result<()> {
    if !box_contains(&ctx.shrunk(cell), p, POINT_TOL) {
        return Err(Error::Query(format!(
            "{what} {p:?} is not inside the margin-shrunk cell {cell}"
        )));
    }
    Ok(())
}

/// Shortest path through the fixed cell sequence `cells` (cell ids) from
/// `w_in` in the first cell to `w_t` in the last.
pub fn socp_shortest_path(ctx: &PlanContext, cells: &[usize], w_in: Point3, w_t: Point3) -> Result<Path> {
    let (Some(&first), Some(&last)) = (cells.first(), cells.last()) else {
        return Err(Error::InvalidArgument("empty cell sequence".into()));
    };
    check_endpoint(ctx, first, &w_in, "start")?;
    check_endpoint(ctx, last, &w_t, "goal")?;
    if cells.len() == 1 {
        return Ok(Path::new(vec![w_in, w_t], vec![first, first]));
    }
    let inner = &cells[1..cells.len() - 1];
    let mut boxes = Vec::with_capacity(inner.len());
    for &c in inner {
        let b = ctx.shrunk(c);
        if (0..3).any(|k| b.0[k] > b.1[k]) {
            return Err(Error::Query(format!("cell {c} has no room inside its safety margins")));
        }
        boxes.push(b);
    }
    let n = inner.len();
    let at = |i: usize| match i {
        0 => Endpoint::Fixed(w_in),
        i if i == n + 1 => Endpoint::Fixed(w_t),
        i => Endpoint::Free(i - 1),
    };
    let program = DistanceProgram {
        boxes,
        segments: (1..=n + 1).map(|i| (at(i - 1), at(i))).collect(),
    };
    let sol = ctx.engine.solve(&program)?;
    let mut waypoints = Vec::with_capacity(n + 2);
    waypoints.push(w_in);
    waypoints.extend_from_slice(&sol.points);
    waypoints.push(w_t);
    Ok(Path::new(waypoints, cells.to_vec()))
}

/// Stops a planner on a sequence count, a time budget, or both.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub k_max: Option<usize>,
    pub deadline: Option<Duration>,
}

/// One incumbent improvement of an anytime planner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub seconds: f64,
    pub length: f64,
    pub k: usize,
}
