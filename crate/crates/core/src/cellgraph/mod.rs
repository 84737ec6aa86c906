//! Connectivity graph over free cells.
//!
//! Vertices are free cells; an edge joins two free cells that share a face
//! patch of positive area and whose joint convex hull meets no obstacle. Each
//! vertex carries a representative point chosen to minimize the total edge
//! length, and edge weights are the distances between those points.

mod io;

pub use io::{load_graph, save_graph, GraphDoc, StoredEdge, StoredVertex, GRAPH_FORMAT_VERSION};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{mutually_visible, Cell, Decomposition};
use crate::error::{Error, Result};
use crate::geom::{distance, Point3};
use crate::grid::{OccupancyGrid, OccupancyIndex};
use crate::optimize::engine::{ConicEngine, DistanceProgram, Endpoint};

/// Smallest edge weight, meters.
pub const MIN_WEIGHT: f64 = 1e-9;
/// Fraction of a cell's extent kept when opposing margins would consume it.
pub const MARGIN_KEEP: f64 = 0.1;
/// Slack used when testing a point against a shrunk cell box.
pub const POINT_TOL: f64 = 1e-9;

/// Safety margin per face in meters, ordered `-x, -y, -z, +x, +y, +z`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FaceMargins(pub [f64; 6]);

/// Margins for every cell of `d`: `eps` on free-cell faces that border
/// obstacle voxels, zero elsewhere. Where two opposing margins would meet,
/// both are scaled so that a tenth of the extent remains.
pub fn compute_margins(d: &Decomposition, eps: f64) -> Result<Vec<FaceMargins>> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "safety margin must be a nonnegative number of meters, got {eps}"
        )));
    }
    let out = d
        .cells
        .iter()
        .zip(&d.occ)
        .map(|(c, &obstacle)| {
            let mut m = [0.0; 6];
            if obstacle || eps == 0.0 {
                return FaceMargins(m);
            }
            for (face, slot) in m.iter_mut().enumerate() {
                if let Some(slab) = c.face_slab(face, d.dims) {
                    // Faces are uniform, so one voxel decides.
                    let owner = d.coverage.owner(slab.lo).expect("complete coverage");
                    if d.occ[owner] {
                        *slot = eps;
                    }
                }
            }
            for k in 0..3 {
                let extent = (c.hi[k] + 1 - c.lo[k]) as f64 * d.resolution;
                let sum = m[k] + m[k + 3];
                if sum >= extent {
                    let s = (1.0 - MARGIN_KEEP) * extent / sum;
                    m[k] *= s;
                    m[k + 3] *= s;
                }
            }
            FaceMargins(m)
        })
        .collect();
    Ok(out)
}

/// Box of `cell` in meters after removing `margins`.
pub fn shrunk_box(cell: &Cell, margins: &FaceMargins, resolution: f64) -> (Point3, Point3) {
    let (lo, hi) = cell.bounds_m(resolution);
    (
        std::array::from_fn(|k| lo[k] + margins.0[k]),
        std::array::from_fn(|k| hi[k] - margins.0[k + 3]),
    )
}

pub fn box_contains(b: &(Point3, Point3), p: &Point3, tol: f64) -> bool {
    (0..3).all(|k| p[k] >= b.0[k] - tol && p[k] <= b.1[k] + tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectivityGraph {
    /// Cell id of each vertex, ascending.
    cells: Vec<usize>,
    /// Vertex of each cell id, `usize::MAX` for obstacle cells.
    vertex_of: Vec<usize>,
    /// Vertex pairs `(a, b)` with `a < b`, sorted.
    edges: Vec<(usize, usize)>,
    /// `(neighbor, edge index)` per vertex, sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    pub points: Vec<Point3>,
    pub weights: Vec<f64>,
}

impl ConnectivityGraph {
    pub(crate) fn from_parts(cells: Vec<usize>, cell_count: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut vertex_of = vec![usize::MAX; cell_count];
        for (v, &c) in cells.iter().enumerate() {
            vertex_of[c] = v;
        }
        let mut adjacency = vec![Vec::new(); cells.len()];
        for (e, &(a, b)) in edges.iter().enumerate() {
            adjacency[a].push((b, e));
            adjacency[b].push((a, e));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let n = cells.len();
        Self {
            cells,
            vertex_of,
            edges,
            adjacency,
            points: vec![[0.0; 3]; n],
            weights: vec![],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.cells.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn cell_of(&self, v: usize) -> usize {
        self.cells[v]
    }

    pub fn vertex_of(&self, cell: usize) -> Option<usize> {
        self.vertex_of.get(cell).copied().filter(|&v| v != usize::MAX)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    /// `U(i, j)` on cell ids.
    pub fn adjacent_cells(&self, a: usize, b: usize) -> bool {
        match (self.vertex_of(a), self.vertex_of(b)) {
            (Some(va), Some(vb)) => self.edge_between(va, vb).is_some(),
            _ => false,
        }
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .binary_search_by_key(&b, |&(n, _)| n)
            .ok()
            .map(|i| self.adjacency[a][i].1)
    }

    pub fn degree_stats(&self) -> DegreeStats {
        DegreeStats::new(self.adjacency.iter().map(Vec::len).collect())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub mean: f64,
    pub median: f64,
    pub min: usize,
    pub max: usize,
}

impl DegreeStats {
    fn new(mut degrees: Vec<usize>) -> Self {
        if degrees.is_empty() {
            return Self::default();
        }
        degrees.sort_unstable();
        let n = degrees.len();
        let median = if n % 2 == 1 {
            degrees[n / 2] as f64
        } else {
            0.5 * (degrees[n / 2 - 1] + degrees[n / 2]) as f64
        };
        Self {
            mean: degrees.iter().sum::<usize>() as f64 / n as f64,
            median,
            min: degrees[0],
            max: degrees[n - 1],
        }
    }
}

/// True when `a` and `b` share a face patch of positive area.
pub fn face_adjacent(a: &Cell, b: &Cell) -> bool {
    (0..3).any(|k| {
        (a.hi[k] + 1 == b.lo[k] || b.hi[k] + 1 == a.lo[k])
            && (0..3)
                .filter(|&j| j != k)
                .all(|j| a.lo[j] <= b.hi[j] && b.lo[j] <= a.hi[j])
    })
}

/// Graph over the free cells of `d`, weights unset.
pub fn build_graph(d: &Decomposition, grid: &OccupancyGrid) -> ConnectivityGraph {
    let index = OccupancyIndex::new(grid);
    let cells: Vec<usize> = d.free_cells().collect();
    let edges: Vec<(usize, usize)> = cells
        .par_iter()
        .map_init(Vec::new, |scratch, &c| {
            let cell = &d.cells[c];
            let mut found = Vec::new();
            for face in 0..6 {
                let Some(slab) = cell.face_slab(face, d.dims) else {
                    continue;
                };
                d.coverage.owners_in(&slab, scratch);
                for &n in scratch.iter() {
                    if n > c && !d.occ[n] && !found.contains(&n) {
                        found.push(n);
                    }
                }
            }
            found.sort_unstable();
            found
                .into_iter()
                .filter(|&n| mutually_visible(cell, &d.cells[n], false, &index))
                .map(|n| (c, n))
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    let mut vertex_of = vec![usize::MAX; d.cells.len()];
    for (v, &c) in cells.iter().enumerate() {
        vertex_of[c] = v;
    }
    let mut edges: Vec<(usize, usize)> = edges
        .into_iter()
        .map(|(a, b)| (vertex_of[a], vertex_of[b]))
        .collect();
    edges.sort_unstable();
    ConnectivityGraph::from_parts(cells, d.cells.len(), edges)
}

/// Representative points minimizing the summed length of all edges, each
/// point held in its margin-shrunk cell. Isolated vertices get box centers.
pub fn optimize_representative_points(
    graph: &ConnectivityGraph,
    d: &Decomposition,
    margins: &[FaceMargins],
    engine: &dyn ConicEngine,
) -> Result<Vec<Point3>> {
    let boxes: Vec<(Point3, Point3)> = (0..graph.vertex_count())
        .map(|v| {
            let c = graph.cell_of(v);
            shrunk_box(&d.cells[c], &margins[c], d.resolution)
        })
        .collect();
    for (v, (lo, hi)) in boxes.iter().enumerate() {
        if (0..3).any(|k| lo[k] > hi[k]) {
            return Err(Error::Query(format!(
                "cell {} has no room left inside its safety margins",
                graph.cell_of(v)
            )));
        }
    }
    let centers: Vec<Point3> = boxes
        .iter()
        .map(|(lo, hi)| std::array::from_fn(|k| 0.5 * (lo[k] + hi[k])))
        .collect();
    if graph.edge_count() == 0 {
        return Ok(centers);
    }
    let program = DistanceProgram {
        boxes: boxes.clone(),
        segments: graph
            .edges()
            .iter()
            .map(|&(a, b)| (Endpoint::Free(a), Endpoint::Free(b)))
            .collect(),
    };
    let sol = engine.solve(&program)?;
    Ok((0..graph.vertex_count())
        .map(|v| if graph.neighbors(v).is_empty() { centers[v] } else { sol.points[v] })
        .collect())
}

/// Summed edge length of `points`, the quantity the representative points minimize.
pub fn representative_objective(graph: &ConnectivityGraph, points: &[Point3]) -> f64 {
    graph
        .edges()
        .iter()
        .map(|&(a, b)| distance(&points[a], &points[b]))
        .sum()
}

/// Stores `points` and sets each weight to the distance between its ends.
pub fn assign_weights(graph: &mut ConnectivityGraph, points: Vec<Point3>) {
    assert_eq!(points.len(), graph.vertex_count());
    graph.weights = graph
        .edges
        .iter()
        .map(|&(a, b)| distance(&points[a], &points[b]).max(MIN_WEIGHT))
        .collect();
    graph.points = points;
}

/// Builds the graph, optimizes its points and assigns weights.
pub fn build_weighted_graph(
    d: &Decomposition,
    grid: &OccupancyGrid,
    margins: &[FaceMargins],
    engine: &dyn ConicEngine,
) -> Result<ConnectivityGraph> {
    let mut g = build_graph(d, grid);
    let q = optimize_representative_points(&g, d, margins, engine)?;
    assign_weights(&mut g, q);
    Ok(g)
}

/// Free cell hosting `p`: the lowest-id free cell among those whose closed
/// box contains `p` and whose shrunk box still contains it.
pub fn locate_point(d: &Decomposition, margins: &[FaceMargins], p: &Point3, what: &str) -> Result<usize> {
    let res = d.resolution;
    let mut candidates: Vec<usize> = Vec::new();
    let mut ranges = [[0usize; 2]; 3];
    for k in 0..3 {
        let t = p[k] / res;
        if !(t.is_finite() && t >= 0.0 && t <= d.dims[k] as f64) {
            return Err(Error::Query(format!("{what} {p:?} lies outside the grid")));
        }
        let f = t.floor();
        let lo = if t == f && f >= 1.0 { f as usize } else { f as usize + 1 };
        let hi = (f as usize + 1).min(d.dims[k]);
        ranges[k] = [lo.min(hi), hi];
    }
    for z in ranges[2][0]..=ranges[2][1] {
        for y in ranges[1][0]..=ranges[1][1] {
            for x in ranges[0][0]..=ranges[0][1] {
                if let Some(c) = d.coverage.owner([x, y, z]) {
                    if !candidates.contains(&c) {
                        candidates.push(c);
                    }
                }
            }
        }
    }
    candidates.sort_unstable();
    let free: Vec<usize> = candidates.into_iter().filter(|&c| !d.occ[c]).collect();
    if free.is_empty() {
        return Err(Error::Query(format!("{what} {p:?} lies inside an obstacle")));
    }
    free.iter()
        .copied()
        .find(|&c| box_contains(&shrunk_box(&d.cells[c], &margins[c], res), p, POINT_TOL))
        .ok_or_else(|| {
            Error::Query(format!(
                "{what} {p:?} lies within the safety margin of an obstacle"
            ))
        })
}

/// Per-query view of the graph with the start and goal points standing in
/// for the representative points of their cells.
#[derive(Clone, Debug)]
pub struct QueryOverlay<'g> {
    graph: &'g ConnectivityGraph,
    pub start_cell: usize,
    pub goal_cell: usize,
    pub start_vertex: usize,
    pub goal_vertex: usize,
    pub w_in: Point3,
    pub w_t: Point3,
    /// `(edge, weight)` for every re-weighted edge, sorted by edge.
    pub changed: Vec<(usize, f64)>,
}

impl<'g> QueryOverlay<'g> {
    pub fn graph(&self) -> &'g ConnectivityGraph {
        self.graph
    }

    pub fn anchor(&self, v: usize) -> Point3 {
        if v == self.start_vertex {
            self.w_in
        } else if v == self.goal_vertex {
            self.w_t
        } else {
            self.graph.points[v]
        }
    }

    pub fn weight(&self, e: usize) -> f64 {
        match self.changed.binary_search_by_key(&e, |&(i, _)| i) {
            Ok(i) => self.changed[i].1,
            Err(_) => self.graph.weights[e],
        }
    }

    /// Straight-line distance from `v`'s anchor to the goal.
    pub fn heuristic(&self, v: usize) -> f64 {
        distance(&self.anchor(v), &self.w_t)
    }

    pub fn same_cell(&self) -> bool {
        self.start_cell == self.goal_cell
    }
}

pub fn query_overlay<'g>(
    graph: &'g ConnectivityGraph,
    d: &Decomposition,
    margins: &[FaceMargins],
    w_in: Point3,
    w_t: Point3,
) -> Result<QueryOverlay<'g>> {
    assert_eq!(graph.weights.len(), graph.edge_count(), "graph weights are unset");
    let start_cell = locate_point(d, margins, &w_in, "start")?;
    let goal_cell = locate_point(d, margins, &w_t, "goal")?;
    let start_vertex = graph.vertex_of(start_cell).expect("free cell");
    let goal_vertex = graph.vertex_of(goal_cell).expect("free cell");
    let mut ov = QueryOverlay {
        graph,
        start_cell,
        goal_cell,
        start_vertex,
        goal_vertex,
        w_in,
        w_t,
        changed: Vec::new(),
    };
    if start_cell != goal_cell {
        let mut changed = Vec::new();
        for v in [start_vertex, goal_vertex] {
            for &(n, e) in graph.neighbors(v) {
                let w = distance(&ov.anchor(v), &ov.anchor(n)).max(MIN_WEIGHT);
                changed.push((e, w));
            }
        }
        changed.sort_by_key(|&(e, _)| e);
        changed.dedup_by_key(|&mut (e, _)| e);
        ov.changed = changed;
    }
    Ok(ov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::decompose;
    use crate::optimize::engine::ClarabelEngine;

    #[test]
    fn single_cell_graph() {
        let g = OccupancyGrid::new([4, 4, 4], 1.0).unwrap();
        let d = decompose(&g);
        let graph = build_graph(&d, &g);
        assert_eq!((graph.vertex_count(), graph.edge_count()), (1, 0));
        let m = compute_margins(&d, 1.0).unwrap();
        assert_eq!(m[0], FaceMargins::default());
        let q = optimize_representative_points(&graph, &d, &m, &ClarabelEngine).unwrap();
        assert_eq!(q, vec![[2.0, 2.0, 2.0]]);
    }

    #[test]
    fn obstacle_separates_row() {
        let mut g = OccupancyGrid::new([3, 1, 1], 1.0).unwrap();
        g.set([2, 1, 1], true);
        let d = decompose(&g);
        let graph = build_graph(&d, &g);
        assert_eq!((graph.vertex_count(), graph.edge_count()), (2, 0));
        let m = compute_margins(&d, 1.0).unwrap();
        // The +x margin of the first cell would eat the whole voxel.
        assert!((m[0].0[3] - 0.9).abs() < 1e-12);
        assert_eq!(m[1], FaceMargins::default());
    }

    #[test]
    fn corner_contact_is_not_adjacency() {
        let a = Cell::new([1, 1, 1], [1, 1, 1]);
        assert!(face_adjacent(&a, &Cell::unit([2, 1, 1])));
        assert!(!face_adjacent(&a, &Cell::unit([2, 2, 1])));
        assert!(!face_adjacent(&a, &Cell::unit([2, 2, 2])));
        assert!(!face_adjacent(&a, &Cell::unit([3, 1, 1])));
    }

    #[test]
    fn degree_stats_of_a_path() {
        let s = DegreeStats::new(vec![1, 2, 2, 1]);
        assert_eq!((s.mean, s.median, s.min, s.max), (1.5, 1.5, 1, 2));
    }

    #[test]
    fn weights_are_clamped() {
        let mut graph = ConnectivityGraph::from_parts(vec![0, 1], 2, vec![(0, 1)]);
        assign_weights(&mut graph, vec![[1.0; 3], [1.0; 3]]);
        assert_eq!(graph.weights, vec![MIN_WEIGHT]);
        assign_weights(&mut graph, vec![[0.0; 3], [3.0, 0.0, 0.0]]);
        assert_eq!(graph.weights, vec![3.0]);
    }
}
