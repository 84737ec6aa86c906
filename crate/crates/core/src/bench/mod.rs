//! Experiment harness: decomposition metrics over world sizes, planner
//! comparisons on a fixed corner-to-corner query, scaling fits, and CSV
//! output.
//!
//! Deterministic quantities (counts, lengths, statuses) and wall-clock
//! timings go to separate files so reruns can be compared byte for byte.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baseline::theta_star;
use crate::cellgraph::{build_graph, build_weighted_graph, compute_margins, DegreeStats};
use crate::decomp::{decompose, Decomposition};
use crate::error::{Error, Result};
use crate::geom::Point3;
use crate::grid::{generate_city_world, OccupancyGrid, WorldSpec};
use crate::optimize::engine::ConicEngine;
use crate::optimize::{
    astar_socp, exact_shortest_path, ksp_socp, ExactOptions, KspOptions, PlanContext, StopRule, TraceSample,
};

/// Storage of a decomposition and its graph as 8-byte values: six corner
/// indices, one flag and three point coordinates per cell, plus two vertex
/// ids and one weight per edge.
pub fn memory_estimate(cells: usize, edges: usize) -> u64 {
    8 * (6 * cells as u64 + cells as u64 + 3 * cells as u64 + 2 * edges as u64 + edges as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompRecord {
    pub world: WorldSpec,
    pub seconds: f64,
    pub cells: usize,
    pub free_cells: usize,
    pub edges: usize,
    pub memory_bytes: u64,
    pub degree: DegreeStats,
}

pub fn decomposition_record(world: &WorldSpec, grid: &OccupancyGrid) -> (DecompRecord, Decomposition) {
    let t = Instant::now();
    let d = decompose(grid);
    let seconds = t.elapsed().as_secs_f64();
    let graph = build_graph(&d, grid);
    let rec = DecompRecord {
        world: *world,
        seconds,
        cells: d.cell_count(),
        free_cells: graph.vertex_count(),
        edges: graph.edge_count(),
        memory_bytes: memory_estimate(d.cell_count(), graph.edge_count()),
        degree: graph.degree_stats(),
    };
    (rec, d)
}

/// Least-squares fit `y = a * x^2` through the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub coefficient: f64,
    /// Coefficient of determination against the mean of `y`.
    pub r_squared: f64,
}

pub fn fit_quadratic(x: &[f64], y: &[f64]) -> QuadraticFit {
    assert_eq!(x.len(), y.len());
    assert!(!x.is_empty(), "fit needs at least one sample");
    let sxx: f64 = x.iter().map(|v| v.powi(4)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * a * b).sum();
    let a = sxy / sxx;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(u, v)| (v - a * u * u).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    // With constant y the fit is either exact (up to rounding) or useless.
    let scale: f64 = y.iter().map(|v| v * v).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= 1e-24 * scale {
        1.0
    } else {
        0.0
    };
    QuadraticFit {
        coefficient: a,
        r_squared,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSuite {
    pub records: Vec<DecompRecord>,
    pub cell_fit: QuadraticFit,
    pub time_fit: QuadraticFit,
}

/// Decomposes one world per `(side, seed)` pair and fits cell count and
/// time against the squared side length.
pub fn run_decomposition_suite(sides: &[usize], height: usize, block: usize, seeds: &[u64]) -> Result<DecompositionSuite> {
    if sides.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument("suite needs at least one size and one seed".into()));
    }
    let mut records = Vec::new();
    for &side in sides {
        for &seed in seeds {
            let spec = WorldSpec::new(side, height, block, seed);
            let grid = generate_city_world(&spec)?;
            records.push(decomposition_record(&spec, &grid).0);
        }
    }
    let x: Vec<f64> = records.iter().map(|r| r.world.side as f64).collect();
    let cells: Vec<f64> = records.iter().map(|r| r.cells as f64).collect();
    let secs: Vec<f64> = records.iter().map(|r| r.seconds).collect();
    Ok(DecompositionSuite {
        cell_fit: fit_quadratic(&x, &cells),
        time_fit: fit_quadratic(&x, &secs),
        records,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Planner {
    Theta,
    AstarSocp,
    KspSocp,
    Exact,
}

impl Planner {
    pub const ALL: [Planner; 4] = [Planner::Theta, Planner::AstarSocp, Planner::KspSocp, Planner::Exact];

    pub fn name(self) -> &'static str {
        match self {
            Planner::Theta => "theta",
            Planner::AstarSocp => "astar-socp",
            Planner::KspSocp => "ksp-socp",
            Planner::Exact => "exact",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerStatus {
    Ok,
    NoPath,
    /// Stopped at a node cap or deadline before proving optimality.
    Resource,
    QueryError,
    NumericError,
}

impl PlannerStatus {
    pub fn name(self) -> &'static str {
        match self {
            PlannerStatus::Ok => "ok",
            PlannerStatus::NoPath => "no-path",
            PlannerStatus::Resource => "resource",
            PlannerStatus::QueryError => "query-error",
            PlannerStatus::NumericError => "numeric-error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerRecord {
    pub planner: Planner,
    pub status: PlannerStatus,
    /// Best length found, also for resource-limited runs.
    pub length: Option<f64>,
    pub seconds: f64,
    /// Cell sequences evaluated (graph planners).
    pub largest_k: Option<usize>,
    pub best_k: Option<usize>,
    /// Stopped by `k_max` or a deadline before exhausting the sequences.
    pub truncated: bool,
    /// Search effort: grid expansions or branch-and-bound nodes.
    pub effort: Option<usize>,
    pub trace: Vec<TraceSample>,
    pub waypoints: Vec<Point3>,
    pub cells: Vec<usize>,
    pub message: Option<String>,
}

impl PlannerRecord {
    fn failed(planner: Planner, err: &Error, seconds: f64) -> Self {
        let (status, length) = match err {
            Error::Query(_) => (PlannerStatus::QueryError, None),
            Error::Resource { best, .. } => (PlannerStatus::Resource, *best),
            _ => (PlannerStatus::NumericError, None),
        };
        Self {
            planner,
            status,
            length,
            seconds,
            largest_k: None,
            best_k: None,
            truncated: matches!(err, Error::Resource { .. }),
            effort: match err {
                Error::Resource { nodes, .. } => Some(*nodes),
                _ => None,
            },
            trace: vec![],
            waypoints: vec![],
            cells: vec![],
            message: Some(err.to_string()),
        }
    }

    fn no_path(planner: Planner, seconds: f64) -> Self {
        Self {
            planner,
            status: PlannerStatus::NoPath,
            length: None,
            seconds,
            largest_k: None,
            best_k: None,
            truncated: false,
            effort: None,
            trace: vec![],
            waypoints: vec![],
            cells: vec![],
            message: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerOptions {
    /// Safety margin, meters.
    pub eps: f64,
    pub k_max: Option<usize>,
    /// Shared by the anytime and exact planners.
    pub deadline: Option<Duration>,
    pub exact_max_nodes: usize,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        Self {
            eps: 1.0,
            k_max: Some(10),
            deadline: None,
            exact_max_nodes: ExactOptions::default().max_nodes,
        }
    }
}

/// Slack allowed when comparing lengths of different planners.
pub const CHAIN_REL_TOL: f64 = 1e-9;

/// Whether exact <= KSP-SOCP <= A*-SOCP holds among the completed runs.
pub fn chain_holds(records: &[PlannerRecord]) -> bool {
    let len = |p: Planner| {
        records
            .iter()
            .find(|r| r.planner == p && r.status == PlannerStatus::Ok)
            .and_then(|r| r.length)
    };
    let le = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => a <= b * (1.0 + CHAIN_REL_TOL),
        _ => true,
    };
    let (e, k, a) = (len(Planner::Exact), len(Planner::KspSocp), len(Planner::AstarSocp));
    le(e, k) && le(k, a) && le(e, a)
}

/// Runs `planners` on one decomposed world from `start` to `goal`.
pub fn run_planner_suite(
    grid: &OccupancyGrid,
    d: &Decomposition,
    engine: &dyn ConicEngine,
    start: Point3,
    goal: Point3,
    planners: &[Planner],
    opts: &PlannerOptions,
) -> Result<Vec<PlannerRecord>> {
    let margins = compute_margins(d, opts.eps)?;
    let graph = build_weighted_graph(d, grid, &margins, engine)?;
    let ctx = PlanContext {
        decomposition: d,
        graph: &graph,
        margins: &margins,
        engine,
    };
    let mut out = Vec::new();
    for &planner in planners {
        let t = Instant::now();
        let rec = match planner {
            Planner::Theta => match theta_star(grid, start, goal) {
                Ok(Some(p)) => PlannerRecord {
                    planner,
                    status: PlannerStatus::Ok,
                    length: Some(p.length),
                    seconds: t.elapsed().as_secs_f64(),
                    largest_k: None,
                    best_k: None,
                    truncated: false,
                    effort: Some(p.expansions),
                    trace: vec![],
                    waypoints: p.points,
                    cells: vec![],
                    message: None,
                },
                Ok(None) => PlannerRecord::no_path(planner, t.elapsed().as_secs_f64()),
                Err(e) => PlannerRecord::failed(planner, &e, t.elapsed().as_secs_f64()),
            },
            Planner::AstarSocp | Planner::KspSocp => {
                let res = if planner == Planner::AstarSocp {
                    astar_socp(&ctx, start, goal)
                } else {
                    let stop = StopRule {
                        k_max: opts.k_max,
                        deadline: opts.deadline,
                    };
                    ksp_socp(&ctx, start, goal, &KspOptions { stop })
                };
                match res {
                    Ok(Some(r)) => PlannerRecord {
                        planner,
                        status: PlannerStatus::Ok,
                        length: Some(r.path.length),
                        seconds: t.elapsed().as_secs_f64(),
                        largest_k: Some(r.sequences),
                        best_k: Some(r.best_k),
                        truncated: r.truncated(),
                        effort: None,
                        trace: r.trace,
                        waypoints: r.path.waypoints,
                        cells: r.path.cells,
                        message: None,
                    },
                    Ok(None) => PlannerRecord::no_path(planner, t.elapsed().as_secs_f64()),
                    Err(e) => PlannerRecord::failed(planner, &e, t.elapsed().as_secs_f64()),
                }
            }
            Planner::Exact => {
                let eo = ExactOptions {
                    max_nodes: opts.exact_max_nodes,
                    deadline: opts.deadline,
                    ..ExactOptions::default()
                };
                match exact_shortest_path(&ctx, start, goal, &eo) {
                    Ok(Some(r)) => PlannerRecord {
                        planner,
                        status: PlannerStatus::Ok,
                        length: Some(r.path.length),
                        seconds: t.elapsed().as_secs_f64(),
                        largest_k: Some(r.sequences),
                        best_k: None,
                        truncated: false,
                        effort: Some(r.nodes),
                        trace: r.trace,
                        waypoints: r.path.waypoints,
                        cells: r.path.cells,
                        message: None,
                    },
                    Ok(None) => PlannerRecord::no_path(planner, t.elapsed().as_secs_f64()),
                    Err(e) => PlannerRecord::failed(planner, &e, t.elapsed().as_secs_f64()),
                }
            }
        };
        out.push(rec);
    }
    Ok(out)
}

/// The corner-to-corner query used throughout the experiments.
pub fn standard_query(spec: &WorldSpec) -> (Point3, Point3) {
    let (l, h) = (spec.side as f64, spec.height as f64);
    ([1.0, 1.0, 1.0], [l - 1.0, l - 1.0, h - 1.0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldReport {
    pub decomposition: DecompRecord,
    pub planners: Vec<PlannerRecord>,
    pub chain_holds: bool,
}

/// Full pipeline on each world: decomposition record plus planner records
/// for the standard query.
pub fn run_bench(
    worlds: &[WorldSpec],
    planners: &[Planner],
    opts: &PlannerOptions,
    engine: &dyn ConicEngine,
) -> Result<Vec<WorldReport>> {
    let mut out = Vec::new();
    for spec in worlds {
        let grid = generate_city_world(spec)?;
        let (rec, d) = decomposition_record(spec, &grid);
        let (start, goal) = standard_query(spec);
        let planners = run_planner_suite(&grid, &d, engine, start, goal, planners, opts)?;
        out.push(WorldReport {
            decomposition: rec,
            chain_holds: chain_holds(&planners),
            planners,
        });
    }
    Ok(out)
}

fn world_label(w: &WorldSpec) -> String {
    format!("L{}-H{}-b{}-s{}", w.side, w.height, w.block, w.seed)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per (world, planner) with the run-independent columns only.
pub fn write_results_csv<W: Write>(reports: &[WorldReport], time_based: bool, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "world", "side", "height", "block", "seed", "cells", "free_cells", "edges", "memory_bytes", "planner",
        "status", "length", "largest_k", "best_k", "truncated", "effort", "deterministic",
    ])
    .map_err(csv_err)?;
    for r in reports {
        let d = &r.decomposition;
        for p in &r.planners {
            let deterministic = !(time_based && matches!(p.planner, Planner::KspSocp | Planner::Exact));
            out.write_record([
                world_label(&d.world),
                d.world.side.to_string(),
                d.world.height.to_string(),
                d.world.block.to_string(),
                d.world.seed.to_string(),
                d.cells.to_string(),
                d.free_cells.to_string(),
                d.edges.to_string(),
                d.memory_bytes.to_string(),
                p.planner.name().to_string(),
                p.status.name().to_string(),
                p.length.map(|l| format!("{l:.9}")).unwrap_or_default(),
                opt(p.largest_k),
                opt(p.best_k),
                p.truncated.to_string(),
                opt(p.effort),
                deterministic.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Wall-clock timings per world and planner.
pub fn write_timings_csv<W: Write>(reports: &[WorldReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["world", "stage", "seconds"]).map_err(csv_err)?;
    for r in reports {
        let label = world_label(&r.decomposition.world);
        out.write_record([label.clone(), "decompose".into(), format!("{:.6}", r.decomposition.seconds)])
            .map_err(csv_err)?;
        for p in &r.planners {
            out.write_record([label.clone(), p.planner.name().into(), format!("{:.6}", p.seconds)])
                .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Anytime trace as `(seconds, length, k)` rows.
pub fn write_trace_csv<W: Write>(trace: &[TraceSample], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["seconds", "length", "k"]).map_err(csv_err)?;
    for s in trace {
        out.write_record([format!("{:.6}", s.seconds), format!("{:.9}", s.length), s.k.to_string()])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn trace_file_name(w: &WorldSpec, planner: Planner) -> String {
    format!("trace-{}-{}.csv", world_label(w), planner.name())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::new(std::io::ErrorKind::Other, format!("{other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_formula() {
        assert_eq!(memory_estimate(380, 1000), 8 * (3800 + 3000));
        assert_eq!(memory_estimate(0, 0), 0);
    }

    #[test]
    fn exact_quadratic_fits_perfectly() {
        let x = [50.0, 100.0, 150.0];
        let y: Vec<f64> = x.iter().map(|v| 0.05 * v * v).collect();
        let f = fit_quadratic(&x, &y);
        assert!((f.coefficient - 0.05).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planner_names_round_trip() {
        for p in Planner::ALL {
            assert_eq!(Planner::parse(p.name()), Some(p));
        }
        assert_eq!(Planner::parse("dijkstra"), None);
    }
}
