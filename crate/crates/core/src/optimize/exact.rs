//! Branch and bound over loopless cell sequences.
//!
//! A node is a sequence prefix starting at the start cell. Its bound is the
//! shortest way to reach the last prefix cell through the prefix plus the
//! straight distance from there to the goal; every completion of the prefix
//! is at least that long. Children inherit the parent's bound until they are
//! popped, evaluated, and pushed again with their own.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use super::engine::{DistanceProgram, Endpoint};
use super::{ksp_socp, socp_shortest_path, KspOptions, Path, PlanContext, StopRule, TraceSample};
use crate::error::{Error, Result};
use crate::geom::{distance, Point3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactOptions {
    /// Cap on bound evaluations.
    pub max_nodes: usize,
    pub deadline: Option<Duration>,
    /// Sequences evaluated up front to seed the incumbent.
    pub warm_start_k: usize,
    /// Nodes whose bound is within this relative distance of the incumbent
    /// are pruned.
    pub rel_tol: f64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            max_nodes: 200_000,
            deadline: None,
            warm_start_k: 3,
            rel_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub path: Path,
    pub trace: Vec<TraceSample>,
    /// Bound evaluations performed.
    pub nodes: usize,
    /// Complete sequences evaluated, warm start included.
    pub sequences: usize,
}

/// Lower bound for the prefix `cells`: waypoints free in all but the first
/// cell, plus a final leg to `w_t`. Uses the smaller of the primal value and
/// the dual certificate so inexact solves cannot overstate it.
fn prefix_bound(ctx: &PlanContext, cells: &[usize], w_in: Point3, w_t: Point3) -> Result<f64> {
    let n = cells.len() - 1;
    let boxes: Vec<_> = cells[1..].iter().map(|&c| ctx.shrunk(c)).collect();
    let at = |i: usize| if i == 0 { Endpoint::Fixed(w_in) } else { Endpoint::Free(i - 1) };
    let mut segments: Vec<_> = (1..=n).map(|i| (at(i - 1), at(i))).collect();
    segments.push((at(n), Endpoint::Fixed(w_t)));
    let sol = ctx.engine.solve(&DistanceProgram { boxes, segments })?;
    Ok(sol.objective.min(sol.dual_objective).max(0.0))
}

/// Globally shortest path over all loopless cell sequences. `Ok(None)` when
/// the goal is unreachable; [`Error::Resource`] when the node cap or the
/// deadline is hit before optimality is proven.
pub fn exact_shortest_path(
    ctx: &PlanContext,
    w_in: Point3,
    w_t: Point3,
    opts: &ExactOptions,
) -> Result<Option<ExactResult>> {
    let started = Instant::now();
    let warm = KspOptions {
        stop: StopRule {
            k_max: Some(opts.warm_start_k.max(1)),
            deadline: None,
        },
    };
    let Some(seed) = ksp_socp(ctx, w_in, w_t, &warm)? else {
        return Ok(None);
    };
    let mut sequences = seed.sequences;
    let mut best = seed.path;
    let mut trace = vec![TraceSample {
        seconds: started.elapsed().as_secs_f64(),
        length: best.length,
        k: 0,
    }];
    if seed.exhausted {
        return Ok(Some(ExactResult {
            path: best,
            trace,
            nodes: 0,
            sequences,
        }));
    }

    let ov = ctx.overlay(w_in, w_t)?;
    let graph = ctx.graph;
    let goal = ov.goal_vertex;
    let mut heap: BinaryHeap<Reverse<(OrderedFloat<f64>, Vec<usize>, bool)>> = BinaryHeap::new();
    heap.push(Reverse((OrderedFloat(distance(&w_in, &w_t)), vec![ov.start_vertex], true)));
    let mut nodes = 0usize;
    let mut on_path = vec![false; graph.vertex_count()];

    while let Some(Reverse((OrderedFloat(bound), prefix, evaluated))) = heap.pop() {
        let cutoff = best.length * (1.0 - opts.rel_tol);
        if bound >= cutoff {
            break;
        }
        if !evaluated {
            let out_of_time = opts.deadline.is_some_and(|d| started.elapsed() >= d);
            if nodes >= opts.max_nodes || out_of_time {
                return Err(Error::Resource {
                    nodes,
                    best: Some(best.length),
                    bound,
                });
            }
            nodes += 1;
            let cells: Vec<usize> = prefix.iter().map(|&v| graph.cell_of(v)).collect();
            if *prefix.last().unwrap() == goal {
                sequences += 1;
                let path = socp_shortest_path(ctx, &cells, w_in, w_t)?;
                if path.length < best.length {
                    best = path;
                    trace.push(TraceSample {
                        seconds: started.elapsed().as_secs_f64(),
                        length: best.length,
                        k: sequences,
                    });
                }
            } else {
                let b = prefix_bound(ctx, &cells, w_in, w_t)?.max(bound);
                if b < cutoff {
                    heap.push(Reverse((OrderedFloat(b), prefix, true)));
                }
            }
            continue;
        }
        for &v in &prefix {
            on_path[v] = true;
        }
        for &(u, _) in graph.neighbors(*prefix.last().unwrap()) {
            if !on_path[u] {
                let mut child = prefix.clone();
                child.push(u);
                heap.push(Reverse((OrderedFloat(bound), child, false)));
            }
        }
        for &v in &prefix {
            on_path[v] = false;
        }
    }
    Ok(Some(ExactResult {
        path: best,
        trace,
        nodes,
        sequences,
    }))
}
