use std::cell::RefCell;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{socp_shortest_path, Path, PlanContext, StopRule, TraceSample};
use crate::error::Result;
use crate::geom::Point3;
use crate::search::yen_ksp;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KspOptions {
    pub stop: StopRule,
}

/// Outcome of an anytime planner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub path: Path,
    /// Every incumbent improvement, first solution included.
    pub trace: Vec<TraceSample>,
    /// Cell sequences evaluated.
    pub sequences: usize,
    /// Rank of the sequence that produced the returned path.
    pub best_k: usize,
    /// All loopless sequences were evaluated, so the path is optimal.
    pub exhausted: bool,
}

impl PlanResult {
    pub fn truncated(&self) -> bool {
        !self.exhausted
    }
}

/// Evaluates cell sequences in order of graph cost with the fixed-sequence
/// optimizer and keeps the shortest path seen. `Ok(None)` when the goal is
/// unreachable.
pub fn ksp_socp(ctx: &PlanContext, w_in: Point3, w_t: Point3, opts: &KspOptions) -> Result<Option<PlanResult>> {
    let started = Instant::now();
    let ov = ctx.overlay(w_in, w_t)?;
    if ov.same_cell() {
        let path = socp_shortest_path(ctx, &[ov.start_cell], w_in, w_t)?;
        return Ok(Some(PlanResult {
            trace: vec![TraceSample {
                seconds: started.elapsed().as_secs_f64(),
                length: path.length,
                k: 1,
            }],
            path,
            sequences: 1,
            best_k: 1,
            exhausted: true,
        }));
    }

    let mut best: Option<Path> = None;
    let mut best_k = 0;
    let mut trace = Vec::new();
    let mut evaluated = 0usize;
    let failure = RefCell::new(None);
    let graph = ctx.graph;
    let outcome = yen_ksp(
        &ov,
        ov.start_vertex,
        ov.goal_vertex,
        |v| ov.heuristic(v),
        |seq| {
            if failure.borrow().is_some() {
                return;
            }
            evaluated += 1;
            let cells: Vec<usize> = seq.vertices.iter().map(|&v| graph.cell_of(v)).collect();
            match socp_shortest_path(ctx, &cells, w_in, w_t) {
                Ok(p) => {
                    if best.as_ref().map_or(true, |b| p.length < b.length) {
                        trace.push(TraceSample {
                            seconds: started.elapsed().as_secs_f64(),
                            length: p.length,
                            k: evaluated,
                        });
                        best_k = evaluated;
                        best = Some(p);
                    }
                }
                Err(e) => *failure.borrow_mut() = Some(e),
            }
        },
        |p| {
            failure.borrow().is_some()
                || (p.found >= 1
                    && (opts.stop.k_max.is_some_and(|k| p.found >= k)
                        || opts.stop.deadline.is_some_and(|d| started.elapsed() >= d)))
        },
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(best.map(|path| PlanResult {
        path,
        trace,
        sequences: evaluated,
        best_k,
        exhausted: outcome.exhausted,
    }))
}

/// The single shortest cell sequence, optimized: [`ksp_socp`] stopped after
/// one sequence.
pub fn astar_socp(ctx: &PlanContext, w_in: Point3, w_t: Point3) -> Result<Option<PlanResult>> {
    let opts = KspOptions {
        stop: StopRule {
            k_max: Some(1),
            deadline: None,
        },
    };
    ksp_socp(ctx, w_in, w_t, &opts)
}
