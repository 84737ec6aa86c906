//! Shortest cell sequences: A* and Yen's k-shortest loopless paths.
//!
//! Heap ties are broken by cost, then hop count, then vertex ids, so both
//! engines are deterministic.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::cellgraph::QueryOverlay;

/// Loopless vertex sequence with its total cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSequence {
    pub vertices: Vec<usize>,
    pub cost: f64,
}

/// Read-only weighted undirected graph as seen by the search engines.
pub trait SearchGraph {
    fn vertex_count(&self) -> usize;
    /// Appends `(neighbor, weight)` pairs of `v` to `out`.
    fn neighbors(&self, v: usize, out: &mut Vec<(usize, f64)>);
}

/// Plain adjacency lists.
#[derive(Clone, Debug, Default)]
pub struct AdjacencyList(pub Vec<Vec<(usize, f64)>>);

impl AdjacencyList {
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        for list in &mut adj {
            list.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        }
        Self(adj)
    }
}

impl SearchGraph for AdjacencyList {
    fn vertex_count(&self) -> usize {
        self.0.len()
    }

    fn neighbors(&self, v: usize, out: &mut Vec<(usize, f64)>) {
        out.extend_from_slice(&self.0[v]);
    }
}

impl SearchGraph for QueryOverlay<'_> {
    fn vertex_count(&self) -> usize {
        self.graph().vertex_count()
    }

    fn neighbors(&self, v: usize, out: &mut Vec<(usize, f64)>) {
        out.extend(self.graph().neighbors(v).iter().map(|&(n, e)| (n, self.weight(e))));
    }
}

/// Cost of walking `path` in `g`, summed front to back. `None` if two
/// consecutive vertices are not adjacent.
pub fn path_cost<G: SearchGraph + ?Sized>(g: &G, path: &[usize]) -> Option<f64> {
    let mut buf = Vec::new();
    let mut total = 0.0;
    for w in path.windows(2) {
        buf.clear();
        g.neighbors(w[0], &mut buf);
        let weight = buf
            .iter()
            .filter(|&&(n, _)| n == w[1])
            .map(|&(_, c)| c)
            .min_by(f64::total_cmp)?;
        total += weight;
    }
    Some(total)
}

struct Mask<'a> {
    vertices: &'a [bool],
    edges: &'a HashSet<(usize, usize)>,
}

fn search<G, H>(g: &G, src: usize, dst: usize, h: &H, mask: Option<&Mask>) -> Option<CellSequence>
where
    G: SearchGraph + ?Sized,
    H: Fn(usize) -> f64,
{
    let n = g.vertex_count();
    let mut best = vec![f64::INFINITY; n];
    let mut hops = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    best[src] = 0.0;
    hops[src] = 0;
    heap.push(Reverse((OrderedFloat(h(src)), 0usize, src, OrderedFloat(0.0))));
    let mut buf = Vec::new();
    while let Some(Reverse((_, _, v, OrderedFloat(gv)))) = heap.pop() {
        if gv > best[v] {
            continue;
        }
        if v == dst {
            let mut vertices = vec![dst];
            while *vertices.last().unwrap() != src {
                vertices.push(parent[*vertices.last().unwrap()]);
            }
            vertices.reverse();
            let cost = path_cost(g, &vertices).expect("reconstructed path is connected");
            return Some(CellSequence { vertices, cost });
        }
        buf.clear();
        g.neighbors(v, &mut buf);
        for &(u, w) in &buf {
            if let Some(m) = mask {
                if m.vertices[u] || m.edges.contains(&(v.min(u), v.max(u))) {
                    continue;
                }
            }
            let cand = gv + w;
            if cand < best[u] {
                best[u] = cand;
                hops[u] = hops[v] + 1;
                parent[u] = v;
                heap.push(Reverse((OrderedFloat(cand + h(u)), hops[u], u, OrderedFloat(cand))));
            }
        }
    }
    None
}

/// Minimum-cost sequence from `src` to `dst` guided by heuristic `h`, which
/// must never overestimate the remaining cost. `None` when unreachable.
pub fn astar<G, H>(g: &G, src: usize, dst: usize, h: H) -> Option<CellSequence>
where
    G: SearchGraph + ?Sized,
    H: Fn(usize) -> f64,
{
    search(g, src, dst, &h, None)
}

/// Shortest sequence under an overlay, guided by straight-line distance to
/// the goal.
pub fn astar_overlay(ov: &QueryOverlay) -> Option<CellSequence> {
    astar(ov, ov.start_vertex, ov.goal_vertex, |v| ov.heuristic(v))
}

/// State handed to the stop predicate of [`yen_ksp`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YenProgress {
    /// Sequences emitted so far.
    pub found: usize,
    pub elapsed: Duration,
    /// Cheapest candidate not yet emitted.
    pub best_candidate: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct YenOutcome {
    pub found: usize,
    /// True when every loopless sequence has been emitted.
    pub exhausted: bool,
}

/// Yen's k-shortest loopless paths. `emit` receives sequences in
/// nondecreasing cost order; `stop` is consulted before every spur search
/// and before every emission, and ends the enumeration when it returns true.
pub fn yen_ksp<G, H, E, S>(g: &G, src: usize, dst: usize, h: H, mut emit: E, mut stop: S) -> YenOutcome
where
    G: SearchGraph + ?Sized,
    H: Fn(usize) -> f64,
    E: FnMut(&CellSequence),
    S: FnMut(&YenProgress) -> bool,
{
    let started = Instant::now();
    let progress = |found: usize, b: &BTreeSet<(OrderedFloat<f64>, usize, Vec<usize>)>| YenProgress {
        found,
        elapsed: started.elapsed(),
        best_candidate: b.first().map(|c| c.0 .0),
    };
    let mut candidates: BTreeSet<(OrderedFloat<f64>, usize, Vec<usize>)> = BTreeSet::new();
    if stop(&progress(0, &candidates)) {
        return YenOutcome { found: 0, exhausted: false };
    }
    let Some(first) = astar(g, src, dst, &h) else {
        return YenOutcome { found: 0, exhausted: true };
    };
    emit(&first);
    let mut accepted: Vec<Vec<usize>> = vec![first.vertices];
    let mut seen: HashSet<Vec<usize>> = accepted.iter().cloned().collect();
    let mut banned_vertices = vec![false; g.vertex_count()];
    let mut banned_edges = HashSet::new();

    loop {
        let last = accepted.last().unwrap().clone();
        for i in 0..last.len().saturating_sub(1) {
            if stop(&progress(accepted.len(), &candidates)) {
                return YenOutcome { found: accepted.len(), exhausted: false };
            }
            let spur = last[i];
            let root = &last[..=i];
            banned_edges.clear();
            for p in &accepted {
                if p.len() > i + 1 && &p[..=i] == root {
                    banned_edges.insert((p[i].min(p[i + 1]), p[i].max(p[i + 1])));
                }
            }
            for &v in &root[..i] {
                banned_vertices[v] = true;
            }
            let mask = Mask {
                vertices: &banned_vertices,
                edges: &banned_edges,
            };
            let spur_path = search(g, spur, dst, &h, Some(&mask));
            for &v in &root[..i] {
                banned_vertices[v] = false;
            }
            if let Some(sp) = spur_path {
                let mut full = root[..i].to_vec();
                full.extend_from_slice(&sp.vertices);
                if seen.insert(full.clone()) {
                    let cost = path_cost(g, &full).expect("spur path is connected");
                    candidates.insert((OrderedFloat(cost), full.len(), full));
                }
            }
        }
        if stop(&progress(accepted.len(), &candidates)) {
            return YenOutcome { found: accepted.len(), exhausted: false };
        }
        let Some((cost, _, vertices)) = candidates.pop_first() else {
            return YenOutcome { found: accepted.len(), exhausted: true };
        };
        let next = CellSequence { vertices, cost: cost.0 };
        emit(&next);
        accepted.push(next.vertices);
    }
}
