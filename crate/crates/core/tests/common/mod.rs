//! Independent reference implementations used as test oracles. None of them
//! call into the code under test beyond plain data accessors.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use cellplan::decomp::{Cell, Decomposition};
use cellplan::geom::Point3;
use cellplan::grid::OccupancyGrid;
use rand::Rng;

pub fn dist(a: &Point3, b: &Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn polyline_len(p: &[Point3]) -> f64 {
    p.windows(2).map(|w| dist(&w[0], &w[1])).sum()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

/// Random grid with independent voxel occupancy.
pub fn noise_grid(rng: &mut impl Rng, dims: [usize; 3], density: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(dims, 1.0).unwrap();
    for z in 1..=dims[2] {
        for y in 1..=dims[1] {
            for x in 1..=dims[0] {
                if rng.gen_bool(density) {
                    g.set([x, y, z], true);
                }
            }
        }
    }
    g
}

/// Random grid made of a few random obstacle boxes.
pub fn box_grid(rng: &mut impl Rng, dims: [usize; 3], boxes: usize, res: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(dims, res).unwrap();
    for _ in 0..boxes {
        let lo: [usize; 3] = std::array::from_fn(|k| rng.gen_range(1..=dims[k]));
        let hi: [usize; 3] = std::array::from_fn(|k| rng.gen_range(lo[k]..=dims[k].min(lo[k] + dims[k] / 2)));
        g.fill_box(lo, hi, true);
    }
    g
}

/// 6-connected free-voxel components by breadth-first flood fill.
pub fn flood_components(g: &OccupancyGrid) -> usize {
    let [nx, ny, nz] = g.dims();
    let mut seen = vec![false; nx * ny * nz];
    let idx = |x: usize, y: usize, z: usize| (x - 1) + nx * ((y - 1) + ny * (z - 1));
    let mut count = 0;
    for z in 1..=nz {
        for y in 1..=ny {
            for x in 1..=nx {
                if g.get([x, y, z]) || seen[idx(x, y, z)] {
                    continue;
                }
                count += 1;
                seen[idx(x, y, z)] = true;
                let mut q = VecDeque::from([[x, y, z]]);
                while let Some(v) = q.pop_front() {
                    for k in 0..3 {
                        for up in [false, true] {
                            let mut n = v;
                            if up {
                                if n[k] == [nx, ny, nz][k] {
                                    continue;
                                }
                                n[k] += 1;
                            } else {
                                if n[k] == 1 {
                                    continue;
                                }
                                n[k] -= 1;
                            }
                            if !g.get(n) && !seen[idx(n[0], n[1], n[2])] {
                                seen[idx(n[0], n[1], n[2])] = true;
                                q.push_back(n);
                            }
                        }
                    }
                }
            }
        }
    }
    count
}

/// Whether the convex hull of cells `a` and `b` meets the open interior of
/// voxel `v`. The hull is the union of `t*A + (1-t)*B`; the set of feasible
/// `t` is relatively open in [0, 1], so it is nonempty iff it holds 0, 1 or
/// the midpoint between two consecutive breakpoints.
pub fn hull_meets_voxel(a: &Cell, b: &Cell, v: [usize; 3]) -> bool {
    // Corner coordinates: a cell spans [lo - 1, hi].
    let alo: [f64; 3] = std::array::from_fn(|k| a.lo[k] as f64 - 1.0);
    let ahi: [f64; 3] = std::array::from_fn(|k| a.hi[k] as f64);
    let blo: [f64; 3] = std::array::from_fn(|k| b.lo[k] as f64 - 1.0);
    let bhi: [f64; 3] = std::array::from_fn(|k| b.hi[k] as f64);
    let vlo: [f64; 3] = std::array::from_fn(|k| v[k] as f64 - 1.0);
    let vhi: [f64; 3] = std::array::from_fn(|k| v[k] as f64);
    let ok = |t: f64| {
        (0..3).all(|k| {
            let lo = t * alo[k] + (1.0 - t) * blo[k];
            let hi = t * ahi[k] + (1.0 - t) * bhi[k];
            lo < vhi[k] && hi > vlo[k]
        })
    };
    let mut ts = vec![0.0, 1.0];
    for k in 0..3 {
        for (x0, x1, target) in [(blo[k], alo[k], vhi[k]), (bhi[k], ahi[k], vlo[k])] {
            let slope = x1 - x0;
            if slope != 0.0 {
                let t = (target - x0) / slope;
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    if ok(0.0) || ok(1.0) {
        return true;
    }
    ts.windows(2).any(|w| w[1] > w[0] && ok(0.5 * (w[0] + w[1])))
}

/// Graph edges by exhaustive all-pairs search: free cells owning 6-adjacent
/// voxels whose hull meets no occupied voxel. Returned as sorted cell pairs.
pub fn brute_force_edges(g: &OccupancyGrid, d: &Decomposition) -> BTreeSet<(usize, usize)> {
    let dims = g.dims();
    let owner = |v: [usize; 3]| d.coverage.owner(v).unwrap();
    let mut touching = BTreeSet::new();
    for z in 1..=dims[2] {
        for y in 1..=dims[1] {
            for x in 1..=dims[0] {
                let a = owner([x, y, z]);
                for k in 0..3 {
                    let mut n = [x, y, z];
                    n[k] += 1;
                    if n[k] > dims[k] {
                        continue;
                    }
                    let b = owner(n);
                    if a != b && !d.occ[a] && !d.occ[b] {
                        touching.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
    }
    let mut occupied = Vec::new();
    for z in 1..=dims[2] {
        for y in 1..=dims[1] {
            for x in 1..=dims[0] {
                if g.get([x, y, z]) {
                    occupied.push([x, y, z]);
                }
            }
        }
    }
    touching
        .into_iter()
        .filter(|&(i, j)| {
            let (a, b) = (&d.cells[i], &d.cells[j]);
            occupied.iter().all(|&v| {
                let inside = (0..3).all(|k| v[k] >= a.lo[k].min(b.lo[k]) && v[k] <= a.hi[k].max(b.hi[k]));
                !inside || !hull_meets_voxel(a, b, v)
            })
        })
        .collect()
}

/// Quadratic-time Dijkstra over an adjacency list.
pub fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize, dst: usize) -> Option<f64> {
    let n = adj.len();
    let mut d = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    d[src] = 0.0;
    loop {
        let u = (0..n).filter(|&i| !done[i] && d[i].is_finite()).min_by(|&a, &b| d[a].total_cmp(&d[b]))?;
        if u == dst {
            return Some(d[u]);
        }
        done[u] = true;
        for &(v, w) in &adj[u] {
            if d[u] + w < d[v] {
                d[v] = d[u] + w;
            }
        }
    }
}

/// Every simple `src`-`dst` path with its cost, by depth-first search.
/// Gives up (returns `None`) beyond `cap` paths.
pub fn simple_paths(adj: &[Vec<(usize, f64)>], src: usize, dst: usize, cap: usize) -> Option<Vec<(Vec<usize>, f64)>> {
    fn go(
        adj: &[Vec<(usize, f64)>],
        u: usize,
        dst: usize,
        cost: f64,
        stack: &mut Vec<usize>,
        on: &mut [bool],
        out: &mut Vec<(Vec<usize>, f64)>,
        cap: usize,
    ) -> bool {
        if u == dst {
            out.push((stack.clone(), cost));
            return out.len() <= cap;
        }
        for &(v, w) in &adj[u] {
            if !on[v] {
                on[v] = true;
                stack.push(v);
                let keep = go(adj, v, dst, cost + w, stack, on, out, cap);
                stack.pop();
                on[v] = false;
                if !keep {
                    return false;
                }
            }
        }
        true
    }
    let mut on = vec![false; adj.len()];
    on[src] = true;
    let mut out = Vec::new();
    go(adj, src, dst, 0.0, &mut vec![src], &mut on, &mut out, cap).then_some(out)
}

/// Random connected-ish weighted graph as an adjacency list.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> (Vec<Vec<(usize, f64)>>, Vec<(usize, usize, f64)>) {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push((a, b, rng.gen_range(1..=20) as f64 * 0.5));
            }
        }
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b, w) in &edges {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    (adj, edges)
}

/// Points of the `h`-spaced lattice inside the box, both faces included.
fn lattice(b: &(Point3, Point3), h: f64) -> Vec<Point3> {
    let axis = |k: usize| {
        let mut v = Vec::new();
        let mut x = b.0[k];
        while x < b.1[k] - 1e-12 {
            v.push(x);
            x += h;
        }
        v.push(b.1[k]);
        v
    };
    let (xs, ys, zs) = (axis(0), axis(1), axis(2));
    let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &z in &zs {
        for &y in &ys {
            for &x in &xs {
                out.push([x, y, z]);
            }
        }
    }
    out
}

/// Shortest polyline `w_in -> p_1 -> ... -> p_n -> w_t` with each `p_i`
/// restricted to the `h`-lattice of box `i`, by dynamic programming.
pub fn lattice_dp(w_in: Point3, boxes: &[(Point3, Point3)], w_t: Point3, h: f64) -> f64 {
    let mut prev: Vec<(Point3, f64)> = vec![(w_in, 0.0)];
    for b in boxes {
        let pts = lattice(b, h);
        let next: Vec<(Point3, f64)> = pts
            .iter()
            .map(|p| {
                let best = prev.iter().map(|(q, c)| c + dist(p, q)).fold(f64::INFINITY, f64::min);
                (*p, best)
            })
            .collect();
        prev = next;
    }
    prev.iter().map(|(q, c)| c + dist(q, &w_t)).fold(f64::INFINITY, f64::min)
}

/// Bounds on the minimal summed segment length of `w_in -> p_1 -> ... ->
/// p_n -> w_t` over `p_i` in box `i`, by the central-cut ellipsoid method
/// with subgradient cuts. Returns `(upper, lower)` where `upper` is attained
/// by a feasible point and `lower` is certified by the ellipsoid bound.
pub fn ellipsoid_min(w_in: Point3, boxes: &[(Point3, Point3)], w_t: Point3, rel_tol: f64) -> (f64, f64) {
    let nb = boxes.len();
    if nb == 0 {
        let v = dist(&w_in, &w_t);
        return (v, v);
    }
    ellipsoid_general(boxes, &|x: &[f64], g: &mut [f64]| {
        let pt = |i: usize| -> Point3 {
            if i == 0 {
                w_in
            } else if i == nb + 1 {
                w_t
            } else {
                [x[3 * (i - 1)], x[3 * (i - 1) + 1], x[3 * (i - 1) + 2]]
            }
        };
        let mut f = 0.0;
        g.iter_mut().for_each(|v| *v = 0.0);
        for i in 1..=nb + 1 {
            let (a, b) = (pt(i - 1), pt(i));
            let l = dist(&a, &b);
            f += l;
            if l > 0.0 {
                for k in 0..3 {
                    let u = (b[k] - a[k]) / l;
                    if i - 1 >= 1 {
                        g[3 * (i - 2) + k] -= u;
                    }
                    if i <= nb {
                        g[3 * (i - 1) + k] += u;
                    }
                }
            }
        }
        f
    }, rel_tol)
}

/// Sum of `|p_a - p_b|` over `edges`, minimized over one point per box.
pub fn ellipsoid_edges(boxes: &[(Point3, Point3)], edges: &[(usize, usize)], rel_tol: f64) -> (f64, f64) {
    ellipsoid_general(boxes, &|x: &[f64], g: &mut [f64]| {
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut f = 0.0;
        for &(a, b) in edges {
            let d: [f64; 3] = std::array::from_fn(|k| x[3 * b + k] - x[3 * a + k]);
            let l = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            f += l;
            if l > 0.0 {
                for k in 0..3 {
                    g[3 * b + k] += d[k] / l;
                    g[3 * a + k] -= d[k] / l;
                }
            }
        }
        f
    }, rel_tol)
}

fn ellipsoid_general(
    boxes: &[(Point3, Point3)],
    f: &dyn Fn(&[f64], &mut [f64]) -> f64,
    rel_tol: f64,
) -> (f64, f64) {
    let n = 3 * boxes.len();
    let lo: Vec<f64> = boxes.iter().flat_map(|b| b.0).collect();
    let hi: Vec<f64> = boxes.iter().flat_map(|b| b.1).collect();
    let mut c: Vec<f64> = (0..n).map(|i| 0.5 * (lo[i] + hi[i])).collect();
    // Axis-aligned ellipsoid through the corners of the box product.
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let h = 0.5 * (hi[i] - lo[i]);
        p[i * n + i] = (n as f64) * h * h + 1e-18;
    }
    let nf = n as f64;
    let mut g = vec![0.0; n];
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    for _ in 0..200_000 {
        let infeasible = (0..n).find_map(|i| {
            if c[i] < lo[i] {
                Some((i, -1.0))
            } else if c[i] > hi[i] {
                Some((i, 1.0))
            } else {
                None
            }
        });
        let value = match infeasible {
            Some((i, s)) => {
                g.iter_mut().for_each(|v| *v = 0.0);
                g[i] = s;
                None
            }
            None => {
                let v = f(&c, &mut g);
                upper = upper.min(v);
                Some(v)
            }
        };
        let pg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| p[i * n + j] * g[j]).sum()).collect();
        let gpg: f64 = (0..n).map(|i| g[i] * pg[i]).sum();
        if let Some(v) = value {
            // The minimizer stays inside the ellipsoid, so f(c) - sqrt(g'Pg)
            // bounds the optimum from below.
            lower = lower.max(v - gpg.max(0.0).sqrt());
            if gpg <= 0.0 || upper - lower <= rel_tol * upper.abs().max(1e-12) {
                break;
            }
        }
        let s = gpg.sqrt();
        for i in 0..n {
            c[i] -= pg[i] / s / (nf + 1.0);
        }
        let scale = nf * nf / (nf * nf - 1.0);
        let k = 2.0 / (nf + 1.0) / gpg;
        for i in 0..n {
            for j in 0..n {
                p[i * n + j] = scale * (p[i * n + j] - k * pg[i] * pg[j]);
            }
        }
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (p[i * n + j] + p[j * n + i]);
                p[i * n + j] = m;
                p[j * n + i] = m;
            }
        }
    }
    (upper, lower)
}

/// Whether `p` lies strictly inside some occupied voxel.
pub fn point_collides(g: &OccupancyGrid, p: &Point3) -> bool {
    let res = g.resolution();
    let dims = g.dims();
    let mut v = [0usize; 3];
    for k in 0..3 {
        let t = p[k] / res;
        let (a, b) = ((t - 1e-9).floor(), (t + 1e-9).floor());
        if a != b || a < 0.0 || a >= dims[k] as f64 {
            return false;
        }
        v[k] = a as usize + 1;
    }
    g.get(v)
}

/// Dense sampling of segment `a-b` at `step` (in voxels) against the open
/// interiors of occupied voxels.
pub fn segment_collides(g: &OccupancyGrid, a: &Point3, b: &Point3, step: f64) -> bool {
    let len = dist(a, b) / g.resolution();
    let n = (len / step).ceil().max(1.0) as usize;
    (0..=n).any(|i| {
        let t = i as f64 / n as f64;
        let p: Point3 = std::array::from_fn(|k| a[k] + t * (b[k] - a[k]));
        point_collides(g, &p)
    })
}

/// Occupied voxels whose closed boxes, grown by `pad` voxels, contain `p`.
pub fn near_obstacle(g: &OccupancyGrid, p: &Point3, pad: f64) -> bool {
    let dims = g.dims();
    let t: [f64; 3] = std::array::from_fn(|k| p[k] / g.resolution());
    let lo: [usize; 3] = std::array::from_fn(|k| ((t[k] - pad).floor().max(0.0) as usize + 1).min(dims[k]));
    let hi: [usize; 3] = std::array::from_fn(|k| ((t[k] + pad).ceil().max(1.0) as usize).min(dims[k]));
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let v = [x, y, z];
                if g.get(v) && (0..3).all(|k| t[k] >= v[k] as f64 - 1.0 - pad && t[k] <= v[k] as f64 + pad) {
                    return true;
                }
            }
        }
    }
    false
}

/// Sampling decision for a segment that also gives up when the segment
/// grazes within `pad` voxels of an obstacle without entering one.
/// `Some(true)` clear, `Some(false)` blocked, `None` ambiguous.
pub fn sampled_sight(g: &OccupancyGrid, a: &Point3, b: &Point3, step: f64, pad: f64) -> Option<bool> {
    let len = dist(a, b) / g.resolution();
    let n = (len / step).ceil().max(1.0) as usize;
    let mut near = false;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let p: Point3 = std::array::from_fn(|k| a[k] + t * (b[k] - a[k]));
        if point_collides(g, &p) {
            return Some(false);
        }
        near |= near_obstacle(g, &p, pad);
    }
    if near {
        None
    } else {
        Some(true)
    }
}

/// Length of the shortest 26-connected voxel path, vertices at voxel
/// centers except the start and goal voxels, which use the query points.
/// A move is allowed when every voxel in the bounding box of its two
/// voxels is free and the segment does not touch an occupied voxel at a
/// query point.
pub fn grid_astar26(g: &OccupancyGrid, start: Point3, goal: Point3) -> Option<f64> {
    let dims = g.dims();
    let res = g.resolution();
    let [nx, ny, nz] = dims;
    let host = |p: &Point3| -> [usize; 3] { std::array::from_fn(|k| ((p[k] / res).floor() as usize + 1).min(dims[k])) };
    let (sv, gv) = (host(&start), host(&goal));
    if g.get(sv) || g.get(gv) {
        return None;
    }
    if sv == gv {
        return Some(dist(&start, &goal));
    }
    let lin = |v: [usize; 3]| (v[0] - 1) + nx * ((v[1] - 1) + ny * (v[2] - 1));
    let unlin = |i: usize| [i % nx + 1, (i / nx) % ny + 1, i / (nx * ny) + 1];
    let pos = |i: usize| -> Point3 {
        if i == lin(sv) {
            start
        } else if i == lin(gv) {
            goal
        } else {
            let v = unlin(i);
            std::array::from_fn(|k| (v[k] as f64 - 0.5) * res)
        }
    };
    let touches_free = |p: &Point3| !near_obstacle(g, p, 1e-9);
    let total = nx * ny * nz;
    let mut d = vec![f64::INFINITY; total];
    let mut heap = std::collections::BinaryHeap::new();
    let s = lin(sv);
    d[s] = 0.0;
    heap.push(std::cmp::Reverse((ordered(0.0), s)));
    while let Some(std::cmp::Reverse((du, u))) = heap.pop() {
        let du = du.0;
        if du > d[u] {
            continue;
        }
        if u == lin(gv) {
            return Some(du);
        }
        let v = unlin(u);
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if (dx, dy, dz) == (0, 0, 0) {
                        continue;
                    }
                    let n = [v[0] as i64 + dx, v[1] as i64 + dy, v[2] as i64 + dz];
                    if (0..3).any(|k| n[k] < 1 || n[k] > dims[k] as i64) {
                        continue;
                    }
                    let n: [usize; 3] = std::array::from_fn(|k| n[k] as usize);
                    let mut clear = true;
                    for z in v[2].min(n[2])..=v[2].max(n[2]) {
                        for y in v[1].min(n[1])..=v[1].max(n[1]) {
                            for x in v[0].min(n[0])..=v[0].max(n[0]) {
                                clear &= !g.get([x, y, z]);
                            }
                        }
                    }
                    let ni = lin(n);
                    for end in [u, ni] {
                        if end == s || end == lin(gv) {
                            clear &= touches_free(&pos(end));
                        }
                    }
                    if !clear {
                        continue;
                    }
                    let nd = du + dist(&pos(u), &pos(ni));
                    if nd < d[ni] {
                        d[ni] = nd;
                        heap.push(std::cmp::Reverse((ordered(nd), ni)));
                    }
                }
            }
        }
    }
    None
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct Ordered(pub f64);
impl Eq for Ordered {}
impl Ord for Ordered {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}
fn ordered(x: f64) -> Ordered {
    Ordered(x)
}
