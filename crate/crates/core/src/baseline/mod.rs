//! Basic Theta* on the raw occupancy grid.
//!
//! Vertices are voxel centers, except that the start and goal voxels are
//! represented by the query points themselves. Line of sight is
//! conservative: a segment is blocked as soon as it touches the closed box
//! of an occupied voxel, so grazing a face, edge or corner shared with an
//! obstacle counts as a collision.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{distance, Point3};
use crate::grid::OccupancyGrid;

const SNAP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub points: Vec<Point3>,
    pub length: f64,
    /// Vertices expanded by the search.
    pub expansions: usize,
}

/// 1-based voxel index range whose closed boxes contain coordinate `t`
/// (in voxel units) on an axis of `n` voxels.
fn touching(t: f64, n: usize) -> (usize, usize) {
    let r = t.round();
    if (t - r).abs() <= SNAP {
        let m = r as i64;
        (m.max(1) as usize, (m + 1).min(n as i64) as usize)
    } else {
        let i = t.floor() as usize + 1;
        (i, i)
    }
}

fn point_clear(grid: &OccupancyGrid, p: [f64; 3]) -> bool {
    let dims = grid.dims();
    let r: [(usize, usize); 3] = std::array::from_fn(|k| touching(p[k], dims[k]));
    for z in r[2].0..=r[2].1 {
        for y in r[1].0..=r[1].1 {
            for x in r[0].0..=r[0].1 {
                if grid.occupied0(x - 1, y - 1, z - 1) {
                    return false;
                }
            }
        }
    }
    true
}

/// True when the segment `a`-`b` touches no occupied voxel. Segments leaving
/// the grid extent are blocked.
pub fn line_of_sight(grid: &OccupancyGrid, a: &Point3, b: &Point3) -> bool {
    let dims = grid.dims();
    let res = grid.resolution();
    let pa: [f64; 3] = std::array::from_fn(|k| a[k] / res);
    let pb: [f64; 3] = std::array::from_fn(|k| b[k] / res);
    for k in 0..3 {
        for v in [pa[k], pb[k]] {
            if !(v >= -SNAP && v <= dims[k] as f64 + SNAP) {
                return false;
            }
        }
    }
    let at = |t: f64| -> [f64; 3] {
        std::array::from_fn(|k| (pa[k] + t * (pb[k] - pa[k])).clamp(0.0, dims[k] as f64))
    };
    let mut ts = vec![0.0, 1.0];
    for k in 0..3 {
        let (lo, hi) = (pa[k].min(pb[k]), pa[k].max(pb[k]));
        let d = pb[k] - pa[k];
        if hi - lo <= SNAP {
            continue;
        }
        let mut m = (lo + SNAP).floor() + 1.0;
        while m < hi - SNAP {
            ts.push((m - pa[k]) / d);
            m += 1.0;
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    for (i, &t) in ts.iter().enumerate() {
        if !point_clear(grid, at(t)) {
            return false;
        }
        if let Some(&next) = ts.get(i + 1) {
            if !point_clear(grid, at(0.5 * (t + next))) {
                return false;
            }
        }
    }
    true
}

/// Free voxel (1-based) whose closed box holds `p`, lowest index first.
fn host_voxel(grid: &OccupancyGrid, p: &Point3, what: &str) -> Result<[usize; 3]> {
    let dims = grid.dims();
    let res = grid.resolution();
    let mut r = [(0, 0); 3];
    for k in 0..3 {
        let t = p[k] / res;
        if !(t >= 0.0 && t <= dims[k] as f64) {
            return Err(Error::Query(format!("{what} {p:?} lies outside the grid")));
        }
        r[k] = touching(t, dims[k]);
    }
    for z in r[2].0..=r[2].1 {
        for y in r[1].0..=r[1].1 {
            for x in r[0].0..=r[0].1 {
                if !grid.get([x, y, z]) {
                    return Ok([x, y, z]);
                }
            }
        }
    }
    Err(Error::Query(format!("{what} {p:?} lies inside an obstacle")))
}

/// Any-angle path from `start` to `goal`, `Ok(None)` if none exists.
pub fn theta_star(grid: &OccupancyGrid, start: Point3, goal: Point3) -> Result<Option<GridPath>> {
    let sv = host_voxel(grid, &start, "start")?;
    let gv = host_voxel(grid, &goal, "goal")?;
    if sv == gv {
        return Ok(Some(GridPath {
            length: distance(&start, &goal),
            points: vec![start, goal],
            expansions: 0,
        }));
    }
    let [nx, ny, nz] = grid.dims();
    let res = grid.resolution();
    let lin = |v: [usize; 3]| (v[0] - 1) + nx * ((v[1] - 1) + ny * (v[2] - 1));
    let (s, t) = (lin(sv), lin(gv));
    let pos = |n: usize| -> Point3 {
        if n == s {
            start
        } else if n == t {
            goal
        } else {
            let x = n % nx;
            let y = (n / nx) % ny;
            let z = n / (nx * ny);
            [(x as f64 + 0.5) * res, (y as f64 + 0.5) * res, (z as f64 + 0.5) * res]
        }
    };

    let total = nx * ny * nz;
    let mut g = vec![f64::INFINITY; total];
    let mut parent = vec![u32::MAX; total];
    let mut closed = vec![false; total];
    let mut heap = BinaryHeap::new();
    g[s] = 0.0;
    parent[s] = s as u32;
    heap.push(Reverse((OrderedFloat(distance(&start, &goal)), Reverse(OrderedFloat(0.0)), s)));
    let mut expansions = 0usize;

    while let Some(Reverse((_, Reverse(OrderedFloat(gs)), u))) = heap.pop() {
        if closed[u] || gs > g[u] {
            continue;
        }
        if u == t {
            let mut points = vec![goal];
            let mut n = t;
            while n != s {
                n = parent[n] as usize;
                points.push(pos(n));
            }
            points.reverse();
            let length = points.windows(2).map(|w| distance(&w[0], &w[1])).sum();
            return Ok(Some(GridPath {
                points,
                length,
                expansions,
            }));
        }
        closed[u] = true;
        expansions += 1;
        let (x, y, z) = (u % nx, (u / nx) % ny, u / (nx * ny));
        let pu = pos(u);
        let p = parent[u] as usize;
        let pp = pos(p);
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let (xx, yy, zz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                    if xx < 0 || yy < 0 || zz < 0 || xx >= nx as i64 || yy >= ny as i64 || zz >= nz as i64 {
                        continue;
                    }
                    let (xx, yy, zz) = (xx as usize, yy as usize, zz as usize);
                    let n = xx + nx * (yy + ny * zz);
                    if closed[n] || grid.occupied0(xx, yy, zz) {
                        continue;
                    }
                    let pn = pos(n);
                    let (cand, via) = if p != u && line_of_sight(grid, &pp, &pn) {
                        (g[p] + distance(&pp, &pn), p)
                    } else if line_of_sight(grid, &pu, &pn) {
                        (gs + distance(&pu, &pn), u)
                    } else {
                        continue;
                    };
                    if cand < g[n] {
                        g[n] = cand;
                        parent[n] = via as u32;
                        heap.push(Reverse((
                            OrderedFloat(cand + distance(&pn, &goal)),
                            Reverse(OrderedFloat(cand)),
                            n,
                        )));
                    }
                }
            }
        }
    }
    Ok(None)
}
