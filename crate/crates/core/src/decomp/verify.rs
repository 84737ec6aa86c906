//! Post-hoc checker for decompositions.
//!
//! Shares no code with the incremental checks used while decomposing: overlap
//! is tested pairwise, uniformity by plain voxel scans, and visibility by an
//! exact interpolation test on the hull of two boxes.

use rayon::prelude::*;
use serde::Serialize;

use super::{Cell, Decomposition};
use crate::geom::IBox;
use crate::grid::{free_components, Connectivity, OccupancyGrid};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyCheck {
    pub passed: bool,
    pub counterexample: Option<String>,
}

impl PropertyCheck {
    fn pass() -> Self {
        Self {
            passed: true,
            counterexample: None,
        }
    }

    fn fail(msg: String) -> Self {
        Self {
            passed: false,
            counterexample: Some(msg),
        }
    }

    fn from_first(found: Option<String>) -> Self {
        found.map_or_else(Self::pass, Self::fail)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub p1: PropertyCheck,
    pub p2: PropertyCheck,
    pub p3: PropertyCheck,
    pub p4: PropertyCheck,
    pub exact_cover: PropertyCheck,
    pub connectivity: PropertyCheck,
    pub free_cell_components: usize,
    pub free_voxel_components: usize,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        [
            &self.p1,
            &self.p2,
            &self.p3,
            &self.p4,
            &self.exact_cover,
            &self.connectivity,
        ]
        .iter()
        .all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<(&'static str, &PropertyCheck)> {
        [
            ("P1", &self.p1),
            ("P2", &self.p2),
            ("P3", &self.p3),
            ("P4", &self.p4),
            ("exact cover", &self.exact_cover),
            ("connectivity", &self.connectivity),
        ]
        .into_iter()
        .filter(|(_, c)| !c.passed)
        .collect()
    }
}

/// Compare `n1/d1 < n2/d2` for positive denominators.
fn frac_lt(a: (i128, i128), b: (i128, i128)) -> bool {
    a.0 * b.1 < b.0 * a.1
}

/// Whether the convex hull of `a` and `b` meets the interior of `v`.
///
/// The hull is the union over `t in [0, 1]` of the boxes `t*a + (1-t)*b`;
/// each axis turns "box meets the open interior of `v`" into two strict
/// linear inequalities in `t`, solved in exact rational arithmetic.
pub fn hull_meets_box(a: &IBox, b: &IBox, v: &IBox) -> bool {
    let mut lower = (0i128, 1i128);
    let mut upper = (1i128, 1i128);
    for k in 0..3 {
        // lo(t) = b.lo + t (a.lo - b.lo) < v.hi   and   hi(t) = b.hi + t (a.hi - b.hi) > v.lo
        let constraints = [
            ((a.lo[k] - b.lo[k]) as i128, (v.hi[k] - b.lo[k]) as i128),
            ((b.hi[k] - a.hi[k]) as i128, (b.hi[k] - v.lo[k]) as i128),
        ];
        for (c, r) in constraints {
            // c * t < r
            if c == 0 {
                if r <= 0 {
                    return false;
                }
            } else if c > 0 {
                let bound = (r, c);
                if frac_lt(bound, upper) {
                    upper = bound;
                }
            } else {
                let bound = (-r, -c);
                if frac_lt(lower, bound) {
                    lower = bound;
                }
            }
        }
    }
    frac_lt(lower, upper)
}

fn overlap(a: &Cell, b: &Cell) -> bool {
    (0..3).all(|k| a.lo[k] <= b.hi[k] && b.lo[k] <= a.hi[k])
}

/// Face contact with positive area.
fn face_adjacent(a: &Cell, b: &Cell) -> bool {
    (0..3).any(|k| {
        let touching = a.hi[k] + 1 == b.lo[k] || b.hi[k] + 1 == a.lo[k];
        touching && (0..3).filter(|&j| j != k).all(|j| a.lo[j] <= b.hi[j] && b.lo[j] <= a.hi[j])
    })
}

fn check_overlap(cells: &[Cell]) -> PropertyCheck {
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by_key(|&i| cells[i].lo[0]);
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if cells[j].lo[0] > cells[i].hi[0] {
                break;
            }
            if overlap(&cells[i], &cells[j]) {
                let (i, j) = (i.min(j), i.max(j));
                return PropertyCheck::fail(format!(
                    "cells {i} {:?} and {j} {:?} overlap",
                    cells[i], cells[j]
                ));
            }
        }
    }
    PropertyCheck::pass()
}

fn check_uniform(grid: &OccupancyGrid, d: &Decomposition) -> PropertyCheck {
    PropertyCheck::from_first(d.cells.par_iter().enumerate().find_map_first(|(n, c)| {
        for z in c.lo[2]..=c.hi[2] {
            for y in c.lo[1]..=c.hi[1] {
                for x in c.lo[0]..=c.hi[0] {
                    if grid.get([x, y, z]) != d.occ[n] {
                        return Some(format!(
                            "cell {n} {c:?} flagged obstacle={} holds voxel {:?} of the other type",
                            d.occ[n],
                            [x, y, z]
                        ));
                    }
                }
            }
        }
        None
    }))
}

fn check_faces(grid: &OccupancyGrid, d: &Decomposition) -> PropertyCheck {
    let dims = grid.dims();
    PropertyCheck::from_first(d.cells.par_iter().enumerate().find_map_first(|(n, c)| {
        for face in 0..6 {
            let axis = face % 3;
            let layer = if face < 3 {
                if c.lo[axis] == 1 {
                    continue;
                }
                c.lo[axis] - 1
            } else {
                if c.hi[axis] == dims[axis] {
                    continue;
                }
                c.hi[axis] + 1
            };
            let mut lo = c.lo;
            let mut hi = c.hi;
            lo[axis] = layer;
            hi[axis] = layer;
            let first = grid.get(lo);
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        if grid.get([x, y, z]) != first {
                            return Some(format!("cell {n} {c:?} has a mixed face {face}"));
                        }
                    }
                }
            }
        }
        None
    }))
}

fn check_cover(grid: &OccupancyGrid, d: &Decomposition) -> PropertyCheck {
    let dims = grid.dims();
    if d.dims != dims {
        return PropertyCheck::fail(format!("decomposition dims {:?} vs grid {dims:?}", d.dims));
    }
    if let Some((n, c)) = d.cells.iter().enumerate().find(|(_, c)| !c.within(dims)) {
        return PropertyCheck::fail(format!("cell {n} {c:?} leaves the grid"));
    }
    let total: u64 = d.cells.iter().map(Cell::volume).sum();
    if total != grid.voxel_count() as u64 {
        return PropertyCheck::fail(format!(
            "cell volumes sum to {total}, grid has {} voxels",
            grid.voxel_count()
        ));
    }
    if d.coverage.dims() != dims {
        return PropertyCheck::fail("coverage map has the wrong shape".into());
    }
    for (n, c) in d.cells.iter().enumerate() {
        for z in c.lo[2]..=c.hi[2] {
            for y in c.lo[1]..=c.hi[1] {
                for x in c.lo[0]..=c.hi[0] {
                    if d.coverage.owner([x, y, z]) != Some(n) {
                        return PropertyCheck::fail(format!(
                            "coverage at {:?} does not name cell {n}",
                            [x, y, z]
                        ));
                    }
                }
            }
        }
    }
    PropertyCheck::pass()
}

/// Pairs of face-adjacent same-type cells, each with its visibility verdict.
fn visibility_pairs(d: &Decomposition) -> Vec<(usize, usize, bool)> {
    let boxes: Vec<IBox> = d.cells.iter().map(Cell::ibox).collect();
    (0..d.cells.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let boxes = &boxes;
            ((i + 1)..d.cells.len())
                .filter(move |&j| d.occ[i] == d.occ[j] && face_adjacent(&d.cells[i], &d.cells[j]))
                .map(move |j| {
                    let bounds = boxes[i].union_bounds(&boxes[j]);
                    let blocked = (0..d.cells.len()).any(|o| {
                        d.occ[o] != d.occ[i]
                            && bounds.interiors_overlap(&boxes[o])
                            && hull_meets_box(&boxes[i], &boxes[j], &boxes[o])
                    });
                    (i, j, !blocked)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn verify_decomposition(grid: &OccupancyGrid, d: &Decomposition) -> VerificationReport {
    let exact_cover = check_cover(grid, d);
    let p1 = check_overlap(&d.cells);
    let p2 = check_uniform(grid, d);
    let p4 = check_faces(grid, d);

    let pairs = visibility_pairs(d);
    let n = d.cells.len();
    let mut has_neighbor = vec![false; n];
    let mut has_visible = vec![false; n];
    let mut parent: Vec<usize> = (0..n).collect();
    for &(i, j, visible) in &pairs {
        has_neighbor[i] = true;
        has_neighbor[j] = true;
        if visible {
            has_visible[i] = true;
            has_visible[j] = true;
            if !d.occ[i] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let p3 = PropertyCheck::from_first(
        (0..n)
            .find(|&i| has_neighbor[i] && !has_visible[i])
            .map(|i| format!("cell {i} {:?} sees none of its same-type neighbors", d.cells[i])),
    );

    let free_cell_components = (0..n)
        .filter(|&i| !d.occ[i] && find(&mut parent, i) == i)
        .count();
    let free_voxel_components = free_components(grid, Connectivity::Six).count;
    let connectivity = if free_cell_components == free_voxel_components {
        PropertyCheck::pass()
    } else {
        PropertyCheck::fail(format!(
            "{free_cell_components} free-cell components vs {free_voxel_components} free-voxel components"
        ))
    };

    VerificationReport {
        p1,
        p2,
        p3,
        p4,
        exact_cover,
        connectivity,
        free_cell_components,
        free_voxel_components,
    }
}
