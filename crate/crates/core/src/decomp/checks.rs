use super::{Cell, Coverage};
use crate::geom::BoxHull;
use crate::grid::{box_volume, OccupancyIndex};

/// Uniformity of the voxels across each face, ordered `-x, -y, -z, +x, +y, +z`.
/// Faces on the grid limit count as uniform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceUniformity(pub [bool; 6]);

impl FaceUniformity {
    pub fn all(&self) -> bool {
        self.0.iter().all(|&u| u)
    }
}

/// P1: no voxel of `cell` is owned by a committed cell.
pub fn check_p1(cell: &Cell, coverage: &Coverage) -> bool {
    for z in cell.lo[2]..=cell.hi[2] {
        for y in cell.lo[1]..=cell.hi[1] {
            for x in cell.lo[0]..=cell.hi[0] {
                if coverage.raw([x, y, z]) != 0 {
                    return false;
                }
            }
        }
    }
    true
}

/// P2: the occupied-voxel count inside `cell` is zero or its full volume.
pub fn check_p2(cell: &Cell, index: &OccupancyIndex) -> bool {
    let occupied = index.count(cell.lo, cell.hi);
    occupied == 0 || occupied == cell.volume()
}

/// P4 via per-face occupied counts.
pub fn check_p4(cell: &Cell, index: &OccupancyIndex) -> (bool, FaceUniformity) {
    let dims = index.dims();
    let mut u = [true; 6];
    for (face, flag) in u.iter_mut().enumerate() {
        if let Some(slab) = cell.face_slab(face, dims) {
            let occupied = index.count(slab.lo, slab.hi);
            *flag = occupied == 0 || occupied == slab.volume();
        }
    }
    (u.iter().all(|&f| f), FaceUniformity(u))
}

/// Whether any voxel of opposite occupancy to `occupied` inside `region`
/// meets the interior of `hull`.
///
/// Regions holding no such voxel, or missing the hull, are discarded; the
/// rest are bisected along their longest axis down to single voxels.
pub fn hull_obstructed(hull: &BoxHull, region: &Cell, occupied: bool, index: &OccupancyIndex) -> bool {
    let opposite = |c: &Cell| {
        let n = index.count(c.lo, c.hi);
        if occupied {
            box_volume(c.lo, c.hi) - n
        } else {
            n
        }
    };
    let mut stack = vec![*region];
    while let Some(r) = stack.pop() {
        if opposite(&r) == 0 || !hull.overlaps(&r.ibox()) {
            continue;
        }
        let axis = (0..3)
            .max_by_key(|&k| (r.hi[k] - r.lo[k], std::cmp::Reverse(k)))
            .unwrap();
        if r.lo[axis] == r.hi[axis] {
            return true;
        }
        let mid = (r.lo[axis] + r.hi[axis]) / 2;
        let mut left = r;
        let mut right = r;
        left.hi[axis] = mid;
        right.lo[axis] = mid + 1;
        stack.push(right);
        stack.push(left);
    }
    false
}

/// True when the convex hull of `a` and `b` holds no voxel of the opposite
/// occupancy.
pub fn mutually_visible(a: &Cell, b: &Cell, occupied: bool, index: &OccupancyIndex) -> bool {
    let hull = BoxHull::new(&a.ibox(), &b.ibox());
    let region = Cell {
        lo: std::array::from_fn(|k| a.lo[k].min(b.lo[k])),
        hi: std::array::from_fn(|k| a.hi[k].max(b.hi[k])),
    };
    !hull_obstructed(&hull, &region, occupied, index)
}

/// P3 for a candidate `cell` of type `occupied` against the committed cells.
///
/// Holds when no committed cell of the same type borders a face of `cell`,
/// or when at least one such neighbor is mutually visible with it.
pub fn check_p3(
    cell: &Cell,
    occupied: bool,
    cells: &[Cell],
    occ: &[bool],
    coverage: &Coverage,
    index: &OccupancyIndex,
    scratch: &mut Vec<usize>,
) -> bool {
    let dims = index.dims();
    let mut neighbors: Vec<usize> = Vec::new();
    for face in 0..6 {
        if let Some(slab) = cell.face_slab(face, dims) {
            coverage.owners_in(&slab, scratch);
            for &n in scratch.iter() {
                if occ[n] == occupied && !neighbors.contains(&n) {
                    neighbors.push(n);
                }
            }
        }
    }
    neighbors.is_empty()
        || neighbors
            .iter()
            .any(|&n| mutually_visible(cell, &cells[n], occupied, index))
}
