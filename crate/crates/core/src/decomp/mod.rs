//! Exact decomposition of an occupancy grid into axis-aligned box cells.
//!
//! Every cell produced by [`decompose`] satisfies four properties:
//!
//! * **P1** no two cells overlap;
//! * **P2** all voxels of a cell share one occupancy value;
//! * **P3** each cell is mutually completely visible with at least one
//!   face-adjacent cell of the same type, when such a neighbor exists;
//! * **P4** the voxels across each face of a cell share one occupancy value.
//!
//! Cells grow from a seed voxel towards `+x`, `+y`, `+z` with a doubling step
//! that is halved after the first failure. A face that breaks P4 is repaired
//! by decomposing the slab across that face and shrinking the cell to the
//! first cell found there.

mod checks;
mod io;
mod verify;

pub use checks::{
    check_p1, check_p2, check_p3, check_p4, hull_obstructed, mutually_visible, FaceUniformity,
};
pub use io::{
    load_decomposition, save_decomposition, DecompositionDoc, StoredCell, DECOMPOSITION_FORMAT_VERSION,
};
pub use verify::{hull_meets_box, verify_decomposition, PropertyCheck, VerificationReport};

use serde::{Deserialize, Serialize};

use crate::geom::IBox;
use crate::grid::{OccupancyGrid, OccupancyIndex};

/// Deepest recursion the P4 repair can reach on a 3D grid.
pub const MAX_REPAIR_DEPTH: usize = 2;

/// Inclusive box of voxels, 1-based, `lo <= hi` componentwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl Cell {
    pub fn new(lo: [usize; 3], hi: [usize; 3]) -> Self {
        assert!((0..3).all(|k| lo[k] >= 1 && lo[k] <= hi[k]), "malformed cell {lo:?}..{hi:?}");
        Self { lo, hi }
    }

    pub fn unit(at: [usize; 3]) -> Self {
        Self::new(at, at)
    }

    pub fn volume(&self) -> u64 {
        crate::grid::box_volume(self.lo, self.hi)
    }

    /// Box in voxel-corner coordinates.
    pub fn ibox(&self) -> IBox {
        IBox::from_voxels(self.lo, self.hi)
    }

    pub fn contains(&self, v: [usize; 3]) -> bool {
        (0..3).all(|k| self.lo[k] <= v[k] && v[k] <= self.hi[k])
    }

    pub fn within(&self, dims: [usize; 3]) -> bool {
        (0..3).all(|k| self.lo[k] >= 1 && self.hi[k] <= dims[k])
    }

    /// Lower and upper corner in meters.
    pub fn bounds_m(&self, resolution: f64) -> ([f64; 3], [f64; 3]) {
        (
            std::array::from_fn(|k| (self.lo[k] - 1) as f64 * resolution),
            std::array::from_fn(|k| self.hi[k] as f64 * resolution),
        )
    }

    /// The one-voxel-thick slab across face `face` (ordered `-x, -y, -z, +x,
    /// +y, +z`), or `None` when the face lies on the grid limit.
    pub fn face_slab(&self, face: usize, dims: [usize; 3]) -> Option<Cell> {
        let axis = face % 3;
        let mut lo = self.lo;
        let mut hi = self.hi;
        if face < 3 {
            if self.lo[axis] == 1 {
                return None;
            }
            lo[axis] = self.lo[axis] - 1;
            hi[axis] = lo[axis];
        } else {
            if self.hi[axis] == dims[axis] {
                return None;
            }
            lo[axis] = self.hi[axis] + 1;
            hi[axis] = lo[axis];
        }
        Some(Cell { lo, hi })
    }
}

/// Coverage map: owner of every voxel, stored as `cell index + 1` with 0 for
/// unassigned voxels, x fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coverage {
    dims: [usize; 3],
    owners: Vec<u32>,
}

impl Coverage {
    pub fn new(dims: [usize; 3]) -> Self {
        Self {
            dims,
            owners: vec![0; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    fn linear(&self, v: [usize; 3]) -> usize {
        (v[0] - 1) + self.dims[0] * ((v[1] - 1) + self.dims[1] * (v[2] - 1))
    }

    /// Raw entry at a 1-based voxel: 0 or owning cell index + 1.
    #[inline]
    pub fn raw(&self, v: [usize; 3]) -> u32 {
        self.owners[self.linear(v)]
    }

    /// Owning cell index of voxel `v` (1-based), if assigned.
    pub fn owner(&self, v: [usize; 3]) -> Option<usize> {
        match self.raw(v) {
            0 => None,
            id => Some(id as usize - 1),
        }
    }

    pub fn assign(&mut self, cell: &Cell, index: usize) {
        let id = u32::try_from(index + 1).expect("cell count fits in u32");
        for z in cell.lo[2]..=cell.hi[2] {
            for y in cell.lo[1]..=cell.hi[1] {
                let row = self.linear([cell.lo[0], y, z]);
                self.owners[row..row + (cell.hi[0] + 1 - cell.lo[0])].fill(id);
            }
        }
    }

    pub fn raw_entries(&self) -> &[u32] {
        &self.owners
    }

    pub fn is_complete(&self) -> bool {
        self.owners.iter().all(|&o| o != 0)
    }

    fn voxel_of_linear(&self, n: usize) -> [usize; 3] {
        let x = n % self.dims[0];
        let y = (n / self.dims[0]) % self.dims[1];
        let z = n / (self.dims[0] * self.dims[1]);
        [x + 1, y + 1, z + 1]
    }

    /// Distinct owners of the voxels in `region`, in first-seen order.
    pub(crate) fn owners_in(&self, region: &Cell, out: &mut Vec<usize>) {
        out.clear();
        let mut last = 0u32;
        for z in region.lo[2]..=region.hi[2] {
            for y in region.lo[1]..=region.hi[1] {
                let row = self.linear([region.lo[0], y, z]);
                for &o in &self.owners[row..row + (region.hi[0] + 1 - region.lo[0])] {
                    if o != 0 && o != last {
                        last = o;
                        let idx = o as usize - 1;
                        if !out.contains(&idx) {
                            out.push(idx);
                        }
                    }
                }
            }
        }
    }
}

/// Cells in creation order with their occupancy flags and the coverage map.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub dims: [usize; 3],
    pub resolution: f64,
    pub cells: Vec<Cell>,
    /// `true` for obstacle cells.
    pub occ: Vec<bool>,
    pub coverage: Coverage,
}

impl Decomposition {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn free_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells.len()).filter(|&i| !self.occ[i])
    }

    /// Rebuilds a decomposition from its cells, recomputing coverage.
    pub fn from_cells(dims: [usize; 3], resolution: f64, cells: Vec<Cell>, occ: Vec<bool>) -> Self {
        assert_eq!(cells.len(), occ.len());
        let mut coverage = Coverage::new(dims);
        for (i, c) in cells.iter().enumerate() {
            coverage.assign(c, i);
        }
        Self {
            dims,
            resolution,
            cells,
            occ,
            coverage,
        }
    }
}

struct Builder<'g> {
    grid: &'g OccupancyGrid,
    index: OccupancyIndex,
    coverage: Coverage,
    cells: Vec<Cell>,
    occ: Vec<bool>,
    depth: usize,
    scratch: Vec<usize>,
}

impl<'g> Builder<'g> {
    fn new(grid: &'g OccupancyGrid, depth: usize) -> Self {
        assert!(
            depth <= MAX_REPAIR_DEPTH,
            "P4 repair recursion exceeded depth {MAX_REPAIR_DEPTH}"
        );
        Self {
            grid,
            index: OccupancyIndex::new(grid),
            coverage: Coverage::new(grid.dims()),
            cells: Vec::new(),
            occ: Vec::new(),
            depth,
            scratch: Vec::new(),
        }
    }

    fn try_grow(&mut self, current: &Cell, candidate: &Cell, axis: usize, occupied: bool) -> bool {
        let mut added = *candidate;
        added.lo[axis] = current.hi[axis] + 1;
        check_p1(&added, &self.coverage)
            && check_p2(candidate, &self.index)
            && check_p3(
                candidate,
                occupied,
                &self.cells,
                &self.occ,
                &self.coverage,
                &self.index,
                &mut self.scratch,
            )
    }

    fn grow(&mut self, seed: [usize; 3]) -> (Cell, bool) {
        let dims = self.grid.dims();
        let occupied = self.grid.get(seed);
        let mut cell = Cell::unit(seed);
        let mut expand = [true; 3];
        let mut step = [1usize; 3];
        let mut doubling = [true; 3];
        loop {
            for d in 0..3 {
                if cell.hi[d] >= dims[d] {
                    cell.hi[d] = dims[d];
                    expand[d] = false;
                }
                if !expand[d] {
                    continue;
                }
                let s = step[d].min(dims[d] - cell.hi[d]);
                let mut candidate = cell;
                candidate.hi[d] += s;
                if self.try_grow(&cell, &candidate, d, occupied) {
                    cell = candidate;
                    if doubling[d] {
                        step[d] = s * 2;
                    }
                } else {
                    doubling[d] = false;
                    if s == 1 {
                        expand[d] = false;
                    } else {
                        step[d] = s / 2;
                    }
                }
            }

            let (uniform, _) = check_p4(&cell, &self.index);
            if !uniform {
                self.repair_faces(&mut cell, &mut expand);
            }
            if expand == [false; 3] {
                return (cell, occupied);
            }
        }
    }

    /// Shrinks `cell` until every face borders voxels of a single occupancy.
    fn repair_faces(&mut self, cell: &mut Cell, expand: &mut [bool; 3]) {
        let dims = self.grid.dims();
        for face in 0..6 {
            let (_, u) = check_p4(cell, &self.index);
            if u.0[face] {
                continue;
            }
            let slab = cell
                .face_slab(face, dims)
                .expect("faces on the grid limit are uniform");
            let region = self.grid.subgrid(slab.lo, slab.hi);
            let first = run(&region, 1, self.depth + 1).cells[0];
            let normal = face % 3;
            for a in (0..3).filter(|&a| a != normal) {
                let hi = slab.lo[a] + first.hi[a] - 1;
                if hi != slab.hi[a] {
                    cell.hi[a] = hi;
                    expand[a] = false;
                }
            }
        }
    }

    fn commit(&mut self, cell: Cell, occupied: bool) {
        self.coverage.assign(&cell, self.cells.len());
        self.cells.push(cell);
        self.occ.push(occupied);
    }
}

fn run(grid: &OccupancyGrid, max_cells: usize, depth: usize) -> Decomposition {
    let dims = grid.dims();
    let total = grid.voxel_count();
    let mut b = Builder::new(grid, depth);
    let mut cursor = 0usize;
    let mut next = Some([1, 1, 1]);
    loop {
        let seed = match next.filter(|&v| b.coverage.raw(v) == 0) {
            Some(v) => v,
            None => {
                while cursor < total && b.coverage.owners[cursor] != 0 {
                    cursor += 1;
                }
                if cursor == total {
                    break;
                }
                b.coverage.voxel_of_linear(cursor)
            }
        };
        let (cell, occupied) = b.grow(seed);
        b.commit(cell, occupied);
        if b.cells.len() >= max_cells {
            break;
        }
        next = (0..6)
            .filter_map(|face| cell.face_slab(face, dims))
            .map(|slab| slab.lo)
            .find(|&v| b.coverage.raw(v) == 0);
    }
    Decomposition {
        dims,
        resolution: grid.resolution(),
        cells: b.cells,
        occ: b.occ,
        coverage: b.coverage,
    }
}

/// Full decomposition of `grid`.
pub fn decompose(grid: &OccupancyGrid) -> Decomposition {
    run(grid, usize::MAX, 0)
}

/// Decomposition that stops after `max_cells` cells have been committed.
pub fn decompose_capped(grid: &OccupancyGrid, max_cells: usize) -> Decomposition {
    assert!(max_cells >= 1, "cell cap must be positive");
    run(grid, max_cells, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_voxel() {
        let g = OccupancyGrid::new([1, 1, 1], 1.0).unwrap();
        let d = decompose(&g);
        assert_eq!(d.cells, vec![Cell::unit([1, 1, 1])]);
        assert_eq!(d.occ, vec![false]);
    }

    #[test]
    fn open_cube_is_one_cell() {
        let g = OccupancyGrid::new([8, 8, 8], 1.0).unwrap();
        let d = decompose(&g);
        assert_eq!(d.cells, vec![Cell::new([1, 1, 1], [8, 8, 8])]);
    }

    #[test]
    fn blocked_middle_gives_three_unit_cells() {
        let mut g = OccupancyGrid::new([3, 1, 1], 1.0).unwrap();
        g.set([2, 1, 1], true);
        let d = decompose(&g);
        assert_eq!(
            d.cells,
            vec![Cell::unit([1, 1, 1]), Cell::unit([2, 1, 1]), Cell::unit([3, 1, 1])]
        );
        assert_eq!(d.occ, vec![false, true, false]);
        assert!(d.coverage.is_complete());
    }

    #[test]
    fn capped_run_stops_early() {
        let mut g = OccupancyGrid::new([4, 4, 1], 1.0).unwrap();
        g.set([2, 2, 1], true);
        let d = decompose_capped(&g, 1);
        assert_eq!(d.cells.len(), 1);
        assert_eq!(d.cells[0].lo, [1, 1, 1]);
    }

    #[test]
    fn face_slabs_respect_grid_limits() {
        let c = Cell::new([1, 2, 3], [2, 3, 4]);
        let dims = [2, 5, 5];
        assert_eq!(c.face_slab(0, dims), None);
        assert_eq!(c.face_slab(3, dims), None);
        assert_eq!(c.face_slab(1, dims), Some(Cell::new([1, 1, 3], [2, 1, 4])));
        assert_eq!(c.face_slab(5, dims), Some(Cell::new([1, 2, 5], [2, 3, 5])));
    }
}
