//! Binary occupancy grids.
//!
//! Public indices are 1-based `(i1, i2, i3)` with `1 <= ik <= Nk`. Voxel
//! `(i1, i2, i3)` occupies `[(ik - 1) * res, ik * res]` on each axis, with the
//! grid origin at `(0, 0, 0)` meters. Occupancy is bit-packed, x fastest,
//! least significant bit first.

mod city;
mod components;
mod io;

pub use city::{generate_city_world, WorldSpec};
pub use components::{free_components, Components, Connectivity};
pub use io::{load_grid, read_grid, save_grid, write_grid, GRID_FORMAT_VERSION, GRID_MAGIC};

use crate::error::{Error, Result};
use crate::geom::Point3;

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    dims: [usize; 3],
    resolution: f64,
    bits: Vec<u8>,
}

impl OccupancyGrid {
    /// All-free grid.
    pub fn new(dims: [usize; 3], resolution: f64) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions must be positive, got {dims:?}"
            )));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "resolution must be a positive number of meters, got {resolution}"
            )));
        }
        let count = dims[0]
            .checked_mul(dims[1])
            .and_then(|n| n.checked_mul(dims[2]))
            .ok_or_else(|| Error::InvalidArgument(format!("grid {dims:?} is too large")))?;
        Ok(Self {
            dims,
            resolution,
            bits: vec![0; count.div_ceil(8)],
        })
    }

    pub(crate) fn from_raw(dims: [usize; 3], resolution: f64, bits: Vec<u8>) -> Self {
        debug_assert_eq!(bits.len(), (dims[0] * dims[1] * dims[2]).div_ceil(8));
        Self {
            dims,
            resolution,
            bits,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Physical size of the grid in meters.
    pub fn extent(&self) -> Point3 {
        std::array::from_fn(|k| self.dims[k] as f64 * self.resolution)
    }

    pub(crate) fn raw_bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub(crate) fn linear0(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    /// Occupancy at a 0-based index.
    #[inline]
    pub(crate) fn occupied0(&self, x: usize, y: usize, z: usize) -> bool {
        let n = self.linear0(x, y, z);
        self.bits[n >> 3] >> (n & 7) & 1 == 1
    }

    #[inline]
    pub(crate) fn set0(&mut self, x: usize, y: usize, z: usize, occupied: bool) {
        let n = self.linear0(x, y, z);
        if occupied {
            self.bits[n >> 3] |= 1 << (n & 7);
        } else {
            self.bits[n >> 3] &= !(1 << (n & 7));
        }
    }

    fn check_index(&self, idx: [usize; 3]) {
        assert!(
            (0..3).all(|k| idx[k] >= 1 && idx[k] <= self.dims[k]),
            "voxel index {idx:?} outside grid {:?}",
            self.dims
        );
    }

    /// Occupancy of voxel `idx` (1-based). Panics outside the grid.
    pub fn get(&self, idx: [usize; 3]) -> bool {
        self.check_index(idx);
        self.occupied0(idx[0] - 1, idx[1] - 1, idx[2] - 1)
    }

    /// Sets voxel `idx` (1-based). Panics outside the grid.
    pub fn set(&mut self, idx: [usize; 3], occupied: bool) {
        self.check_index(idx);
        self.set0(idx[0] - 1, idx[1] - 1, idx[2] - 1, occupied);
    }

    /// Marks every voxel of the inclusive 1-based box `lo..=hi`.
    pub fn fill_box(&mut self, lo: [usize; 3], hi: [usize; 3], occupied: bool) {
        self.check_index(lo);
        self.check_index(hi);
        for z in lo[2] - 1..hi[2] {
            for y in lo[1] - 1..hi[1] {
                for x in lo[0] - 1..hi[0] {
                    self.set0(x, y, z, occupied);
                }
            }
        }
    }

    pub fn occupied_count(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// 1-based index of the voxel whose closed box contains `p`, preferring
    /// the upper voxel on shared boundaries. `None` outside the grid extent.
    pub fn voxel_at(&self, p: &Point3) -> Option<[usize; 3]> {
        let mut idx = [0; 3];
        for k in 0..3 {
            let t = p[k] / self.resolution;
            if !(t >= 0.0 && t <= self.dims[k] as f64) {
                return None;
            }
            idx[k] = ((t.floor() as usize) + 1).min(self.dims[k]);
        }
        Some(idx)
    }

    /// Copy of the inclusive 1-based box `lo..=hi` as a standalone grid.
    pub fn subgrid(&self, lo: [usize; 3], hi: [usize; 3]) -> OccupancyGrid {
        self.check_index(lo);
        self.check_index(hi);
        let dims = std::array::from_fn(|k| hi[k] + 1 - lo[k]);
        let mut out = OccupancyGrid::new(dims, self.resolution).expect("non-empty box");
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    if self.occupied0(lo[0] - 1 + x, lo[1] - 1 + y, lo[2] - 1 + z) {
                        out.set0(x, y, z, true);
                    }
                }
            }
        }
        out
    }
}

/// Summed-volume table over occupancy for O(1) box counts.
#[derive(Clone, Debug)]
pub struct OccupancyIndex {
    dims: [usize; 3],
    sums: Vec<u32>,
}

impl OccupancyIndex {
    pub fn new(grid: &OccupancyGrid) -> Self {
        let [nx, ny, nz] = grid.dims();
        let (sx, sy) = (nx + 1, ny + 1);
        let mut sums = vec![0u32; sx * sy * (nz + 1)];
        for z in 1..=nz {
            for y in 1..=ny {
                let mut row = 0u32;
                for x in 1..=nx {
                    row += grid.occupied0(x - 1, y - 1, z - 1) as u32;
                    let at = x + sx * (y + sy * z);
                    sums[at] = row + sums[at - sx] + sums[at - sx * sy] - sums[at - sx - sx * sy];
                }
            }
        }
        Self { dims: [nx, ny, nz], sums }
    }

    #[inline]
    fn at(&self, x: usize, y: usize, z: usize) -> i64 {
        let (sx, sy) = (self.dims[0] + 1, self.dims[1] + 1);
        self.sums[x + sx * (y + sy * z)] as i64
    }

    /// Occupied voxels in the inclusive 1-based box `lo..=hi`.
    pub fn count(&self, lo: [usize; 3], hi: [usize; 3]) -> u64 {
        debug_assert!((0..3).all(|k| lo[k] >= 1 && lo[k] <= hi[k] && hi[k] <= self.dims[k]));
        let (x0, y0, z0) = (lo[0] - 1, lo[1] - 1, lo[2] - 1);
        let (x1, y1, z1) = (hi[0], hi[1], hi[2]);
        let s = self.at(x1, y1, z1) - self.at(x0, y1, z1) - self.at(x1, y0, z1) - self.at(x1, y1, z0)
            + self.at(x0, y0, z1)
            + self.at(x0, y1, z0)
            + self.at(x1, y0, z0)
            - self.at(x0, y0, z0);
        s as u64
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }
}

pub(crate) fn box_volume(lo: [usize; 3], hi: [usize; 3]) -> u64 {
    (0..3).map(|k| (hi[k] + 1 - lo[k]) as u64).product()
}
