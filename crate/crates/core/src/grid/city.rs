use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::OccupancyGrid;
use crate::error::{Error, Result};

/// Parameters of a random city-like world of `side x side x height` voxels
/// with 1 m voxels.
///
/// The XY floorplan is tiled into `(side / block)^2` squares, each holding a
/// single building: a stack of `1..=max_boxes` boxes whose footprints shrink
/// upwards. Buildings keep `street` free voxels to every tile border.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub side: usize,
    pub height: usize,
    pub block: usize,
    pub seed: u64,
    #[serde(default = "default_max_boxes")]
    pub max_boxes: usize,
    #[serde(default = "default_street")]
    pub street: usize,
}

fn default_max_boxes() -> usize {
    5
}

fn default_street() -> usize {
    2
}

impl WorldSpec {
    pub fn new(side: usize, height: usize, block: usize, seed: u64) -> Self {
        Self {
            side,
            height,
            block,
            seed,
            max_boxes: default_max_boxes(),
            street: default_street(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block == 0 || self.side == 0 {
            return Err(Error::InvalidArgument(
                "side length and block size must be positive".into(),
            ));
        }
        if self.side % self.block != 0 {
            return Err(Error::InvalidArgument(format!(
                "side length {} must be divisible by block size {}",
                self.side, self.block
            )));
        }
        if self.height < 2 {
            return Err(Error::InvalidArgument(format!(
                "height must be at least 2, got {}",
                self.height
            )));
        }
        if self.block < 2 * self.street + 1 {
            return Err(Error::InvalidArgument(format!(
                "block size {} leaves no room for a building with street width {}",
                self.block, self.street
            )));
        }
        if self.max_boxes == 0 {
            return Err(Error::InvalidArgument("max_boxes must be at least 1".into()));
        }
        Ok(())
    }

    pub fn tiles_per_side(&self) -> usize {
        self.side / self.block
    }
}

/// Footprint `[x0, x1] x [y0, y1]` (1-based, inclusive) and top voxel layer of
/// one stacked box.
#[derive(Clone, Copy, Debug)]
struct Storey {
    x: [usize; 2],
    y: [usize; 2],
    z: [usize; 2],
}

fn shrink(rng: &mut ChaCha8Rng, span: [usize; 2]) -> [usize; 2] {
    let slack = (span[1] - span[0]) / 2;
    let lo = rng.gen_range(0..=slack);
    let hi = rng.gen_range(0..=slack);
    [span[0] + lo, span[1] - hi]
}

fn building(rng: &mut ChaCha8Rng, spec: &WorldSpec, origin: [usize; 2]) -> Vec<Storey> {
    let avail = spec.block - 2 * spec.street;
    let mut footprint = [[0usize; 2]; 2];
    for (axis, span) in footprint.iter_mut().enumerate() {
        let width = rng.gen_range((avail / 4).max(1)..=avail);
        let offset = rng.gen_range(0..=avail - width);
        let start = origin[axis] + spec.street + offset + 1;
        *span = [start, start + width - 1];
    }

    let total = rng.gen_range(1..spec.height);
    let storeys = rng.gen_range(1..=spec.max_boxes).min(total);
    let mut cuts: Vec<usize> = Vec::with_capacity(storeys + 1);
    cuts.push(0);
    while cuts.len() < storeys {
        let c = rng.gen_range(1..total);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.push(total);
    cuts.sort_unstable();

    let mut out = Vec::with_capacity(storeys);
    for level in 0..storeys {
        if level > 0 {
            footprint = [shrink(rng, footprint[0]), shrink(rng, footprint[1])];
        }
        out.push(Storey {
            x: footprint[0],
            y: footprint[1],
            z: [cuts[level] + 1, cuts[level + 1]],
        });
    }
    out
}

/// Deterministic city world for `spec`.
pub fn generate_city_world(spec: &WorldSpec) -> Result<OccupancyGrid> {
    spec.validate()?;
    let mut grid = OccupancyGrid::new([spec.side, spec.side, spec.height], 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tiles = spec.tiles_per_side();
    for ty in 0..tiles {
        for tx in 0..tiles {
            for s in building(&mut rng, spec, [tx * spec.block, ty * spec.block]) {
                grid.fill_box([s.x[0], s.y[0], s.z[0]], [s.x[1], s.y[1], s.z[1]], true);
            }
        }
    }
    Ok(grid)
}
