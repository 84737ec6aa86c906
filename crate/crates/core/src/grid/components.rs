use std::collections::VecDeque;

use super::OccupancyGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Connectivity {
    /// Face neighbors only.
    #[default]
    Six,
    /// Face, edge, and corner neighbors.
    TwentySix,
}

impl Connectivity {
    fn offsets(self) -> Vec<[isize; 3]> {
        let mut out = Vec::new();
        for dz in -1..=1isize {
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Six => manhattan == 1,
                        Connectivity::TwentySix => manhattan > 0,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Labels of free voxels, 0-based linear order (x fastest). Occupied voxels
/// carry label 0; components are numbered from 1 in scan order.
#[derive(Clone, Debug)]
pub struct Components {
    pub labels: Vec<u32>,
    pub count: usize,
}

pub fn free_components(grid: &OccupancyGrid, connectivity: Connectivity) -> Components {
    let [nx, ny, nz] = grid.dims();
    let offsets = connectivity.offsets();
    let mut labels = vec![0u32; grid.voxel_count()];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let at = grid.linear0(x, y, z);
                if labels[at] != 0 || grid.occupied0(x, y, z) {
                    continue;
                }
                count += 1;
                labels[at] = count;
                queue.push_back([x, y, z]);
                while let Some(v) = queue.pop_front() {
                    for off in &offsets {
                        let n: [isize; 3] = std::array::from_fn(|k| v[k] as isize + off[k]);
                        if n[0] < 0 || n[1] < 0 || n[2] < 0 {
                            continue;
                        }
                        let n = [n[0] as usize, n[1] as usize, n[2] as usize];
                        if n[0] >= nx || n[1] >= ny || n[2] >= nz {
                            continue;
                        }
                        let nat = grid.linear0(n[0], n[1], n[2]);
                        if labels[nat] == 0 && !grid.occupied0(n[0], n[1], n[2]) {
                            labels[nat] = count;
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
    }
    Components {
        labels,
        count: count as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_cube_is_one_component() {
        let g = OccupancyGrid::new([2, 2, 2], 1.0).unwrap();
        assert_eq!(free_components(&g, Connectivity::Six).count, 1);
    }

    #[test]
    fn blocked_middle_splits_a_row() {
        let mut g = OccupancyGrid::new([3, 1, 1], 1.0).unwrap();
        g.set([2, 1, 1], true);
        let c = free_components(&g, Connectivity::Six);
        assert_eq!(c.count, 2);
        assert_eq!(c.labels, vec![1, 0, 2]);
    }

    #[test]
    fn diagonal_contact_joins_only_with_26() {
        let mut g = OccupancyGrid::new([2, 2, 1], 1.0).unwrap();
        g.set([2, 1, 1], true);
        g.set([1, 2, 1], true);
        assert_eq!(free_components(&g, Connectivity::Six).count, 2);
        assert_eq!(free_components(&g, Connectivity::TwentySix).count, 1);
    }
}
