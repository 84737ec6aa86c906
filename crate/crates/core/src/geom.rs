//! Integer box geometry and the convex hull of two boxes.
//!
//! Boxes live in voxel-corner coordinates: voxel `(i, j, k)` (1-based) spans
//! `[i-1, i] x [j-1, j] x [k-1, k]`. All hull predicates are evaluated in
//! exact `i64` arithmetic.

pub type Point3 = [f64; 3];

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Closed axis-aligned box with integer corners.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IBox {
    pub lo: [i64; 3],
    pub hi: [i64; 3],
}

impl IBox {
    pub fn new(lo: [i64; 3], hi: [i64; 3]) -> Self {
        debug_assert!((0..3).all(|k| lo[k] <= hi[k]));
        Self { lo, hi }
    }

    /// Box of voxels `lo..=hi` given as 1-based inclusive indices.
    pub fn from_voxels(lo: [usize; 3], hi: [usize; 3]) -> Self {
        Self {
            lo: [lo[0] as i64 - 1, lo[1] as i64 - 1, lo[2] as i64 - 1],
            hi: [hi[0] as i64, hi[1] as i64, hi[2] as i64],
        }
    }

    pub fn union_bounds(&self, other: &IBox) -> IBox {
        IBox {
            lo: std::array::from_fn(|k| self.lo[k].min(other.lo[k])),
            hi: std::array::from_fn(|k| self.hi[k].max(other.hi[k])),
        }
    }

    /// True when the open interiors intersect.
    pub fn interiors_overlap(&self, other: &IBox) -> bool {
        (0..3).all(|k| self.lo[k] < other.hi[k] && other.lo[k] < self.hi[k])
    }

    fn corners(&self) -> [[i64; 3]; 8] {
        std::array::from_fn(|c| {
            [
                if c & 1 == 0 { self.lo[0] } else { self.hi[0] },
                if c & 2 == 0 { self.lo[1] } else { self.hi[1] },
                if c & 4 == 0 { self.lo[2] } else { self.hi[2] },
            ]
        })
    }
}

fn sub(a: &[i64; 3], b: &[i64; 3]) -> [i64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[i64; 3], b: &[i64; 3]) -> [i64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: &[i64; 3], b: &[i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn reduce(v: [i64; 3]) -> [i64; 3] {
    let g = gcd(gcd(v[0], v[1]), v[2]);
    if g <= 1 {
        v
    } else {
        [v[0] / g, v[1] / g, v[2] / g]
    }
}

/// Direction normalized up to sign, for deduplicating separating axes.
fn canonical_axis(v: [i64; 3]) -> [i64; 3] {
    let v = reduce(v);
    let first = v.iter().copied().find(|&c| c != 0).unwrap_or(0);
    if first < 0 {
        [-v[0], -v[1], -v[2]]
    } else {
        v
    }
}

/// Convex hull of two integer boxes, kept as a vertex set plus the complete
/// list of candidate separating axes against any axis-aligned box.
#[derive(Clone, Debug)]
pub struct BoxHull {
    vertices: Vec<[i64; 3]>,
    axes: Vec<[i64; 3]>,
    bounds: IBox,
}

impl BoxHull {
    pub fn new(a: &IBox, b: &IBox) -> Self {
        let mut vertices: Vec<[i64; 3]> = a.corners().into_iter().chain(b.corners()).collect();
        vertices.sort_unstable();
        vertices.dedup();

        // Supporting planes through vertex triples; each kept with outward normal.
        let mut facets: Vec<([i64; 3], i64)> = Vec::new();
        let n = vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let normal = cross(
                        &sub(&vertices[j], &vertices[i]),
                        &sub(&vertices[k], &vertices[i]),
                    );
                    if normal == [0, 0, 0] {
                        continue;
                    }
                    let normal = reduce(normal);
                    let offset = dot(&normal, &vertices[i]);
                    let mut above = false;
                    let mut below = false;
                    for v in &vertices {
                        let s = dot(&normal, v) - offset;
                        above |= s > 0;
                        below |= s < 0;
                        if above && below {
                            break;
                        }
                    }
                    let facet = match (above, below) {
                        (false, _) => (normal, offset),
                        (true, false) => ([-normal[0], -normal[1], -normal[2]], -offset),
                        (true, true) => continue,
                    };
                    if !facets.contains(&facet) {
                        facets.push(facet);
                    }
                }
            }
        }

        let mut axes: Vec<[i64; 3]> = vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]];
        for (normal, _) in &facets {
            axes.push(canonical_axis(*normal));
        }
        // Hull edges lie on the intersection line of two facets sharing two vertices.
        let basis = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
        for (fi, (nf, df)) in facets.iter().enumerate() {
            for (ng, dg) in facets.iter().skip(fi + 1) {
                let dir = cross(nf, ng);
                if dir == [0, 0, 0] {
                    continue;
                }
                let shared = vertices
                    .iter()
                    .filter(|v| dot(nf, v) == *df && dot(ng, v) == *dg)
                    .count();
                if shared < 2 {
                    continue;
                }
                for e in &basis {
                    let axis = cross(&dir, e);
                    if axis != [0, 0, 0] {
                        axes.push(canonical_axis(axis));
                    }
                }
            }
        }
        axes.sort_unstable();
        axes.dedup();

        Self {
            vertices,
            axes,
            bounds: a.union_bounds(b),
        }
    }

    pub fn bounds(&self) -> &IBox {
        &self.bounds
    }

    /// True when the hull interior intersects the interior of `other`.
    /// Touching along faces, edges, or corners does not count.
    pub fn overlaps(&self, other: &IBox) -> bool {
        if !self.bounds.interiors_overlap(other) {
            return false;
        }
        for axis in &self.axes {
            let (mut hmin, mut hmax) = (i64::MAX, i64::MIN);
            for v in &self.vertices {
                let p = dot(axis, v);
                hmin = hmin.min(p);
                hmax = hmax.max(p);
            }
            let (mut bmin, mut bmax) = (0, 0);
            for k in 0..3 {
                let (lo, hi) = (axis[k] * other.lo[k], axis[k] * other.hi[k]);
                bmin += lo.min(hi);
                bmax += lo.max(hi);
            }
            if hmax <= bmin || bmax <= hmin {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(x: i64, y: i64, z: i64) -> IBox {
        IBox::new([x, y, z], [x + 1, y + 1, z + 1])
    }

    #[test]
    fn hull_of_l_shape_cuts_the_inner_corner_voxel() {
        let a = IBox::new([0, 0, 0], [2, 1, 1]);
        let b = IBox::new([1, 1, 0], [2, 2, 1]);
        let hull = BoxHull::new(&a, &b);
        assert!(hull.overlaps(&unit(0, 1, 0)));
        assert!(!hull.overlaps(&unit(2, 0, 0)));
        assert!(!hull.overlaps(&unit(0, 2, 0)));
    }

    #[test]
    fn face_touching_box_is_not_an_overlap() {
        let a = IBox::new([0, 0, 0], [3, 3, 3]);
        let hull = BoxHull::new(&a, &a);
        assert!(!hull.overlaps(&unit(3, 0, 0)));
        assert!(!hull.overlaps(&unit(3, 3, 3)));
        assert!(hull.overlaps(&unit(2, 2, 2)));
    }
}
