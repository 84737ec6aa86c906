//! Sum-of-distances conic programs and the engine interface that solves them.
//!
//! A [`DistanceProgram`] places free points in axis-aligned boxes and
//! minimizes the summed Euclidean length of a list of segments, each joining
//! two free points or a free point and a fixed one. In epigraph form this is
//! `min sum t_e  s.t.  ||A_e z + b_e|| <= t_e,  lo <= z <= hi`, one
//! second-order cone per segment.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};
use crate::geom::{distance, Point3};

/// Relative duality gap every engine must certify.
pub const REQUIRED_REL_GAP: f64 = 1e-6;
/// Iteration cap shared by all engines.
pub const MAX_ITERATIONS: u32 = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Endpoint {
    Free(usize),
    Fixed(Point3),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DistanceProgram {
    /// Box `(lo, hi)` per free point.
    pub boxes: Vec<(Point3, Point3)>,
    pub segments: Vec<(Endpoint, Endpoint)>,
}

impl DistanceProgram {
    /// Objective value of `points` (no feasibility check).
    pub fn evaluate(&self, points: &[Point3]) -> f64 {
        let at = |e: &Endpoint| match *e {
            Endpoint::Free(i) => points[i],
            Endpoint::Fixed(p) => p,
        };
        self.segments.iter().map(|(a, b)| distance(&at(a), &at(b))).sum()
    }

    fn validate(&self) -> Result<()> {
        for (i, (lo, hi)) in self.boxes.iter().enumerate() {
            if (0..3).any(|k| !(lo[k] <= hi[k]) || !lo[k].is_finite() || !hi[k].is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "point {i} has an empty box {lo:?}..{hi:?}"
                )));
            }
        }
        for (a, b) in &self.segments {
            for e in [a, b] {
                if let Endpoint::Free(i) = *e {
                    if i >= self.boxes.len() {
                        return Err(Error::InvalidArgument(format!(
                            "segment references point {i} of {}",
                            self.boxes.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceSolution {
    /// Optimal free points, projected onto their boxes.
    pub points: Vec<Point3>,
    /// Objective recomputed at `points`.
    pub objective: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: u32,
}

impl DistanceSolution {
    pub fn relative_gap(&self) -> f64 {
        (self.primal_objective - self.dual_objective).abs()
            / self.primal_objective.abs().max(self.dual_objective.abs()).max(1.0)
    }
}

/// A solver for [`DistanceProgram`]s. Implementations must reach a relative
/// duality gap of [`REQUIRED_REL_GAP`] within [`MAX_ITERATIONS`] iterations
/// or report [`Error::Numeric`].
pub trait ConicEngine: Send + Sync {
    fn solve(&self, program: &DistanceProgram) -> Result<DistanceSolution>;
}

/// Interior-point engine backed by Clarabel.
#[derive(Clone, Debug, Default)]
pub struct ClarabelEngine;

fn project(p: Point3, (lo, hi): &(Point3, Point3)) -> Point3 {
    std::array::from_fn(|k| p[k].clamp(lo[k], hi[k]))
}

/// Triplet builder for the constraint matrix.
#[derive(Default)]
struct Rows {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    fn push(&mut self, entries: &[(usize, f64)], rhs: f64) {
        let row = self.b.len();
        for &(col, val) in entries {
            self.i.push(row);
            self.j.push(col);
            self.v.push(val);
        }
        self.b.push(rhs);
    }
}

impl ConicEngine for ClarabelEngine {
    fn solve(&self, program: &DistanceProgram) -> Result<DistanceSolution> {
        program.validate()?;
        let np = program.boxes.len();
        // Segments between two fixed points are constants.
        let mut constant = 0.0;
        let mut live = Vec::new();
        for (a, b) in &program.segments {
            match (a, b) {
                (Endpoint::Fixed(p), Endpoint::Fixed(q)) => constant += distance(p, q),
                _ => live.push((*a, *b)),
            }
        }
        let centers: Vec<Point3> = program
            .boxes
            .iter()
            .map(|(lo, hi)| std::array::from_fn(|k| 0.5 * (lo[k] + hi[k])))
            .collect();
        if live.is_empty() {
            return Ok(DistanceSolution {
                points: centers,
                objective: constant,
                primal_objective: constant,
                dual_objective: constant,
                iterations: 0,
            });
        }

        let n = 3 * np + live.len();
        let t0 = 3 * np;
        let mut rows = Rows::default();
        let mut cones = Vec::new();

        // Box rows, s = b - Az >= 0. Degenerate axes become equalities.
        let mut zero_rows = Rows::default();
        for (p, (lo, hi)) in program.boxes.iter().enumerate() {
            for k in 0..3 {
                let col = 3 * p + k;
                if hi[k] - lo[k] <= 1e-12 {
                    zero_rows.push(&[(col, 1.0)], 0.5 * (lo[k] + hi[k]));
                } else {
                    rows.push(&[(col, 1.0)], hi[k]);
                    rows.push(&[(col, -1.0)], -lo[k]);
                }
            }
        }
        let nonneg = rows.b.len();
        let zeros = zero_rows.b.len();
        let mut all = zero_rows;
        let offset = all.b.len();
        for ((i, j), v) in rows.i.iter().zip(&rows.j).zip(&rows.v) {
            all.i.push(i + offset);
            all.j.push(*j);
            all.v.push(*v);
        }
        all.b.extend_from_slice(&rows.b);
        if zeros > 0 {
            cones.push(SupportedConeT::ZeroConeT(zeros));
        }
        if nonneg > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(nonneg));
        }

        // One cone per segment: (t_e, a - b).
        for (e, (a, b)) in live.iter().enumerate() {
            all.push(&[(t0 + e, -1.0)], 0.0);
            for k in 0..3 {
                let mut entries = Vec::with_capacity(2);
                let mut rhs = 0.0;
                for (end, sign) in [(a, 1.0), (b, -1.0)] {
                    match *end {
                        Endpoint::Free(i) => entries.push((3 * i + k, -sign)),
                        Endpoint::Fixed(p) => rhs += sign * p[k],
                    }
                }
                all.push(&entries, rhs);
            }
            cones.push(SupportedConeT::SecondOrderConeT(4));
        }

        let m = all.b.len();
        let a = CscMatrix::new_from_triplets(m, n, all.i, all.j, all.v);
        let p = CscMatrix::zeros((n, n));
        let mut q = vec![0.0; n];
        q[t0..].fill(1.0);

        let settings = DefaultSettings {
            max_iter: MAX_ITERATIONS,
            verbose: false,
            ..DefaultSettings::default()
        };
        let mut solver = DefaultSolver::new(&p, &q, &a, &all.b, &cones, settings).map_err(|e| {
            Error::Numeric {
                message: format!("solver setup failed: {e}"),
                primal: f64::NAN,
                dual: f64::NAN,
            }
        })?;
        solver.solve();
        let sol = &solver.solution;
        let gap = (sol.obj_val - sol.obj_val_dual).abs() / sol.obj_val.abs().max(sol.obj_val_dual.abs()).max(1.0);
        let usable = match sol.status {
            SolverStatus::Solved => true,
            SolverStatus::AlmostSolved => gap <= REQUIRED_REL_GAP,
            _ => false,
        };
        if !usable {
            return Err(Error::Numeric {
                message: format!("{:?} after {} iterations", sol.status, sol.iterations),
                primal: sol.r_prim,
                dual: sol.r_dual,
            });
        }
        let points: Vec<Point3> = (0..np)
            .map(|i| project([sol.x[3 * i], sol.x[3 * i + 1], sol.x[3 * i + 2]], &program.boxes[i]))
            .collect();
        let objective = program.evaluate(&points);
        Ok(DistanceSolution {
            points,
            objective,
            primal_objective: sol.obj_val + constant,
            dual_objective: sol.obj_val_dual + constant,
            iterations: sol.iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(c: Point3, r: f64) -> (Point3, Point3) {
        (c.map(|x| x - r), c.map(|x| x + r))
    }

    #[test]
    fn point_between_two_fixed_ends() {
        // A free point inside a box straddling the segment lands on it.
        let prog = DistanceProgram {
            boxes: vec![unit_box([5.0, 0.0, 0.0], 1.0)],
            segments: vec![
                (Endpoint::Fixed([0.0; 3]), Endpoint::Free(0)),
                (Endpoint::Free(0), Endpoint::Fixed([10.0, 0.0, 0.0])),
            ],
        };
        let s = ClarabelEngine.solve(&prog).unwrap();
        assert!((s.objective - 10.0).abs() < 1e-6, "{s:?}");
        assert!(s.relative_gap() <= REQUIRED_REL_GAP);
    }

    #[test]
    fn detour_through_offset_box() {
        // Box forces the point up to y = 3: length 2 * sqrt(25 + 9).
        let prog = DistanceProgram {
            boxes: vec![([4.0, 3.0, 0.0], [6.0, 4.0, 0.0])],
            segments: vec![
                (Endpoint::Fixed([0.0; 3]), Endpoint::Free(0)),
                (Endpoint::Free(0), Endpoint::Fixed([10.0, 0.0, 0.0])),
            ],
        };
        let s = ClarabelEngine.solve(&prog).unwrap();
        assert!((s.objective - 2.0 * 34f64.sqrt()).abs() < 1e-6);
        assert!((s.points[0][0] - 5.0).abs() < 1e-4);
    }

    #[test]
    fn constant_only_program() {
        let prog = DistanceProgram {
            boxes: vec![],
            segments: vec![(Endpoint::Fixed([0.0; 3]), Endpoint::Fixed([3.0, 4.0, 0.0]))],
        };
        assert_eq!(ClarabelEngine.solve(&prog).unwrap().objective, 5.0);
    }

    #[test]
    fn rejects_dangling_reference() {
        let prog = DistanceProgram {
            boxes: vec![],
            segments: vec![(Endpoint::Free(0), Endpoint::Fixed([0.0; 3]))],
        };
        assert!(matches!(ClarabelEngine.solve(&prog), Err(Error::InvalidArgument(_))));
    }
}
