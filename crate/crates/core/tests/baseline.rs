mod common;

use cellplan::baseline::{line_of_sight, theta_star};
use cellplan::geom::Point3;
use cellplan::grid::{generate_city_world, OccupancyGrid, WorldSpec};
use cellplan::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn random_point(rng: &mut impl Rng, g: &OccupancyGrid) -> Point3 {
    let e = g.extent();
    std::array::from_fn(|k| rng.gen_range(0.0..e[k]))
}

#[test]
fn line_of_sight_agrees_with_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut ambiguous = 0;
    let mut total = 0;
    let mut blocked = 0;
    for w in 0..20 {
        let g = box_grid(&mut rng, [12, 12, 8], 4, if w % 2 == 0 { 1.0 } else { 0.5 });
        for _ in 0..500 {
            let (a, b) = (random_point(&mut rng, &g), random_point(&mut rng, &g));
            total += 1;
            match sampled_sight(&g, &a, &b, 0.01, 0.02) {
                None => ambiguous += 1,
                Some(clear) => {
                    assert_eq!(line_of_sight(&g, &a, &b), clear, "{a:?} -> {b:?}");
                    blocked += usize::from(!clear);
                }
            }
        }
    }
    assert_eq!(total, 10_000);
    assert!(ambiguous * 20 < total, "{ambiguous} ambiguous segments");
    assert!(blocked > 1000 && blocked < total - 1000, "degenerate sample: {blocked} blocked");
}

#[test]
fn grazing_a_voxel_edge_is_blocked() {
    let mut g = OccupancyGrid::new([3, 3, 1], 1.0).unwrap();
    g.set([2, 2, 1], true);
    // Runs along the top face of the occupied voxel.
    assert!(!line_of_sight(&g, &[0.5, 2.0, 0.5], &[2.5, 2.0, 0.5]));
    // Passes only the corner diagonally between two free voxels.
    assert!(!line_of_sight(&g, &[0.5, 0.5, 0.5], &[2.5, 2.5, 0.5]));
    assert!(line_of_sight(&g, &[0.5, 0.5, 0.5], &[2.5, 0.5, 0.5]));
    // Leaves the grid.
    assert!(!line_of_sight(&g, &[0.5, 0.5, 0.5], &[0.5, 3.5, 0.5]));
}

#[test]
fn empty_grid_gives_the_straight_segment() {
    let g = OccupancyGrid::new([10, 8, 6], 0.5).unwrap();
    let (s, t) = ([0.1, 0.2, 0.3], [4.9, 3.7, 2.5]);
    let p = theta_star(&g, s, t).unwrap().unwrap();
    assert_eq!(p.points, vec![s, t]);
    assert!((p.length - dist(&s, &t)).abs() < 1e-12);
}

#[test]
fn wall_with_gap_sits_between_straight_line_and_grid_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let mut g = OccupancyGrid::new([16, 12, 6], 1.0).unwrap();
        g.fill_box([8, 1, 1], [9, 12, 6], true);
        let (gy, gz) = (rng.gen_range(1..=11), rng.gen_range(1..=5));
        g.fill_box([8, gy, gz], [9, gy + 1, gz + 1], false);
        let s = [rng.gen_range(0.5..6.5), rng.gen_range(0.5..11.5), rng.gen_range(0.5..5.5)];
        let t = [rng.gen_range(10.5..15.5), rng.gen_range(0.5..11.5), rng.gen_range(0.5..5.5)];
        let p = theta_star(&g, s, t).unwrap().unwrap();
        let grid = grid_astar26(&g, s, t).unwrap();
        assert!(p.length >= dist(&s, &t) - 1e-9);
        assert!(p.length <= grid + 1e-9, "theta {} vs grid {grid}", p.length);
        assert!((polyline_len(&p.points) - p.length).abs() < 1e-9);
        for w in p.points.windows(2) {
            assert!(line_of_sight(&g, &w[0], &w[1]));
            assert!(!segment_collides(&g, &w[0], &w[1], 0.01));
        }
    }
}

#[test]
fn city_paths_stay_in_bounds_and_in_sight() {
    for seed in 0..3 {
        let spec = WorldSpec::new(100, 60, 50, seed);
        let g = generate_city_world(&spec).unwrap();
        let (s, t) = cellplan::bench::standard_query(&spec);
        let p = theta_star(&g, s, t).unwrap().unwrap();
        assert_eq!(p.points.first(), Some(&s));
        assert_eq!(p.points.last(), Some(&t));
        let e = g.extent();
        for q in &p.points {
            assert!((0..3).all(|k| q[k] >= 0.0 && q[k] <= e[k]));
        }
        for w in p.points.windows(2) {
            assert!(line_of_sight(&g, &w[0], &w[1]));
        }
        assert!(p.length >= dist(&s, &t));
        assert!(p.expansions > 0);
    }
}

#[test]
fn blocked_or_outside_endpoints_are_query_errors() {
    let mut g = OccupancyGrid::new([4, 4, 4], 1.0).unwrap();
    g.set([2, 2, 2], true);
    let ok = [0.5, 0.5, 0.5];
    for bad in [[1.5, 1.5, 1.5], [5.0, 1.0, 1.0], [-0.1, 1.0, 1.0]] {
        assert!(matches!(theta_star(&g, ok, bad), Err(Error::Query(_))), "{bad:?}");
        assert!(matches!(theta_star(&g, bad, ok), Err(Error::Query(_))), "{bad:?}");
    }
}
