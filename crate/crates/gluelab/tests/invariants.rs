use gluelab::analysis::{self, TestFn};
use gluelab::galleries;
use gluelab::gluing::{self, GridGluer, GridPoint};
use gluelab::lattice::{cells_in_box, phi_cell, phi_map, subdivide};
use gluelab::metric;
use gluelab::{q, BoxQ, CellId, ExactPoint, SystemParams, Q};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn family(i: usize) -> SystemParams {
    match i {
        0 => SystemParams::std2d(2),
        1 => SystemParams::std2d(5),
        _ => SystemParams::counterexample(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subdivision_tiles_the_cell(gen in 0i32..3, a in -5i64..5, b in -5i64..5, ext in 0u32..4, fam in 0usize..3) {
        let p = family(fam);
        let c = CellId::new(gen, vec![a, b], ext);
        let subs = subdivide(&p, &c);
        let vol = |c: &CellId| {
            p.realize(c)
                .iter()
                .enumerate()
                .map(|(ax, (lo, hi))| if c.spans(ax) { hi - lo } else { Q::from_integer(1) })
                .fold(Q::from_integer(1), |acc, v| acc * v)
        };
        let total = subs.iter().map(vol).fold(Q::zero(), |a, v| a + v);
        prop_assert_eq!(total, vol(&c));
        let ctr = p.center(&c);
        prop_assert!(subs.iter().any(|s| p.contains_point(s, &ctr)));
        prop_assert!(subs.iter().all(|s| p.contains_point(&c, &p.center(s))));
    }

    #[test]
    fn phi_conjugates_subdivision(gen in 0i32..3, a in -5i64..5, b in -5i64..5, ext in 0u32..4, k in 0i32..3) {
        let p = SystemParams::std2d(2);
        let c = CellId::new(gen, vec![a, b], ext);
        let lhs = subdivide(&p, &phi_cell(&c, k));
        let mut rhs: Vec<CellId> = subdivide(&p, &c).iter().map(|s| phi_cell(s, k)).collect();
        rhs.sort();
        prop_assert_eq!(lhs, rhs);
        // the point map carries centers to centers
        prop_assert_eq!(phi_map(&p, &p.center(&c), k), p.center(&phi_cell(&c, k)));
    }

    #[test]
    fn cells_in_box_is_exhaustive(x in 0i128..1001, y in 0i128..1001, gen in 0i32..3) {
        let p = SystemParams::std2d(2);
        let bx = BoxQ::new(vec![q(0, 1), q(0, 1)], vec![q(1, 1), q(1, 2)]);
        let pt = ExactPoint::xy(q(x, 1001), q(y, 2002));
        let cells = cells_in_box(&p, &bx, gen, 2).unwrap();
        prop_assert!(cells.iter().any(|c| p.contains_point(c, &pt)));
    }

    #[test]
    fn cosets_symmetric_bounded_nested(x in 0i64..33, y in -40i64..80, j in 0i32..3, fam in 0usize..2) {
        let p = family(fam);
        let k = 2;
        let gl = GridGluer::new(&p, k);
        let g = GridPoint { x, y: vec![y] };
        let c = gl.coset(&g, j).unwrap();
        prop_assert!(c.len() <= 3);
        prop_assert!(c.contains(&g));
        for m in &c {
            prop_assert_eq!(&gl.coset(m, j).unwrap(), &c);
        }
        let up = gl.coset(&g, j + 1).unwrap();
        prop_assert!(c.iter().all(|m| up.contains(m)));
    }

    #[test]
    fn nontrivial_cosets_sit_on_one_line_generation(x in 1i64..33, y in 0i64..72, j in 0i32..3) {
        let p = SystemParams::std2d(2);
        let gl = GridGluer::new(&p, 2);
        let c = gl.coset(&GridPoint { x, y: vec![y] }, j).unwrap();
        if c.len() > 1 {
            prop_assert!(c.iter().all(|m| m.x == x));
            prop_assert!(gluing::line_gen(p.m, &q(x as i128, 16)).is_some_and(|g| g <= j));
        }
    }

    #[test]
    fn chain_distance_is_a_pseudometric(pts in proptest::collection::vec((0i128..33, 0i128..73), 3), j in 0i32..2) {
        let p = SystemParams::std2d(2);
        let e: Vec<ExactPoint> = pts.iter().map(|(x, y)| ExactPoint::xy(q(*x, 16), q(*y, 36))).collect();
        let d = |a: &ExactPoint, b: &ExactPoint| metric::set_dist(&p, &[a.clone()], &[b.clone()], j, j).unwrap();
        prop_assert_eq!(d(&e[0], &e[0]), Q::zero());
        prop_assert_eq!(d(&e[0], &e[1]), d(&e[1], &e[0]));
        prop_assert!(d(&e[0], &e[2]) <= d(&e[0], &e[1]) + d(&e[1], &e[2]));
        // x is 1-Lipschitz
        prop_assert!((e[0].x() - e[1].x()).abs() <= d(&e[0], &e[1]));
    }

    #[test]
    fn bracket_is_ordered(x0 in 1i128..1000, y0 in 1i128..1000, x1 in 1i128..1000, y1 in 1i128..1000) {
        let p = SystemParams::std2d(5);
        let a = ExactPoint::xy(q(x0, 1001), q(y0, 1001));
        let b = ExactPoint::xy(q(x1, 1001), q(y1, 1001));
        let d: Vec<Q> = (0..=3)
            .map(|k| metric::set_dist(&p, &[a.clone()], &[b.clone()], k, k).unwrap())
            .collect();
        for j in 0..4 {
            for k in j + 1..4 {
                let slack = Q::new(2, 4i128.pow(j as u32));
                prop_assert!(d[k] >= &d[j] - slack);
                prop_assert!(d[k] <= &d[j] + slack);
            }
        }
        let br = metric::dinf_bracket(&p, &a, &b, &[0, 1, 2, 3]).unwrap();
        prop_assert!(br.lo <= br.hi);
        prop_assert!(br.lo >= Q::zero());
    }

    #[test]
    fn galleries_revalidate(a in 0i64..8, b in 0i64..18, dx in -1i64..2, j in 1i32..3) {
        let p = SystemParams::std2d(2);
        let c0 = CellId::top(j, vec![a, b]);
        let c1 = CellId::top(j, vec![a + dx, b + 1]);
        let g = galleries::gallery_join(&p, &c0, &c1, j, 40).unwrap();
        prop_assert!(g.validate(&p).unwrap());
        prop_assert_eq!(g.cells.first(), Some(&c0));
    }
}

// At L = 2 the chain distance can drop by more than 2 m^-j between levels.
#[test]
fn sandwich_lower_bound_breaks_at_l2() {
    let p = SystemParams::std2d(2);
    let a = ExactPoint::xy(q(736, 1001), q(51, 1001));
    let b = ExactPoint::xy(q(939, 1001), q(390, 1001));
    let d = |k| metric::set_dist(&p, &[a.clone()], &[b.clone()], k, k).unwrap();
    assert_eq!(d(2), q(1, 2));
    assert_eq!(d(3), q(23, 64));
    assert!(d(3) < d(2) - q(2, 16));
    // the same pair is fine at L = 5
    let p5 = SystemParams::std2d(5);
    let d5 = |k| metric::set_dist(&p5, &[a.clone()], &[b.clone()], k, k).unwrap();
    assert!(d5(3) >= d5(2) - q(2, 16));
}

#[test]
fn derivative_of_x_is_one_at_every_level() {
    let p = SystemParams::std2d(2);
    let f = TestFn::Linear(Q::from_integer(1), Q::zero());
    for g in 0..=3 {
        let cells = cells_in_box(&p, &BoxQ::cube(2, 0, 1), g, 2).unwrap();
        let d = analysis::horizontal_derivative(&p, &f, &cells, 4);
        assert_eq!(d.exact.len(), cells.len());
        assert!(d.exact.values().all(|v| *v == Q::from_integer(1)));
    }
}

#[test]
fn pencil_weights_are_exact() {
    let p = SystemParams::std2d(2);
    let a = ExactPoint::xy(q(201, 1001), q(640, 1001));
    let b = ExactPoint::xy(q(373, 1001), q(740, 1001));
    let row = analysis::pencil_row(&p, &a, &b, 2, 64, 200, 3, 2).unwrap();
    assert!(row.weights_exact && row.continuous && row.endpoints);
}
