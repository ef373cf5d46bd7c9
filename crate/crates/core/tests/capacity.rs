use percap::capacity::{
    ball_capacity, cap_d4, cap_d4_from, energy, riesz_kernel, CapacityResult, Measure, DEFAULT_TOL,
};
use percap::Point;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kernel(x: &Point, y: &Point, d: usize) -> f64 {
    let l2: f64 = x
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(a, b)| ((a - b) * (a - b)) as f64)
        .sum::<f64>()
        .sqrt();
    (1.0 + l2).powi(4 - d as i32)
}

fn weight_of(res: &CapacityResult, x: &Point) -> f64 {
    res.minimizer
        .support
        .iter()
        .position(|y| y == x)
        .map_or(0.0, |i| res.minimizer.weights[i])
}

fn point_set(d: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::btree_set(prop::collection::vec(-3i64..=3, d), 1..=6)
        .prop_map(|s| s.into_iter().map(|v| Point::new(&v).unwrap()).collect())
}

#[test]
fn energy_spot_values() {
    let d = 7;
    let o = Point::origin(d);
    let x = Point::new(&[2, 1, 0, 0, 0, 0, 0]).unwrap();
    let ell = 5f64.sqrt();
    let two = Measure::uniform(vec![o.clone(), x.clone()]).unwrap();
    let by_hand = 0.5 * (1.0 + (1.0 + ell).powi(4 - d as i32));
    assert!((energy(&two, d).unwrap() - by_hand).abs() < 1e-15);

    let line: Vec<Point> = (0..3).map(|i| Point::new(&[i, 0, 0, 0, 0, 0, 0]).unwrap()).collect();
    let mut direct = 0.0;
    for a in &line {
        for b in &line {
            direct += kernel(a, b, d) / 9.0;
        }
    }
    let uni = Measure::uniform(line).unwrap();
    assert!((energy(&uni, d).unwrap() - direct).abs() < 1e-15);
    assert!(riesz_kernel(&o, &Point::new(&[3, 4, 0, 0, 0, 0, 0, 0]).unwrap(), 8).is_err());
    let y = Point::new(&[3, 4, 0, 0, 0, 0, 0, 0]).unwrap();
    assert!((riesz_kernel(&Point::origin(8), &y, 8).unwrap() - 1.0 / 1296.0).abs() < 1e-18);
}

#[test]
fn random_restarts_reach_the_same_ball_optimum() {
    let ball = ball_capacity(1, 5, 1e-8).unwrap();
    let pts: Vec<Point> = percap::lattice::box_points(&Point::origin(5), 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let mut w: Vec<f64> = (0..pts.len()).map(|_| rng.gen::<f64>()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let c = cap_d4_from(&pts, 5, 1e-8, &w).unwrap();
        assert!(c.converged);
        assert!((c.capacity - ball.capacity).abs() <= 1e-7 * ball.capacity, "{} vs {}", c.capacity, ball.capacity);
    }
    assert_eq!(ball_capacity(0, 9, DEFAULT_TOL).unwrap().capacity, 1.0);
}

#[test]
fn sparse_grids_keep_capacity_per_point() {
    let d = 7;
    let mut per_point = Vec::new();
    for side in [2i64, 3, 4] {
        let mut a = Vec::new();
        for i in 0..side {
            for j in 0..side {
                for k in 0..side {
                    a.push(Point::new(&[2 * i, 2 * j, 2 * k, 0, 0, 0, 0]).unwrap());
                }
            }
        }
        let c = cap_d4(&a, d, DEFAULT_TOL).unwrap();
        per_point.push(c.capacity / a.len() as f64);
    }
    assert!(per_point.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{per_point:?}");
    assert!(per_point.iter().all(|&v| v > 0.1), "{per_point:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounds_and_monotonicity(d in 5usize..=9, a in point_set(9), extra in prop::collection::vec(-4i64..=4, 9)) {
        let a: Vec<Point> = a.iter().map(|p| Point::new(&p.coords()[..d]).unwrap()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let c = cap_d4(&a, d, DEFAULT_TOL).unwrap();
        prop_assert!(c.converged);
        prop_assert!(c.capacity >= 1.0 - 1e-12 && c.capacity <= a.len() as f64 + 1e-9);
        let e = Point::new(&extra[..d]).unwrap();
        if !a.contains(&e) {
            let mut b = a.clone();
            b.push(e);
            let cb = cap_d4(&b, d, DEFAULT_TOL).unwrap();
            prop_assert!(c.capacity <= cb.capacity * (1.0 + 1e-8));
        }
    }

    #[test]
    fn translation_invariance_is_exact(a in point_set(7), shift in prop::collection::vec(-50i64..=50, 7)) {
        let s = Point::new(&shift).unwrap();
        let moved: Vec<Point> = a.iter().map(|p| p.add(&s).unwrap()).collect();
        let c0 = cap_d4(&a, 7, DEFAULT_TOL).unwrap();
        let c1 = cap_d4(&moved, 7, DEFAULT_TOL).unwrap();
        prop_assert_eq!(c0.capacity, c1.capacity);
    }

    #[test]
    fn minimizer_satisfies_kkt(d in 5usize..=8, a in point_set(8)) {
        let a: Vec<Point> = a.iter().map(|p| Point::new(&p.coords()[..d]).unwrap()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let tol = 1e-9;
        let c = cap_d4(&a, d, tol).unwrap();
        let w: Vec<f64> = a.iter().map(|x| weight_of(&c, x)).collect();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let pot: Vec<f64> = a.iter().map(|x| a.iter().zip(&w).map(|(y, wy)| wy * kernel(x, y, d)).sum()).collect();
        let e: f64 = pot.iter().zip(&w).map(|(p, wi)| p * wi).sum();
        prop_assert!((e - c.energy).abs() <= 1e-9 * e);
        for (p, wi) in pot.iter().zip(&w) {
            prop_assert!(*p >= e - 10.0 * tol);
            if *wi > 0.0 {
                prop_assert!((p - e).abs() <= 10.0 * tol, "support potential {} vs energy {}", p, e);
            }
        }
    }
}
