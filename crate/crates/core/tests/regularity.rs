use percap::flow::Disjointness;
use percap::montecarlo::Sampler;
use percap::percolation::explore;
use percap::regularity::{
    classify_regular, density_check, line_good, local_density_check, outward_face, regular_fraction_experiment,
    LocalOptions, SurfaceExponent,
};
use percap::{GraphSpec, Lattice, Point, Region};
use proptest::prelude::*;

fn pt(v: &[i64]) -> Point {
    Point::new(v).unwrap()
}

fn linf(a: &Point, b: &Point) -> i64 {
    a.linf_dist(b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn regular_sets_grow_with_k_and_packing_is_maximal(seed in 0u64..10_000, p in 0.45f64..0.6) {
        let spec = GraphSpec::nearest_neighbor(2, p).unwrap();
        let lat = Lattice::new(spec.clone()).unwrap();
        let cfg = lat.configuration(seed, 0);
        let c = explore(&cfg, &Point::origin(2), &Region::origin_box(2, 12), 1_000_000).unwrap();
        let mut prev: Option<Vec<Point>> = None;
        for k in [3i64, 4, 6, 9] {
            let rep = classify_regular(&c, &spec, k, SurfaceExponent::Two).unwrap();
            if let Some(prev) = &prev {
                prop_assert!(prev.iter().all(|x| rep.regular.contains(x)));
            }
            prop_assert!(rep.regular.iter().all(|x| rep.pioneers.contains(x)));
            let sel = &rep.separated_regular;
            for (i, a) in sel.iter().enumerate() {
                prop_assert!(rep.regular.contains(a));
                for b in &sel[i + 1..] {
                    prop_assert!(linf(a, b) >= 2 * k);
                }
            }
            for x in rep.regular.iter().filter(|x| !sel.contains(x)) {
                prop_assert!(sel.iter().any(|y| linf(x, y) < 2 * k));
            }
            prev = Some(rep.regular.clone());
        }
    }

    #[test]
    fn local_condition_implies_global(seed in 0u64..10_000, p in 0.3f64..0.7, s in 3i64..=4) {
        let (r, d) = (9, 2);
        let spec = GraphSpec::nearest_neighbor(d, p).unwrap();
        let lat = Lattice::new(spec.clone()).unwrap();
        let cfg = lat.configuration(seed, 1);
        let ball = Region::origin_box(d, r);
        for x in [pt(&[r, 0]), pt(&[-r, 3]), pt(&[4, r])] {
            let c = explore(&cfg, &x, &ball, 1_000_000).unwrap();
            let opts = LocalOptions { surface: SurfaceExponent::Two, paths: Disjointness::Vertex };
            let loc = local_density_check(&cfg, &x, s, r, opts).unwrap();
            if loc.pass {
                prop_assert!(density_check(&c, &spec, &x, s, SurfaceExponent::Two).unwrap().pass);
            }
        }
    }
}

#[test]
fn local_check_counts_by_hand() {
    // d = 2, p = 1, x = (10, 0), s = 3: R = [1, 10] × [−9, 9]. The narrowest
    // layer between B(x, 3) and distance 9 is distance 3: 7 + 2·3 = 13 sites.
    let lat = Lattice::new(GraphSpec::nearest_neighbor(2, 1.0).unwrap()).unwrap();
    let cfg = lat.configuration(0, 0);
    let opts = LocalOptions { surface: SurfaceExponent::Two, paths: Disjointness::Vertex };
    let loc = local_density_check(&cfg, &pt(&[10, 0]), 3, 10, opts).unwrap();
    assert_eq!(loc.region_volume, 10 * 19);
    assert_eq!(loc.max_volume, 28);
    assert_eq!(loc.max_surface, 7);
    assert_eq!(loc.paths, 13);
    assert!(!loc.pass);

    // a segment: one path
    let lat = Lattice::new(GraphSpec::nearest_neighbor(1, 1.0).unwrap()).unwrap();
    let cfg = lat.configuration(0, 0);
    let loc = local_density_check(&cfg, &pt(&[6]), 3, 6, opts).unwrap();
    assert_eq!(loc.paths, 1);
}

#[test]
fn line_good_rate_matches_independent_edges() {
    let (p, k, r) = (0.5, 3i64, 8);
    let spec = GraphSpec::nearest_neighbor(2, p).unwrap();
    let lat = Lattice::new(spec.clone()).unwrap();
    let (mut trials, mut good) = (0u64, 0u64);
    for i in 0..4000 {
        let cfg = lat.configuration(17, i);
        let c = explore(&cfg, &Point::origin(2), &Region::origin_box(2, r), 1_000_000).unwrap();
        let rep = classify_regular(&c, &spec, k, SurfaceExponent::Two).unwrap();
        let rep = line_good(&cfg, &rep, k).unwrap();
        assert_eq!(rep.projected_line_good.len(), rep.line_good.len());
        for (x, y) in rep.line_good.iter().zip(&rep.projected_line_good) {
            assert_eq!(y.linf(), r + k);
            assert_eq!(linf(x, y), k);
        }
        let interior = |x: &Point| x.coords().iter().filter(|c| c.abs() == r).count() == 1;
        trials += rep.separated_regular.iter().filter(|x| interior(x)).count() as u64;
        good += rep.line_good.iter().filter(|x| interior(x)).count() as u64;
    }
    let q = p.powi(k as i32);
    let se = (q * (1.0 - q) / trials as f64).sqrt();
    let freq = good as f64 / trials as f64;
    assert!(trials > 1000);
    assert!((freq - q).abs() <= 3.0 * se, "{freq} vs {q} over {trials}");
}

#[test]
fn faces_and_degenerate_fractions() {
    assert_eq!(outward_face(&pt(&[3, -3]), &Point::origin(2), 3), Some((0, 1)));
    assert_eq!(outward_face(&pt(&[-3, 1]), &Point::origin(2), 3), Some((0, -1)));
    assert_eq!(outward_face(&pt(&[1, 2]), &Point::origin(2), 3), None);

    let smp = Sampler::new(GraphSpec::nearest_neighbor(3, 0.0).unwrap(), 1).unwrap();
    let f = regular_fraction_experiment(&smp, 4, 3, &[1, 2], 200).unwrap();
    assert!(f.events.iter().all(|e| e.value == 0.0));

    let smp = Sampler::new(GraphSpec::nearest_neighbor(3, 0.3).unwrap(), 2).unwrap();
    let f = regular_fraction_experiment(&smp, 5, 3, &[1, 4, 16, 64], 2000).unwrap();
    assert!(f.events.windows(2).all(|w| w[1].hits <= w[0].hits));
    assert!(f.mean_regular <= f.mean_pioneers && f.mean_line_good <= f.mean_regular);
}
