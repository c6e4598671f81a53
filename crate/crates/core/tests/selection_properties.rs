use std::f64::consts::PI;

use proptest::prelude::*;
use spatial_bandwidth::{
    campbell_t, diggle_criterion, estimate_k, ppl_criterion, select_campbell, select_diggle,
    BandwidthGrid, EdgeCorrection, Grid, IntensityEstimator, KCorrection, KernelSpec,
    PointPattern, Window,
};

fn pattern_strategy(min: usize, max: usize) -> impl Strategy<Value = PointPattern> {
    prop::collection::vec((0.001f64..0.999, 0.001f64..0.999), min..=max).prop_map(|pts| {
        PointPattern::new(
            Window::unit(2),
            pts.into_iter().map(|(x, y)| vec![x, y]).collect(),
        )
        .unwrap()
    })
}

fn kernels() -> [KernelSpec; 2] {
    [KernelSpec::gaussian(2), KernelSpec::beta(1.0, 2).unwrap()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn campbell_t_vanishes_for_small_bandwidths(p in pattern_strategy(1, 40)) {
        for k in kernels() {
            let mut last = f64::INFINITY;
            for h in [1e-1, 1e-2, 1e-3, 1e-4] {
                let t = campbell_t(h, &p, &k, EdgeCorrection::None).unwrap();
                prop_assert!(t <= last * (1.0 + 1e-12));
                last = t;
            }
            prop_assert!(last < 1e-3);
        }
    }

    #[test]
    fn campbell_t_large_bandwidth_limits(p in pattern_strategy(1, 40)) {
        for k in kernels() {
            let t = campbell_t(1e3, &p, &k, EdgeCorrection::None).unwrap();
            prop_assert!(t > 1e6);
            for ec in [EdgeCorrection::Global, EdgeCorrection::Local] {
                let t = campbell_t(1e3, &p, &k, ec).unwrap();
                prop_assert!((t - 1.0).abs() < 1e-3, "{ec}: {t}");
            }
        }
    }

    #[test]
    fn campbell_t_is_continuous(p in pattern_strategy(1, 30), h in 0.02f64..1.0) {
        for k in kernels() {
            for ec in [EdgeCorrection::None, EdgeCorrection::Global, EdgeCorrection::Local] {
                let a = campbell_t(h, &p, &k, ec).unwrap();
                let b = campbell_t(h + 1e-6, &p, &k, ec).unwrap();
                prop_assert!((a - b).abs() <= 1e-3 * (1.0 + a), "{k:?} {ec}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn campbell_selection_ignores_point_order(p in pattern_strategy(2, 30), seed in any::<u64>()) {
        let mut pts: Vec<Vec<f64>> = p.points().map(|x| x.to_vec()).collect();
        let shift = (seed % pts.len() as u64) as usize;
        pts.rotate_left(shift);
        pts.reverse();
        let q = PointPattern::new(p.window().clone(), pts).unwrap();
        let grid: BandwidthGrid = "0.01:1.5:32".parse().unwrap();
        let k = KernelSpec::gaussian(2);
        let a = select_campbell(&p, &k, EdgeCorrection::Local, &grid).unwrap();
        let b = select_campbell(&q, &k, EdgeCorrection::Local, &grid).unwrap();
        prop_assert_eq!(a.selected, b.selected);
        for ((_, x), (_, y)) in a.curve.iter().zip(&b.curve) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn ppl_local_matches_leave_one_out_sum(p in pattern_strategy(2, 25), h in 0.03f64..0.8) {
        let q = Grid::uniform(p.window(), 16).unwrap();
        for k in [KernelSpec::gaussian(2), KernelSpec::beta(2.0, 2).unwrap()] {
            let est = IntensityEstimator::new(k, EdgeCorrection::Local);
            let mut oracle = -(p.len() as f64);
            for i in 0..p.len() {
                oracle += est.estimate_leave_one_out(i, h, &p).unwrap().ln();
            }
            let v = ppl_criterion(h, &p, &k, EdgeCorrection::Local, &q).unwrap();
            if oracle.is_finite() {
                prop_assert!((v - oracle).abs() <= 1e-10 * (1.0 + oracle.abs()), "{v} vs {oracle}");
            } else {
                prop_assert_eq!(v, f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn ppl_gaussian_is_finite(p in pattern_strategy(2, 25), h in 0.001f64..1.5) {
        let q = Grid::uniform(p.window(), 16).unwrap();
        for ec in [EdgeCorrection::None, EdgeCorrection::Global, EdgeCorrection::Local] {
            let v = ppl_criterion(h, &p, &KernelSpec::gaussian(2), ec, &q).unwrap();
            prop_assert!(v.is_finite());
        }
    }

    #[test]
    fn ppl_uncorrected_integral_is_sum_of_window_shares(p in pattern_strategy(2, 20), h in 0.02f64..1.0) {
        // Oracle: direct leave-one-out sums minus the kernel mass of each point inside W.
        let k = KernelSpec::gaussian(2);
        let est = IntensityEstimator::new(k, EdgeCorrection::None);
        let mut oracle = 0.0;
        for i in 0..p.len() {
            oracle += est.estimate_leave_one_out(i, h, &p).unwrap().ln();
            oracle -= k.integrate_over_window(p.point(i), h, p.window(), 1).unwrap();
        }
        let q = Grid::uniform(p.window(), 16).unwrap();
        let v = ppl_criterion(h, &p, &k, EdgeCorrection::None, &q).unwrap();
        prop_assert!((v - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()));
    }

    #[test]
    fn diggle_depends_only_on_distances(
        pts in prop::collection::vec((0.0f64..0.4, 0.0f64..0.4), 2..25),
        dx in 0.0f64..0.5,
        dy in 0.0f64..0.5,
    ) {
        // Translation inside the window keeps every pairwise distance.
        let w = Window::unit(2);
        let make = |ox: f64, oy: f64| {
            PointPattern::new(
                w.clone(),
                pts.iter().map(|(x, y)| vec![0.05 + x + ox, 0.05 + y + oy]).collect(),
            )
            .unwrap()
        };
        let (a, b) = (make(0.0, 0.0), make(dx, dy));
        let ka = estimate_k(&a, KCorrection::None).unwrap();
        let kb = estimate_k(&b, KCorrection::None).unwrap();
        for h in [0.01, 0.05, 0.1, 0.2] {
            let va = diggle_criterion(h, &ka, ka.intensity()).unwrap();
            let vb = diggle_criterion(h, &kb, kb.intensity()).unwrap();
            prop_assert!((va - vb).abs() <= 1e-9 * (1.0 + va.abs()));
        }
        // Translation weights depend on differences only, so they move with the pattern too.
        let grid: BandwidthGrid = "0.01:0.12:12".parse().unwrap();
        let sa = select_diggle(&a, &grid, None).unwrap();
        let sb = select_diggle(&b, &grid, None).unwrap();
        for ((_, x), (_, y)) in sa.curve.iter().zip(&sb.curve) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()) || (x.is_nan() && y.is_nan()));
        }
    }

    #[test]
    fn diggle_scales_with_the_pattern(pts in prop::collection::vec((0.01f64..0.99, 0.01f64..0.99), 2..20), s in 0.5f64..3.0) {
        // Scaling lengths by s: λ̂ → λ̂/s², K̂ → s² K̂, criterion(s h) = criterion(h) / s⁴.
        let a = PointPattern::new(Window::unit(2), pts.iter().map(|(x, y)| vec![*x, *y]).collect()).unwrap();
        let ws = Window::new(vec![0.0, 0.0], vec![s, s]).unwrap();
        let b = PointPattern::new(ws, pts.iter().map(|(x, y)| vec![s * x, s * y]).collect()).unwrap();
        let ka = estimate_k(&a, KCorrection::Translation).unwrap();
        let kb = estimate_k(&b, KCorrection::Translation).unwrap();
        for h in [0.02, 0.07, 0.2] {
            let va = diggle_criterion(h, &ka, ka.intensity()).unwrap();
            let vb = diggle_criterion(s * h, &kb, kb.intensity()).unwrap();
            prop_assert!((va - vb * s.powi(4)).abs() <= 1e-9 * (1.0 + va.abs()));
        }
    }
}

#[test]
fn campbell_singleton_curve() {
    let p = PointPattern::new(Window::unit(2), vec![vec![0.5, 0.5]]).unwrap();
    let k = KernelSpec::box_kernel(2);
    for h in [0.05, 0.2, 0.4] {
        let t = campbell_t(h, &p, &k, EdgeCorrection::None).unwrap();
        assert!((t - PI * h * h).abs() < 1e-14);
    }
}

#[test]
fn diggle_selects_interior_bandwidth_for_clusters() {
    // Two tight clusters far apart: the criterion should not run to the range limit.
    let mut pts = Vec::new();
    for i in 0..10 {
        let a = i as f64 * 0.628;
        pts.push(vec![0.25 + 0.01 * a.cos(), 0.25 + 0.01 * a.sin()]);
        pts.push(vec![0.75 + 0.01 * a.cos(), 0.7 + 0.01 * a.sin()]);
    }
    let p = PointPattern::new(Window::unit(2), pts).unwrap();
    let sel = select_diggle(&p, &BandwidthGrid::default(), None).unwrap();
    assert!(sel.selected < 0.1, "{}", sel.selected);
}
