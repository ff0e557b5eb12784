use adoption_core::curves::ThetaTwoComp;
use adoption_core::infer::constrained_lr;
use adoption_core::simgen::{design, gen_series_at, n0_for_depth, run_benchmark, ScenarioGrid};
use adoption_core::ErrorModel;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constrained_lr_is_nonnegative(depth in 0.0f64..0.35, sigma in 0.01f64..0.2, seed in 0u64..10_000) {
        let n0 = n0_for_depth(0.8, 0.25, 2.0, depth).unwrap();
        let theta = ThetaTwoComp::new(n0, 0.8, 2.0, 0.25).unwrap();
        let s = gen_series_at(&theta, &ErrorModel::GaussianIid { sigma }, &design(31, 20.0), seed, 1, 0).unwrap();
        if let Ok(r) = constrained_lr(&s) {
            prop_assert!(r.test.statistic >= 0.0);
            prop_assert!(r.sse_constrained >= r.sse_unconstrained);
            let p = r.test.p_value.unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}

fn small_grid() -> ScenarioGrid {
    ScenarioGrid {
        depths: vec![0.0, 0.1, 0.2, 0.3],
        sigmas: vec![0.05],
        rhos: vec![0.0, 0.3],
        n_points: vec![21],
        replicates: 30,
        shape_boot: 49,
        ..ScenarioGrid::default()
    }
}

#[test]
fn benchmark_independent_of_thread_count() {
    let grid = small_grid();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_benchmark(&grid)).unwrap();
    let b = four.install(|| run_benchmark(&grid)).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

#[test]
fn power_nondecreasing_in_depth() {
    let grid = ScenarioGrid { rhos: vec![0.0], n_points: vec![41], replicates: 200, ..small_grid() };
    let report = run_benchmark(&grid).unwrap();
    let rates: Vec<f64> = report.scenarios.iter().map(|s| s.reject_lr.estimate).collect();
    for w in rates.windows(2) {
        assert!(w[1] + 0.03 >= w[0], "{rates:?}");
    }
    let shape: Vec<f64> = report.scenarios.iter().map(|s| s.reject_shape.estimate).collect();
    for w in shape.windows(2) {
        assert!(w[1] + 0.03 >= w[0], "{shape:?}");
    }
}
