use gabor_schauder::prelude::*;
use gabor_schauder::window::Piece;
use proptest::prelude::*;

fn piecewise(origin: i64, breaks: &[f64], coeffs: &[Vec<f64>], exps: &[f64]) -> WindowSpec {
    let pieces = breaks
        .windows(2)
        .zip(coeffs.iter().zip(exps))
        .map(|(b, (c, &e))| Piece { interval: [b[0], b[1]], poly: Poly::new(c.clone()), exponent: e })
        .collect();
    WindowSpec::Piecewise { origin, pieces }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampling_matches_pointwise_evaluation(
        origin in -2i64..2,
        cut in 1usize..7,
        c0 in prop::collection::vec(-2.0f64..2.0, 1..4),
        c1 in prop::collection::vec(-2.0f64..2.0, 1..4),
        e0 in 0.1f64..2.0,
        e1 in 0.1f64..2.0,
    ) {
        let grid = make_grid(1, 1, 1, 8, 8, 2).unwrap();
        let o = origin as f64;
        let breaks = [o, o + cut as f64 / 4.0, o + 2.0];
        let spec = piecewise(origin, &breaks, &[c0.clone(), c1.clone()], &[e0, e1]);
        let s = sample_window(&spec, &grid).unwrap();
        for (i, v) in s.samples.iter().enumerate() {
            let t = i as f64 / 8.0;
            let (c, e) = if o + t < breaks[1] { (&c0, e0) } else { (&c1, e1) };
            let p: f64 = c.iter().enumerate().map(|(k, a)| a * t.powi(k as i32)).sum();
            let want = p.abs().powf(e);
            prop_assert!((v.re - want).abs() <= 1e-12 * (1.0 + want));
            prop_assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn zak_is_unitary_and_invertible(
        samples in prop::collection::vec(-1.0f64..1.0, 32),
        origin in -3i64..3,
    ) {
        let grid = make_grid(1, 1, 1, 16, 16, 2).unwrap();
        let spec = WindowSpec::Sampled { samples_file: None, samples: Some(samples), mx: 16, k: 2, origin };
        let g = sample_window(&spec, &grid).unwrap();
        let z = zak_forward(&g, &grid).unwrap();
        prop_assert!((z.l2_norm() - g.l2_norm()).abs() <= 1e-12 * (1.0 + g.l2_norm()));
        let back = zak_inverse(&z).unwrap();
        for (a, b) in back.samples.iter().zip(&g.samples) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }
}

#[test]
fn critical_example_has_diagonal_weight_and_duals() {
    let spec = ExampleSpec::uniform(3, "x-1/3", 0.4);
    let windows = build_example_windows(&spec).unwrap();
    let grid = spec.grid(50, 48).unwrap();
    let sys = build_system(&windows, &grid).unwrap();
    let w = build_w(&sys.build_g().unwrap());
    assert!(w.is_diagonal());
    assert!(w.is_u_constant());
    let winv = invert_w(&w, &DualOptions::default()).unwrap();
    let gram = biorthogonality_gram(&sys, &winv, 2).unwrap();
    assert!(gram.max_deviation() < 1e-12);
}

#[test]
fn rectangular_sums_are_bounded_for_a2_weight() {
    let spec = ExampleSpec::uniform(1, "x-1/3", 0.5);
    let w = build_weight(&build_example_windows(&spec).unwrap(), &spec.grid(128, 8).unwrap()).unwrap();
    let values: Vec<f64> = (1..=6)
        .map(|n| operator_norm(&PartialSumOp::Rect { n1: n, n2: n }, &w, 4 * n, &NormMethod::DenseOracle).unwrap().value)
        .collect();
    assert!(values.iter().all(|v| (1.0..1.5).contains(v)), "{values:?}");
}

#[test]
fn report_round_trips_through_json() {
    let mut cfg = AnalysisConfig::from_example(ExampleSpec::uniform(2, "x-1/3", 0.5));
    cfg.grid.mx = 32;
    cfg.grid.ku = 32;
    cfg.a2.resolutions = vec![16, 32];
    cfg.norms.mx = 16;
    let report = run_analysis(&cfg).unwrap();
    let back: AnalysisReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(back.verdict, report.verdict);
    let cfg_back: AnalysisConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(cfg_back, cfg);
}
