use bsl_core::harness::{
    read_csv, run_balance_sweep, run_ber_sweep, run_outage_sweep, run_training_sweep, write_csv, Curve, CurveRow,
    ExperimentConfig, Runner,
};
use bsl_core::theory::{ber_cg_optimal, ber_floor};
use bsl_core::{Error, SigmaPair};

fn cfg(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

// 4σ binomial radius, taken at the larger of the empirical and predicted rate.
fn within(row: &CurveRow, k: f64) -> bool {
    let radius = row
        .mc_radius
        .max(4.0 * (row.theory_ber * (1.0 - row.theory_ber) / row.trials as f64).sqrt());
    (row.mc_ber - row.theory_ber).abs() <= k * radius
}

#[test]
fn fixed_channel_matches_conditional_theory() {
    let c = cfg(r#"{
        "sweep": {"snr_db": {"points": [0, 10]}},
        "detectors": ["cg-optimal", "balanced", "psk-noise-aware"],
        "fixed_channel": {"h0_sq": 3, "h1_sq": 1},
        "trials": 40000, "seed": 11
    }"#);
    let curve = run_ber_sweep(&c).unwrap();
    assert_eq!(curve.rows.len(), 6);
    for row in &curve.rows {
        assert_eq!(row.trials, 40_000);
        assert_eq!(row.skipped, 0);
        assert!(within(row, 1.0), "{row:?}");
    }
    // At 10 dB the CG theory column is exactly the fixed-channel formula.
    let exact = ber_cg_optimal(&SigmaPair::new(31.0, 11.0).unwrap(), 40)
        .unwrap()
        .value();
    assert!((curve.get(10.0, "cg-optimal").unwrap().theory_ber - exact).abs() < 1e-15);
}

#[test]
fn near_noiseless_optimal_detector_is_reliable() {
    let c = cfg(r#"{
        "sweep": {"snr_db": {"points": [30]}},
        "detectors": ["cg-optimal"],
        "fixed_rcd": 0.5, "trials": 20000, "seed": 3
    }"#);
    let row = &run_ber_sweep(&c).unwrap().rows[0];
    assert!(row.mc_ber < 1e-3, "{row:?}");
    assert!(row.theory_ber < 1e-3);
}

#[test]
fn equal_variances_are_skipped_not_fatal() {
    let c = cfg(r#"{
        "sweep": {"snr_db": {"points": [10]}},
        "detectors": ["cg-optimal"],
        "fixed_channel": {"h0_sq": 2, "h1_sq": 2}, "trials": 100
    }"#);
    let row = &run_ber_sweep(&c).unwrap().rows[0];
    assert_eq!((row.trials, row.skipped), (0, 100));
}

#[test]
fn error_accounting_adds_up_in_estimated_mode() {
    let c = cfg(r#"{
        "sweep": {"snr_db": {"points": [10]}},
        "detectors": ["cg-suboptimal", "psk-asymptotic"],
        "sigma_source": {"estimated": {"data_blocks": 50, "training_blocks": 4}},
        "fixed_rcd": 0.5, "trials": 5000, "seed": 5
    }"#);
    for row in run_ber_sweep(&c).unwrap().rows {
        // 5000 bits round up to 100 whole frames of 50.
        assert_eq!(row.trials + row.skipped, 5000);
    }
}

#[test]
fn zero_training_blocks_is_ambiguous() {
    let c = cfg(r#"{
        "sweep": {"training_count": {"points": [0, 1]}},
        "detectors": ["cg-optimal"],
        "sigma_source": {"estimated": {"data_blocks": 10, "training_blocks": 1}},
        "trials": 100
    }"#);
    assert!(matches!(run_training_sweep(&c), Err(Error::Ambiguous { .. })));
}

#[test]
fn training_sweep_has_perfect_reference_rows() {
    let c = cfg(r#"{
        "sweep": {"training_count": {"points": [1, 4]}},
        "detectors": ["cg-suboptimal"],
        "sigma_source": {"estimated": {"data_blocks": 50, "training_blocks": 1}},
        "fixed_rcd": 0.5, "trials": 2000
    }"#);
    let curve = run_training_sweep(&c).unwrap();
    let labels: Vec<_> = curve.rows.iter().map(|r| r.detector.as_str()).collect();
    assert_eq!(
        labels,
        [
            "cg-suboptimal",
            "cg-suboptimal:perfect",
            "cg-suboptimal",
            "cg-suboptimal:perfect"
        ]
    );
}

#[test]
fn balance_rows_per_hypothesis() {
    let c = cfg(r#"{
        "sweep": {"snr_db": {"points": [10]}},
        "detectors": ["balanced"],
        "fixed_channel": {"h0_sq": 3, "h1_sq": 1}, "trials": 50000, "seed": 9
    }"#);
    let curve = run_balance_sweep(&c).unwrap();
    let h0 = curve.get(10.0, "balanced:h0").unwrap();
    let h1 = curve.get(10.0, "balanced:h1").unwrap();
    assert!(within(h0, 1.0) && within(h1, 1.0), "{h0:?} {h1:?}");
}

#[test]
fn outage_trivial_targets() {
    let q_sqrt_n = ber_floor(1.0, 1.0, 40).unwrap().value();
    let c = cfg(&format!(
        r#"{{"sweep": {{"target_ber": {{"points": [{q_sqrt_n:?}, 0.499]}}}}, "fixed_h_tr": 2, "trials": 20000,
            "scenario": {{"source_power": 100}}}}"#
    ));
    let curve = run_outage_sweep(&c).unwrap();
    for label in ["outage", "at"] {
        let rows: Vec<_> = curve.series(label).collect();
        let (lo, hi) = (rows[0], rows[1]);
        assert_eq!((lo.mc_ber, lo.theory_ber), (1.0, 1.0));
        assert!(hi.mc_ber < 1e-3 && hi.theory_ber < 1e-3, "{hi:?}");
    }
}

#[test]
fn outage_needs_fixed_htr() {
    let c = cfg(r#"{"sweep": {"target_ber": {"points": [0.1]}}}"#);
    assert!(matches!(run_outage_sweep(&c), Err(Error::Config(_))));
}

#[test]
fn thread_count_does_not_change_bytes() {
    let c = cfg(r#"{
        "sweep": {"snr_db": {"points": [0, 10, 20]}},
        "detectors": ["cg-optimal", "cg-suboptimal", "psk-noise-aware"],
        "fixed_rcd": 0.3, "trials": 9000, "seed": 77
    }"#);
    let one = Runner::new(1).unwrap().run_ber_sweep(&c).unwrap().to_csv_bytes();
    let four = Runner::new(4).unwrap().run_ber_sweep(&c).unwrap().to_csv_bytes();
    assert_eq!(one, four);
    let other_seed = ExperimentConfig { seed: 78, ..c };
    assert_ne!(
        one,
        Runner::new(2)
            .unwrap()
            .run_ber_sweep(&other_seed)
            .unwrap()
            .to_csv_bytes()
    );
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    write_csv(&Curve::default(), &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "x,detector,theory_ber,mc_ber,mc_radius,trials,skipped\n"
    );
    assert!(read_csv(&path).unwrap().rows.is_empty());

    let curve = Curve {
        rows: vec![
            CurveRow::from_counts(0.1, "balanced:h0", 1.0 / 3.0, 17, 1000, 2),
            CurveRow::from_counts(12.5, "outage", 2.0e-7, 0, 10, 0),
        ],
    };
    write_csv(&curve, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.rows.len(), 2);
    for (a, b) in curve.rows.iter().zip(&back.rows) {
        assert_eq!((&a.detector, a.trials, a.skipped), (&b.detector, b.trials, b.skipped));
        for (u, v) in [
            (a.x, b.x),
            (a.theory_ber, b.theory_ber),
            (a.mc_ber, b.mc_ber),
            (a.mc_radius, b.mc_radius),
        ] {
            assert!((u - v).abs() <= 1e-12 * u.abs().max(1e-300));
        }
    }
}

#[test]
fn write_errors_name_the_path() {
    let err = write_csv(&Curve::default(), std::path::Path::new("/nonexistent-dir/x.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
}
