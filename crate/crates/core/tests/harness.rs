use irs_dps::harness::{
    format_significant, run_sweep, write_csv, ExperimentResult, ExperimentSpec, GeometryConfig,
    RunMetadata, SchemeName, SweepSpec, SweepVariable, CSV_HEADER,
};
use irs_dps::{Error, Weighting};
use proptest::prelude::*;

fn small_spec(variable: SweepVariable, values: Vec<f64>, trials: u64) -> ExperimentSpec {
    ExperimentSpec {
        sweep: SweepSpec { variable, values },
        trials,
        seed: 11,
        ..ExperimentSpec::default()
    }
}

fn csv_of(result: &ExperimentResult) -> String {
    let mut buf = Vec::new();
    write_csv(result, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn full_config_file_round_trips() {
    let text = r#"{
        "geometry": {
            "P_s_dBm": 27.5, "sigma2_dBm": -105, "d_sr_m": 25, "d_rd_m": 12.5,
            "alpha": 2.8, "beta0": 0.001, "lambda_m": 0.05,
            "phi_sr_rad": 1.2, "phi_rd_rad": 0.9
        },
        "K": 2, "M": 8, "N": 40,
        "weighting": "amplitude-weighted",
        "schemes": ["PROPOSED", "CPS"],
        "sweep": {"variable": "d_rd", "values": [5, 7.5, 10]},
        "trials": 1234, "seed": 99,
        "cudps_angle_sweep": [0.3, 0.6],
        "max_aperture_m": 2.5
    }"#;
    let spec = ExperimentSpec::from_json(text).unwrap();
    assert_eq!(spec.weighting, Weighting::AmplitudeWeighted);
    assert_eq!(spec.geometry.d_rd_m, 12.5);
    assert_eq!(spec.max_aperture_m, Some(2.5));
    let again = ExperimentSpec::from_json(&spec.to_json().unwrap()).unwrap();
    assert_eq!(spec, again);
}

fn arb_spec() -> impl Strategy<Value = ExperimentSpec> {
    (
        (
            0.0f64..40.0,
            -120.0f64..-80.0,
            1.0f64..100.0,
            1.0f64..100.0,
            2.0f64..4.0,
        ),
        (
            0.0f64..3.1,
            0.0f64..3.1,
            0.0f64..20.0,
            2usize..16,
            2usize..200,
        ),
        (
            1u64..100_000,
            any::<u64>(),
            prop::collection::vec(0.05f64..2.0, 1..6),
        ),
    )
        .prop_map(
            |((p, s2, dsr, drd, alpha), (phi_sr, phi_rd, k, m, n), (trials, seed, values))| {
                let mut values = values;
                values.sort_by(f64::total_cmp);
                values.dedup();
                ExperimentSpec {
                    geometry: GeometryConfig {
                        p_s_dbm: p,
                        sigma2_dbm: s2,
                        d_sr_m: dsr,
                        d_rd_m: drd,
                        alpha,
                        beta0: 1e-3,
                        lambda_m: 0.1,
                        phi_sr_rad: phi_sr,
                        phi_rd_rad: phi_rd,
                    },
                    k,
                    m,
                    n,
                    sweep: SweepSpec {
                        variable: SweepVariable::CosSum,
                        values,
                    },
                    trials,
                    seed,
                    ..ExperimentSpec::default()
                }
            },
        )
}

proptest! {
    #[test]
    fn serialize_parse_is_identity(spec in arb_spec()) {
        let parsed = ExperimentSpec::from_json(&spec.to_json().unwrap()).unwrap();
        prop_assert_eq!(parsed, spec);
    }

    #[test]
    fn csv_floats_parse_back_within_nine_digits(x in prop::num::f64::NORMAL) {
        let back: f64 = format_significant(x, 9).parse().unwrap();
        prop_assert!(((back - x) / x).abs() <= 5e-9);
    }
}

#[test]
fn empty_result_is_header_only() {
    let result = ExperimentResult {
        sweep_variable: SweepVariable::N,
        rows: vec![],
        metadata: RunMetadata {
            spec_hash: String::new(),
            codebook: None,
            timestamp_unix_s: 0,
            tool_version: String::new(),
        },
    };
    assert_eq!(csv_of(&result), format!("{CSV_HEADER}\n"));
}

#[test]
fn two_values_four_schemes_give_eight_rows() {
    let result = run_sweep(&small_spec(SweepVariable::N, vec![20.0, 10.0], 300)).unwrap();
    let text = csv_of(&result);
    let lines: Vec<&str> = text.split('\n').collect();
    assert_eq!(
        lines[0],
        "sweep_var,sweep_value,scheme,mean_rate_bps_hz,ci95_half,trials,seed"
    );
    assert_eq!(lines.len(), 10, "8 rows, header and trailing empty split");
    assert_eq!(lines[9], "");
    assert!(!text.contains('\r'));
    // sorted by value, then scheme
    let keys: Vec<(String, String)> = lines[1..9]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 7);
            assert_eq!(f[0], "N");
            assert_eq!(f[5], "300");
            assert_eq!(f[6], "11");
            (f[1].to_string(), f[2].to_string())
        })
        .collect();
    let want: Vec<(String, String)> = ["10", "20"]
        .iter()
        .flat_map(|v| {
            SchemeName::ALL
                .iter()
                .map(move |s| (v.to_string(), s.to_string()))
        })
        .collect();
    assert_eq!(keys, want);
}

#[test]
fn csv_means_round_trip() {
    let result = run_sweep(&small_spec(SweepVariable::DRd, vec![5.0, 12.5], 200)).unwrap();
    let text = csv_of(&result);
    for (line, row) in text.lines().skip(1).zip(&result.rows) {
        let f: Vec<&str> = line.split(',').collect();
        let mean: f64 = f[3].parse().unwrap();
        let ci: f64 = f[4].parse().unwrap();
        assert_eq!(f[1].parse::<f64>().unwrap(), row.sweep_value);
        assert!(((mean - row.estimate.mean) / row.estimate.mean).abs() <= 5e-9);
        assert!((ci - row.estimate.half_ci95).abs() <= 5e-9 * row.estimate.half_ci95);
    }
}

#[test]
fn identical_spec_gives_identical_rows() {
    let spec = small_spec(SweepVariable::N, vec![10.0, 30.0], 400);
    let a = run_sweep(&spec).unwrap();
    let b = run_sweep(&spec).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(csv_of(&a), csv_of(&b));
    assert_eq!(a.metadata.spec_hash, spec.hash());
    assert!(a.metadata.codebook.is_some());
}

#[test]
fn rate_grows_from_ten_to_twenty_elements() {
    let result = run_sweep(&small_spec(SweepVariable::N, vec![10.0, 20.0], 2000)).unwrap();
    for s in SchemeName::ALL {
        let r10 = result.row(10.0, s).unwrap().estimate.mean;
        let r20 = result.row(20.0, s).unwrap().estimate.mean;
        assert!(r20 > r10, "{s}: {r10} -> {r20}");
    }
}

#[test]
fn proposed_is_close_to_cps_at_fifty_elements() {
    let mut spec = small_spec(SweepVariable::N, vec![50.0], 100_000);
    spec.schemes = vec![SchemeName::Cps, SchemeName::Proposed];
    let result = run_sweep(&spec).unwrap();
    let cps = result.row(50.0, SchemeName::Cps).unwrap().estimate.mean;
    let prop = result
        .row(50.0, SchemeName::Proposed)
        .unwrap()
        .estimate
        .mean;
    assert!((cps - prop) / cps < 0.02, "{cps} vs {prop}");
}

#[test]
fn aligned_schemes_do_not_depend_on_angles() {
    let mut spec = small_spec(SweepVariable::CosSum, vec![-1.3, 0.2, 0.7, 1.9], 20_000);
    spec.schemes = vec![SchemeName::Proposed, SchemeName::MeUdps];
    let result = run_sweep(&spec).unwrap();
    for s in [SchemeName::Proposed, SchemeName::MeUdps] {
        let base = result.row(0.2, s).unwrap().estimate;
        for v in [-1.3, 0.7, 1.9] {
            let e = result.row(v, s).unwrap().estimate;
            assert!(
                (e.mean - base.mean).abs() < e.half_ci95 + base.half_ci95,
                "{s} at cos sum {v}: {} vs {}",
                e.mean,
                base.mean
            );
        }
    }
}

#[test]
fn degenerate_sweep_value_is_reported() {
    let mut spec = small_spec(SweepVariable::CosSum, vec![0.2, 0.0], 50);
    spec.schemes = vec![SchemeName::Proposed];
    match run_sweep(&spec) {
        Err(Error::Sweep {
            variable,
            value,
            source,
        }) => {
            assert_eq!(variable, "cos_sum");
            assert_eq!(value, 0.0);
            assert!(
                matches!(*source, Error::DegenerateGeometry { .. }),
                "{source}"
            );
        }
        other => panic!("expected a sweep error, got {other:?}"),
    }
}
