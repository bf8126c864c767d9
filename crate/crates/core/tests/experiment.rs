use fractrans::diagnostics::{DiagnosticsRequest, ResidualStatus};
use fractrans::experiment::{execute, fmt_f64, series_csv, sweep, ExperimentConfig, ExperimentKind};
use fractrans::initial::InitialData;
use fractrans::registry::Registry;
use fractrans::solver::{run, SolverConfig};
use fractrans::GridSpec;
use proptest::prelude::*;

#[test]
fn linear_only_residuals_never_fail() {
    let grid = GridSpec::new(50.0, 512).unwrap();
    let mut cfg = SolverConfig::new(
        1.0,
        2.0,
        InitialData::Bump {
            amplitude: 0.5,
            radius: 3.0,
        },
    );
    cfg.linear_only = true;
    let out = run(&cfg, &grid, &DiagnosticsRequest::new(0.05, vec![0.5]), &Registry::embedded()).unwrap();
    let all: Vec<_> = out.residuals.iter().flatten().collect();
    assert!(!all.is_empty());
    for r in all {
        assert_ne!(r.status, ResidualStatus::Fail, "{r:?}");
    }
}

#[test]
fn one_cell_sweep_matches_simulate_blowup_report() {
    let text = r#"
kind = "blowup-sweep"
[grid]
half_length = 10.0
n_points = 256
[solver]
alpha = 1.0
t_end = 0.5
[solver.initial_data]
family = "gaussian"
amplitude = 1.0
sigma = 1.0
[sweep]
alphas = [1.0]
amplitudes = [1.0]
refine = false
"#;
    let cfg = ExperimentConfig::parse(text, &[]).unwrap();
    let grid = cfg.grid().unwrap();
    let rows = sweep(&cfg, &grid).unwrap();
    assert_eq!(rows.len(), 1);
    let s = cfg.solver.clone().unwrap();
    let (_, report) = fractrans::solver::integrate(&s, &grid, cfg.probe_interval(), Default::default(), |_| {}).unwrap();
    assert_eq!(rows[0].coarse.as_ref(), Some(&report));
    assert!(!rows[0].detected);
}

#[test]
fn failing_cell_is_recorded() {
    let text = r#"
kind = "blowup-sweep"
[grid]
half_length = 10.0
n_points = 128
[solver]
alpha = 1.0
t_end = 0.1
dt_policy = { kind = "fixed", dt = 0.05 }
[solver.initial_data]
family = "gaussian"
amplitude = 1.0
sigma = 1.0
[sweep]
alphas = [1.0, 2.0]
amplitudes = [1.0, 1e6]
refine = false
"#;
    let cfg = ExperimentConfig::parse(text, &[]).unwrap();
    let rows = sweep(&cfg, &cfg.grid().unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|r| r.amplitude == 1.0 && r.error.is_none()));
}

#[test]
fn summary_written_on_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Simulate);
    cfg.outdir = tmp.path().to_path_buf();
    cfg.grid.half_length = 10.0;
    cfg.grid.n_points = 128;
    let mut s = SolverConfig::new(
        1.0,
        0.5,
        InitialData::Gaussian {
            amplitude: 1e6,
            sigma: 1.0,
            center: 0.0,
        },
    );
    s.dt_policy = fractrans::solver::DtPolicy::Fixed { dt: 0.05 };
    cfg.solver = Some(s);
    let out = execute(&cfg, 1).unwrap();
    assert!(!out.summary.passed);
    assert_eq!(out.exit_code(), 1);
    assert!(out.dir.join("summary.json").exists());
    assert!(out.dir.join("registry.json").exists());
}

#[test]
fn csv_header_lists_residual_columns() {
    let grid = GridSpec::new(50.0, 512).unwrap();
    let cfg = SolverConfig::new(
        1.0,
        0.2,
        InitialData::Bump {
            amplitude: 0.05,
            radius: 2.0,
        },
    );
    let out = run(&cfg, &grid, &DiagnosticsRequest::new(0.1, vec![0.5]), &Registry::embedded()).unwrap();
    let csv = series_csv(&out.records, "abc", "simulate-abc");
    let header = csv.lines().nth(4).unwrap();
    for col in ["t", "sup_norm", "min_val", "l2w_0.5", "hhalfw_0.5", "h1w_0.5", "dissip_half_0.5", "residual_eql2_0.5", "residual_h3"] {
        assert!(header.split(',').any(|c| c == col), "missing {col} in {header}");
    }
    let width = header.split(',').count();
    assert!(csv.lines().skip(5).all(|l| l.split(',').count() == width));
}

proptest! {
    #[test]
    fn float_format_round_trips(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), bits);
    }

    #[test]
    fn overrides_round_trip(half in 0.5f64..500.0, seed in any::<u32>()) {
        let base = "kind = \"verify-operators\"\n";
        let c = ExperimentConfig::parse(base, &[format!("seed={seed}"), format!("grid.half_length={}", fmt_f64(half))]).unwrap();
        prop_assert_eq!(c.seed, seed as u64);
        prop_assert_eq!(c.grid.half_length, half);
    }
}
