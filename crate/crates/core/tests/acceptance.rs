//! One PASS/FAIL line per acceptance criterion. Runs as a plain binary
//! (`harness = false`); the process fails if any line fails.
//!
//! `FRACTRANS_ACCEPT_ONLY=name,name` restricts the run to matching lines.

use std::time::Instant;

use fractrans::initial::InitialData;
use fractrans::solver::{DtPolicy, Ladder, SolverConfig};
use fractrans::verify::*;
use fractrans::GridSpec;

type Item = (&'static str, fn() -> fractrans::Result<Check>);

fn grid() -> GridSpec {
    GridSpec::new(50.0, 1024).unwrap()
}

const BETAS: [f64; 3] = [0.25, 0.5, 0.75];

fn critical() -> fractrans::Result<CriticalRun> {
    let mut cfg = SolverConfig::new(
        1.0,
        20.0,
        InitialData::Bump {
            amplitude: 0.05,
            radius: 2.0,
        },
    );
    cfg.dt_policy = DtPolicy::Adaptive { cfl: 0.4, dt_max: 0.01 };
    critical_small_data(&grid(), &cfg, 0.5, 0.1)
}

fn relax_base() -> SolverConfig {
    SolverConfig::new(
        1.0,
        2.0,
        InitialData::Bump {
            amplitude: 0.5,
            radius: 3.0,
        },
    )
}

const ITEMS: &[Item] = &[
    ("operator identities", || Ok(Check::all("operator identities", &operator_identities(&grid(), 1, 50)?))),
    ("magic identity", || magic_suite(&grid(), 2, 50)),
    ("weight bound", || {
        Ok(Check::all("weight bound", &weight_bound_certificate(&BETAS, 50.0, 201)?))
    }),
    ("commutators", || Ok(Check::all("commutators", &commutator_suite(&grid(), &BETAS, 4, 50)?))),
    ("truncation scaling", || {
        let t = Instant::now();
        let mut c = truncation_suite(&GridSpec::new(200.0, 16_384)?, 0.5, &[4.0, 8.0, 16.0, 32.0])?;
        c.passed &= t.elapsed().as_secs_f64() <= 600.0;
        Ok(c)
    }),
    ("maximum principle", || Ok(trajectory_suite(&grid(), &max_principle_configs(), 0.05)?.max_principle)),
    ("critical small data", || Ok(critical()?.weighted)),
    ("unweighted decay", || Ok(critical()?.unweighted)),
    ("supercritical blow-up", || blowup_suite(&BlowupParams::standard()?)),
    ("relaxation", || {
        let g = grid();
        let b = relax_base();
        let eps = relaxation_suite(&g, &b, Ladder::Epsilon, &[1e-1, 1e-2, 1e-3, 0.0], 0.05)?;
        let eta = relaxation_suite(&g, &b, Ladder::Eta, &[0.5, 0.25, 0.125], 0.05)?;
        Ok(Check::all("relaxation", &[eps, eta]))
    }),
    ("cc pointwise", || Ok(trajectory_suite(&grid(), &max_principle_configs(), 0.05)?.cc_pointwise)),
    ("hedberg gn", || Ok(Check::all("hedberg gn", &hedberg_gn_suite(&grid(), &BETAS, 3, 20)?))),
    ("integrator order", || {
        let cfg = SolverConfig::new(
            1.0,
            1.0,
            InitialData::Gaussian {
                amplitude: 0.5,
                sigma: 1.0,
                center: 0.0,
            },
        );
        integrator_order(&GridSpec::new(10.0, 256)?, &cfg, [0.02, 0.01, 0.005])
    }),
];

/// Supplementary lines: not criteria themselves, printed for context.
const EXTRA: &[Item] = &[
    ("residual certification", || Ok(critical()?.residuals)),
    ("registry coverage", || registry_suite(&fractrans::registry::Registry::embedded(), &[7, 99], 512)),
    ("picard contraction", || {
        let mut c = relax_base();
        c.epsilon = 0.1;
        c.eta = 0.25;
        picard_suite(&grid(), &c, 8, 0.16)
    }),
];

fn main() {
    let only: Option<Vec<String>> = std::env::var("FRACTRANS_ACCEPT_ONLY")
        .ok()
        .map(|s| s.split(',').map(|p| p.trim().to_string()).collect());
    let wanted = |n: &str| only.as_ref().is_none_or(|o| o.iter().any(|p| n.contains(p.as_str())));
    let mut failed = 0;
    for (extra, (name, f)) in ITEMS.iter().map(|i| (false, i)).chain(EXTRA.iter().map(|i| (true, i))) {
        if !wanted(name) {
            continue;
        }
        let t = Instant::now();
        let line = match f() {
            Ok(mut c) => {
                c.name = name.to_string();
                if !c.passed && !extra {
                    failed += 1;
                }
                c.line()
            }
            Err(e) => {
                if !extra {
                    failed += 1;
                }
                format!("FAIL {name}: error {e}")
            }
        };
        let tag = if extra { "  (supplementary) " } else { "" };
        println!("{tag}{line} [{:.1}s]", t.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
