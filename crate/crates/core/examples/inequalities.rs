//! The frozen constant registry against fresh calibrations, the maximum
//! principle and pointwise `Λ(θ³)` bound along trajectories, and the energy
//! budgets of the critical small-data run.

use fractrans::initial::InitialData;
use fractrans::registry::{classify_smallness, Registry};
use fractrans::solver::SolverConfig;
use fractrans::verify::{critical_small_data, max_principle_configs, registry_suite, trajectory_suite};
use fractrans::GridSpec;

fn main() -> fractrans::Result<()> {
    let reg = Registry::embedded();
    for c in &reg.weighted {
        println!(
            "beta {}: C8 {:.4} smallness {:?} at m = 0.05",
            c.beta,
            c.c8,
            classify_smallness(0.05, c.c8)
        );
    }
    println!("{}", registry_suite(&reg, &[7, 99], 512)?.line());

    let grid = GridSpec::new(50.0, 1024)?;
    let t = trajectory_suite(&grid, &max_principle_configs(), 0.05)?;
    println!("{}", t.max_principle.line());
    println!("{}", t.cc_pointwise.line());

    let cfg = SolverConfig::new(
        1.0,
        20.0,
        InitialData::Bump {
            amplitude: 0.05,
            radius: 2.0,
        },
    );
    let run = critical_small_data(&grid, &cfg, 0.5, 0.1)?;
    for c in [run.weighted, run.unweighted, run.residuals] {
        println!("{}", c.line());
    }
    Ok(())
}
