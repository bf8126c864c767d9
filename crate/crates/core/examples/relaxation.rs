//! Convergence of the viscous (`ε → 0`) and mollified (`η → 0`) problems, and
//! contraction of the Picard iteration on a short interval.

use fractrans::initial::InitialData;
use fractrans::solver::{Ladder, SolverConfig};
use fractrans::verify::{picard_suite, relaxation_suite};
use fractrans::GridSpec;

fn main() -> fractrans::Result<()> {
    let grid = GridSpec::new(50.0, 1024)?;
    let base = SolverConfig::new(
        1.0,
        2.0,
        InitialData::Bump {
            amplitude: 0.5,
            radius: 3.0,
        },
    );
    println!("{}", relaxation_suite(&grid, &base, Ladder::Epsilon, &[1e-1, 1e-2, 1e-3, 0.0], 0.05)?.line());
    println!("{}", relaxation_suite(&grid, &base, Ladder::Eta, &[0.5, 0.25, 0.125], 0.05)?.line());

    let mut p = base.clone();
    p.epsilon = 0.1;
    p.eta = 0.25;
    println!("{}", picard_suite(&grid, &p, 8, 0.16)?.line());
    Ok(())
}
