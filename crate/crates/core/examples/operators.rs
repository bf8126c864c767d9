//! Spectral operator identities, the pointwise identity for `Λ(θ²)`, and the
//! temporal order of the integrator.
//!
//! ```text
//! cargo run --release --example operators
//! ```

use fractrans::initial::InitialData;
use fractrans::solver::SolverConfig;
use fractrans::verify::{integrator_order, magic_suite, operator_identities};
use fractrans::GridSpec;

fn main() -> fractrans::Result<()> {
    let grid = GridSpec::new(50.0, 1024)?;
    for c in operator_identities(&grid, 1, 50)? {
        println!("{}", c.line());
    }
    println!("{}", magic_suite(&grid, 2, 50)?.line());

    let small = GridSpec::new(10.0, 256)?;
    let cfg = SolverConfig::new(
        1.0,
        1.0,
        InitialData::Gaussian {
            amplitude: 0.5,
            sigma: 1.0,
            center: 0.0,
        },
    );
    println!("{}", integrator_order(&small, &cfg, [0.02, 0.01, 0.005])?.line());
    Ok(())
}
