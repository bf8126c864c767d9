//! Weighted commutator bounds, cross-checked by grid refinement, and the decay
//! rate of the truncated-Hilbert commutator with a slowly decaying field.

use fractrans::verify::{commutator_suite, truncation_suite};
use fractrans::GridSpec;

fn main() -> fractrans::Result<()> {
    let grid = GridSpec::new(50.0, 1024)?;
    for c in commutator_suite(&grid, &[0.25, 0.5, 0.75], 4, 50)? {
        println!("{}", c.line());
    }
    let wide = GridSpec::new(200.0, 16_384)?;
    println!("{}", truncation_suite(&wide, 0.5, &[4.0, 8.0, 16.0, 32.0])?.line());
    Ok(())
}
