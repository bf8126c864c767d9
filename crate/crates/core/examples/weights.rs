//! Muckenhoupt weights `w_β = |x|^{-β}`: the pointwise bound on `Λw/w`, the
//! Hedberg and Gagliardo–Nirenberg ratios, and boundedness of the maximal
//! function on `L²(w)`.

use fractrans::verify::{hedberg_gn_suite, maximal_boundedness, weight_bound_certificate};
use fractrans::weights::{ap_constant, WeightSpec};
use fractrans::GridSpec;

fn main() -> fractrans::Result<()> {
    let betas = [0.25, 0.5, 0.75];
    let grid = GridSpec::new(50.0, 1024)?;

    for &b in &betas {
        let a2 = ap_constant(&WeightSpec::new(b, &grid)?, 2.0)?;
        println!("A2(w_{b}) = {a2:.6}");
    }
    for c in weight_bound_certificate(&betas, 50.0, 201)? {
        println!("{}", c.line());
    }
    for c in hedberg_gn_suite(&grid, &betas, 3, 20)? {
        println!("{}", c.line());
    }
    println!("{}", maximal_boundedness(&grid, 0.5, 5, 20)?.line());
    Ok(())
}
