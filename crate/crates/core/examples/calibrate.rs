//! Measures the inequality constants over the seeded family and prints them
//! next to the frozen registry.
//!
//! ```text
//! cargo run --release --example calibrate -- 512
//! ```

use fractrans::registry::{calibrate, CalibrationOptions, Registry};

fn main() -> fractrans::Result<()> {
    let mut o = CalibrationOptions::standard()?;
    if let Some(n) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        o.samples = n;
    }
    o.safety = 1.0;
    let fresh = calibrate(&o)?;
    let frozen = Registry::embedded();
    println!("beta   constant   fresh       registered");
    for (f, r) in fresh.weighted.iter().zip(&frozen.weighted) {
        for (name, a, b) in [
            ("c_l2", f.c_l2, r.c_l2),
            ("c8", f.c8, r.c8),
            ("c9", f.c9, r.c9),
            ("c2'", f.c2_prime, r.c2_prime),
            ("c5", f.c5, r.c5),
        ] {
            println!("{:<6} {:<10} {:<11.5} {:.5}", f.beta, name, a, b);
        }
    }
    println!("-      c1         {:<11.5} {:.5}", fresh.unweighted.c1, frozen.unweighted.c1);
    println!("-      c0         {:<11.5} {:.5}", fresh.unweighted.c0, frozen.unweighted.c0);
    Ok(())
}
