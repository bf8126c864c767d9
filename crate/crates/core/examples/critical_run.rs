//! Critical-dissipation run from small nonnegative data with every diagnostic
//! on, written as a run directory like `fractrans simulate` would.
//!
//! ```text
//! cargo run --release --example critical_run -- /tmp/runs
//! ```

use fractrans::experiment::{execute, ExperimentConfig};

fn main() -> fractrans::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/critical_small.toml");
    let mut cfg = ExperimentConfig::load(path.as_ref(), &[])?;
    if let Some(dir) = std::env::args().nth(1) {
        cfg.outdir = dir.into();
    }
    let out = execute(&cfg, 1)?;
    for c in &out.summary.checks {
        println!("{}", c.line());
    }
    println!("wrote {}", out.dir.display());
    std::process::exit(out.exit_code());
}
