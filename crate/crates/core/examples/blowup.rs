//! Gradient growth for supercritical dissipation. By default runs the
//! `(α, amplitude)` sweep from `configs/supercritical_sweep.toml` on a
//! moderate grid; pass `--full` for the full-resolution single run
//! (`N = 81920` and `2N`, several minutes).

use fractrans::experiment::{sweep, ExperimentConfig};
use fractrans::verify::{blowup_suite, BlowupParams};

fn main() -> fractrans::Result<()> {
    if std::env::args().any(|a| a == "--full") {
        println!("{}", blowup_suite(&BlowupParams::standard()?)?.line());
        return Ok(());
    }
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/supercritical_sweep.toml");
    let cfg = ExperimentConfig::load(path.as_ref(), &[])?;
    for r in sweep(&cfg, &cfg.grid()?)? {
        let g = |r: &Option<fractrans::solver::BlowupReport>| r.as_ref().map_or(f64::NAN, |r| r.gradient_growth);
        println!(
            "alpha {:<5} A {:<4} detected {:<5} growth x{:.1} (N) x{:.1} (2N){}",
            r.alpha,
            r.amplitude,
            r.detected,
            g(&r.coarse),
            g(&r.fine),
            r.error.map(|e| format!(" error: {e}")).unwrap_or_default()
        );
    }
    Ok(())
}
