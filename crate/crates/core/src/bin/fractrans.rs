use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fractrans::experiment::{execute, is_config_error, resolve_jobs, ExperimentConfig, ExperimentKind};
use fractrans::Error;

#[derive(Parser)]
#[command(name = "fractrans", version, about = "Simulate and certify the fractional transport equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Simulate(Common),
    VerifyOperators(Common),
    VerifyWeights(Common),
    VerifyCommutators(Common),
    VerifyInequalities(Common),
    RelaxationStudy(Common),
    BlowupSweep(Common),
    CalibrateConstants(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; runs land in `<outdir>/<run-id>/`.
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// Concurrent sweep cells (FRACTRANS_JOBS wins when set).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `section.key=value`, applied after the file. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn load(kind: ExperimentKind, c: &Common) -> Result<ExperimentConfig, Error> {
    let mut overrides = c.set.clone();
    if let Some(s) = c.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(o) = &c.outdir {
        overrides.push(format!("outdir={:?}", o.display().to_string()));
    }
    let text = match &c.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut table: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    match table.get("kind").and_then(|k| k.as_str()) {
        Some(k) if k != kind.name() => {
            return Err(Error::Config(format!("config kind `{k}` does not match subcommand `{}`", kind.name())));
        }
        _ => {
            table.insert("kind".into(), toml::Value::String(kind.name().into()));
        }
    }
    let text = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
    ExperimentConfig::parse(&text, &overrides).map_err(|e| match (&c.config, e) {
        (Some(p), Error::Config(m)) => Error::Config(format!("{}: {m}", p.display())),
        (_, e) => e,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.command {
        Command::Simulate(c) => (ExperimentKind::Simulate, c),
        Command::VerifyOperators(c) => (ExperimentKind::VerifyOperators, c),
        Command::VerifyWeights(c) => (ExperimentKind::VerifyWeights, c),
        Command::VerifyCommutators(c) => (ExperimentKind::VerifyCommutators, c),
        Command::VerifyInequalities(c) => (ExperimentKind::VerifyInequalities, c),
        Command::RelaxationStudy(c) => (ExperimentKind::RelaxationStudy, c),
        Command::BlowupSweep(c) => (ExperimentKind::BlowupSweep, c),
        Command::CalibrateConstants(c) => (ExperimentKind::CalibrateConstants, c),
    };
    let cfg = match load(kind, common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    match execute(&cfg, resolve_jobs(common.jobs)) {
        Ok(out) => {
            for c in &out.summary.checks {
                println!("{}", c.line());
            }
            if let Some(e) = &out.summary.error {
                eprintln!("error: {e}");
            }
            println!("{}", out.dir.display());
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) if is_config_error(&e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
