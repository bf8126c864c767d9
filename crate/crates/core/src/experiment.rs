//! Experiment configuration, orchestration and persistence.
//!
//! A run writes into `<outdir>/<kind>-<hash8>/`: `summary.json` always,
//! `registry.json` always, plus `series.csv` (simulate) or `sweep.csv`
//! (blowup-sweep). The CSV layout is documented in `schema/series.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{gronwall_envelope, DiagnosticsRecord, DiagnosticsRequest, InequalityResidual};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::initial::InitialData;
use crate::registry::{calibrate, classify_smallness, CalibrationOptions, Hypothesis, Registry, REGISTRY_VERSION};
use crate::solver::{detect_blowup, integrate, run, BlowupCriteria, BlowupReport, DtPolicy, Ladder, SolverConfig};
use crate::verify::{self, Check};
use crate::weights::{ap_constant, WeightSpec};

pub const SERIES_SCHEMA: &str = "fractrans-series/1";
pub const SWEEP_SCHEMA: &str = "fractrans-sweep/1";
pub const SUMMARY_SCHEMA: &str = "fractrans-summary/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    VerifyOperators,
    VerifyWeights,
    VerifyCommutators,
    VerifyInequalities,
    RelaxationStudy,
    BlowupSweep,
    CalibrateConstants,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::VerifyOperators => "verify-operators",
            ExperimentKind::VerifyWeights => "verify-weights",
            ExperimentKind::VerifyCommutators => "verify-commutators",
            ExperimentKind::VerifyInequalities => "verify-inequalities",
            ExperimentKind::RelaxationStudy => "relaxation-study",
            ExperimentKind::BlowupSweep => "blowup-sweep",
            ExperimentKind::CalibrateConstants => "calibrate-constants",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_half_length")]
    pub half_length: f64,
    #[serde(default = "default_n_points")]
    pub n_points: usize,
}

fn default_half_length() -> f64 {
    50.0
}
fn default_n_points() -> usize {
    1024
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_length: default_half_length(),
            n_points: default_n_points(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Defaults to ten maximal steps.
    #[serde(default)]
    pub probe_interval: Option<f64>,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub cc_slack: bool,
}

fn default_betas() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            probe_interval: None,
            betas: default_betas(),
            cc_slack: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Repeat every cell at `2N` and require both to detect.
    #[serde(default = "yes")]
    pub refine: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationConfig {
    #[serde(default = "default_eps_ladder")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_eta_ladder")]
    pub eta: Vec<f64>,
    #[serde(default = "default_picard_iterations")]
    pub picard_iterations: usize,
    #[serde(default = "default_picard_time")]
    pub picard_time: f64,
}

fn default_eps_ladder() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 0.0]
}
fn default_eta_ladder() -> Vec<f64> {
    vec![0.5, 0.25, 0.125]
}
fn default_picard_iterations() -> usize {
    8
}
fn default_picard_time() -> f64 {
    0.16
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            epsilon: default_eps_ladder(),
            eta: default_eta_ladder(),
            picard_iterations: default_picard_iterations(),
            picard_time: default_picard_time(),
        }
    }
}

fn default_outdir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_outdir")]
    pub outdir: PathBuf,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub diagnostics: ProbeConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub relaxation: Option<RelaxationConfig>,
}

impl ExperimentConfig {
    /// Config with every default for `kind`; `simulate`, `relaxation-study`
    /// and `blowup-sweep` still need a `[solver]` section.
    pub fn defaults(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seed: 0,
            outdir: default_outdir(),
            grid: GridConfig::default(),
            solver: None,
            diagnostics: ProbeConfig::default(),
            sweep: None,
            relaxation: None,
        }
    }

    /// Parses TOML text, applies `key.path=value` overrides, validates.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let located: std::result::Result<ExperimentConfig, toml::de::Error> = toml::from_str(text);
        if let Err(e) = located {
            return Err(Error::Config(e.to_string().trim_end().to_string()));
        }
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("after overrides: {}", e.to_string().trim_end())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.half_length, self.grid.n_points)
            .map_err(|e| Error::Config(format!("[grid]: {e}")))
    }

    pub fn probe_interval(&self) -> f64 {
        self.diagnostics.probe_interval.unwrap_or_else(|| {
            let dt = match self.solver.as_ref().map(|s| s.dt_policy) {
                Some(DtPolicy::Fixed { dt }) => dt,
                Some(DtPolicy::Adaptive { dt_max, .. }) => dt_max,
                None => 0.01,
            };
            10.0 * dt
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if let Some(s) = &self.solver {
            s.validate().map_err(|e| Error::Config(format!("[solver]: {e}")))?;
        }
        if let Some(p) = self.diagnostics.probe_interval {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::Config(format!("[diagnostics]: probe_interval = {p} must be positive")));
            }
        }
        if let Some(b) = self.diagnostics.betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(Error::Config(format!("[diagnostics]: betas entry {b} must lie in (0, 1)")));
        }
        let needs_solver = matches!(
            self.kind,
            ExperimentKind::Simulate | ExperimentKind::RelaxationStudy | ExperimentKind::BlowupSweep
        );
        if needs_solver && self.solver.is_none() {
            return Err(Error::Config(format!("kind `{}` needs a [solver] section", self.kind.name())));
        }
        if self.kind == ExperimentKind::BlowupSweep {
            let s = self
                .sweep
                .as_ref()
                .ok_or_else(|| Error::Config("kind `blowup-sweep` needs a [sweep] section".into()))?;
            if s.alphas.is_empty() || s.amplitudes.is_empty() {
                return Err(Error::Config("[sweep]: alphas and amplitudes must be nonempty".into()));
            }
            if let Some(a) = s.alphas.iter().find(|a| !(**a > 0.0 && **a <= 2.0)) {
                return Err(Error::Config(format!("[sweep]: alphas entry {a} must lie in (0, 2]")));
            }
            if self.solver.as_ref().is_some_and(|c| c.initial_data.with_amplitude(1.0).is_none()) {
                return Err(Error::Config("[sweep]: solver.initial_data has no amplitude to sweep".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of the config, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.outdir = PathBuf::new();
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn run_id(&self) -> String {
        format!("{}-{}", self.kind.name(), &self.hash()[..8])
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("empty override key in `{spec}`")))?;
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

// ---------------------------------------------------------------------------
// Output

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Writes through a temporary sibling and renames into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn header(schema: &str, cfg_hash: &str, run_id: &str) -> String {
    format!("# schema = {schema}\n# config_hash = {cfg_hash}\n# registry_version = {REGISTRY_VERSION}\n# run_id = {run_id}\n")
}

/// `series.csv` contents for a list of records.
pub fn series_csv(records: &[DiagnosticsRecord], cfg_hash: &str, run_id: &str) -> String {
    let mut out = header(SERIES_SCHEMA, cfg_hash, run_id);
    let betas: Vec<f64> = records.first().map(|r| r.weighted.iter().map(|w| w.beta).collect()).unwrap_or_default();
    let residual_keys: Vec<String> = records
        .get(1)
        .map(|r| r.residuals.keys().cloned().collect())
        .unwrap_or_default();
    let mut cols: Vec<String> = ["t", "sup_norm", "min_val", "max_val", "grad_sup"].map(String::from).to_vec();
    for b in &betas {
        for name in [
            "l2w",
            "hhalfw",
            "h1w",
            "dxw",
            "dissip_half",
            "dissip_1",
            "dissip_3half",
            "theta_lambda_w",
        ] {
            cols.push(format!("{name}_{b}"));
        }
    }
    for name in [
        "l2",
        "hhalf",
        "h1",
        "dissip_half",
        "dissip_1",
        "dissip_3half",
        "d3_sq",
        "lambda7half_sq",
        "d4_sq",
        "cc_slack",
    ] {
        cols.push(name.to_string());
    }
    for k in &residual_keys {
        cols.push(format!("residual_{k}"));
    }
    out.push_str(&cols.join(","));
    out.push('\n');
    for r in records {
        let mut row: Vec<String> = [r.t, r.sup_norm, r.min_val, r.max_val, r.grad_sup].map(fmt_f64).to_vec();
        for w in &r.weighted {
            for v in [
                w.l2w,
                w.h_half_w,
                w.h1w,
                w.dxw,
                w.dissip_half,
                w.dissip_1,
                w.dissip_3half,
                w.theta_lambda_w,
            ] {
                row.push(fmt_f64(v));
            }
        }
        let u = &r.unweighted;
        for v in [
            u.l2,
            u.h_half,
            u.h1,
            u.dissip_half,
            u.dissip_1,
            u.dissip_3half,
            u.d3_sq,
            u.lambda7half_sq,
            u.d4_sq,
        ] {
            row.push(fmt_f64(v));
        }
        row.push(r.cc_slack.map(fmt_f64).unwrap_or_default());
        for k in &residual_keys {
            row.push(r.residuals.get(k).copied().map(fmt_f64).unwrap_or_default());
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub amplitude: f64,
    pub detected: bool,
    pub t_detect: Option<f64>,
    pub coarse: Option<BlowupReport>,
    pub fine: Option<BlowupReport>,
    pub error: Option<String>,
}

pub fn sweep_csv(rows: &[SweepRow], cfg_hash: &str, run_id: &str) -> String {
    let mut out = header(SWEEP_SCHEMA, cfg_hash, run_id);
    out.push_str("alpha,amplitude,detected,t_detect,growth_n,growth_2n,min_dt_n,min_dt_2n,final_grad_n,indicators_n,indicators_2n,error\n");
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let ind = |r: &Option<BlowupReport>| {
        r.as_ref()
            .map(|r| {
                r.indicators
                    .iter()
                    .map(|i| serde_json::to_value(i).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
                    .collect::<Vec<_>>()
                    .join("+")
            })
            .unwrap_or_default()
    };
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.alpha),
            fmt_f64(r.amplitude),
            r.detected,
            opt(r.t_detect),
            opt(r.coarse.as_ref().map(|c| c.gradient_growth)),
            opt(r.fine.as_ref().map(|c| c.gradient_growth)),
            opt(r.coarse.as_ref().map(|c| c.min_dt)),
            opt(r.fine.as_ref().map(|c| c.min_dt)),
            opt(r.coarse.as_ref().and_then(|c| c.history.last().map(|h| h.1))),
            ind(&r.coarse),
            ind(&r.fine),
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub run_id: String,
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub registry_version: u32,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub constants: BTreeMap<String, f64>,
    /// Results at the refined grid where an experiment runs at two
    /// resolutions.
    pub refinement: Option<serde_json::Value>,
    pub error: Option<String>,
    pub wall_clock_s: f64,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: RunSummary,
    pub dir: PathBuf,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed {
            0
        } else {
            1
        }
    }
}

#[derive(Default)]
struct Artifacts {
    checks: Vec<Check>,
    constants: BTreeMap<String, f64>,
    refinement: Option<serde_json::Value>,
    files: Vec<(&'static str, String)>,
    registry: Option<Registry>,
}

/// Worker count: `FRACTRANS_JOBS` wins over `jobs`, which wins over the
/// machine's parallelism.
pub fn resolve_jobs(jobs: Option<usize>) -> usize {
    std::env::var("FRACTRANS_JOBS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&j| j > 0)
        .or(jobs.filter(|&j| j > 0))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs the experiment and writes its outputs. Numerical failures end up in
/// the summary (`passed = false`); only I/O and config problems are `Err`.
pub fn execute(cfg: &ExperimentConfig, jobs: usize) -> Result<Outcome> {
    cfg.validate()?;
    let run_id = cfg.run_id();
    let hash = cfg.hash();
    let dir = cfg.outdir.join(&run_id);
    fs::create_dir_all(&dir)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build a pool of {jobs} workers: {e}")))?;
    let result = pool.install(|| dispatch(cfg, &hash, &run_id));
    let (art, error) = match result {
        Ok(a) => (a, None),
        Err(e) => (Artifacts::default(), Some(e.to_string())),
    };
    for (name, text) in &art.files {
        write_atomic(&dir.join(name), text.as_bytes())?;
    }
    let registry = art.registry.clone().unwrap_or_else(Registry::embedded);
    write_atomic(&dir.join("registry.json"), registry.to_json()?.as_bytes())?;
    let summary = RunSummary {
        schema: SUMMARY_SCHEMA.into(),
        run_id,
        kind: cfg.kind,
        config_hash: hash,
        registry_version: registry.version,
        config: cfg.clone(),
        passed: error.is_none() && art.checks.iter().all(|c| c.passed),
        checks: art.checks,
        constants: art.constants,
        refinement: art.refinement,
        error,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    write_atomic(&dir.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    Ok(Outcome { summary, dir })
}

fn dispatch(cfg: &ExperimentConfig, hash: &str, run_id: &str) -> Result<Artifacts> {
    let grid = cfg.grid()?;
    let seed = cfg.seed;
    let betas = &cfg.diagnostics.betas;
    let mut art = Artifacts::default();
    match cfg.kind {
        ExperimentKind::Simulate => simulate(cfg, &grid, hash, run_id, &mut art)?,
        ExperimentKind::VerifyOperators => {
            art.checks.extend(verify::operator_identities(&grid, seed, 50)?);
            art.checks.push(verify::magic_suite(&grid, seed.wrapping_add(1), 50)?);
            let small = GridSpec::new(10.0, 256)?;
            let smooth = SolverConfig::new(
                1.0,
                1.0,
                InitialData::Gaussian {
                    amplitude: 0.5,
                    sigma: 1.0,
                    center: 0.0,
                },
            );
            art.checks.push(verify::integrator_order(&small, &smooth, [0.02, 0.01, 0.005])?);
        }
        ExperimentKind::VerifyWeights => {
            art.checks.extend(verify::weight_bound_certificate(betas, grid.half_length(), 201)?);
            art.checks.extend(verify::hedberg_gn_suite(&grid, betas, seed, 20)?);
            for &b in betas {
                art.checks.push(verify::maximal_boundedness(&grid, b, seed, 20)?);
                let a0 = ap_constant(&WeightSpec::new(b, &grid)?, 2.0)?;
                let a1 = ap_constant(&WeightSpec::new(b, &grid.refined()?)?, 2.0)?;
                art.constants.insert(format!("a2_beta_{b}"), a0);
                art.checks.push(Check::at_most(
                    format!("A2 constant beta={b}"),
                    (a0 - a1).abs() / a0,
                    0.05,
                    format!("{a0:.6} (N) {a1:.6} (2N)"),
                ));
            }
            for c in &art.checks {
                if c.name.starts_with("Lambda w bound") || c.name.starts_with("Hedberg") || c.name.starts_with("GN") {
                    art.constants.insert(c.name.replace(' ', "_"), c.measured);
                }
            }
        }
        ExperimentKind::VerifyCommutators => {
            art.checks.extend(verify::commutator_suite(&grid, betas, seed, 50)?);
            let wide = GridSpec::new(200.0, 16_384)?;
            art.checks.push(verify::truncation_suite(&wide, 0.5, &[4.0, 8.0, 16.0, 32.0])?);
        }
        ExperimentKind::VerifyInequalities => {
            let reg = Registry::embedded();
            art.checks.push(verify::registry_suite(&reg, &[seed.wrapping_add(7), seed.wrapping_add(99)], 512)?);
            let t = verify::trajectory_suite(&grid, &verify::max_principle_configs(), 0.05)?;
            art.checks.push(t.max_principle);
            art.checks.push(t.cc_pointwise);
            let crit = cfg.solver.clone().unwrap_or_else(|| {
                SolverConfig::new(
                    1.0,
                    20.0,
                    InitialData::Bump {
                        amplitude: 0.05,
                        radius: 2.0,
                    },
                )
            });
            let beta = betas.get(betas.len() / 2).copied().unwrap_or(0.5);
            let c = verify::critical_small_data(&grid, &crit, beta, cfg.diagnostics.probe_interval.unwrap_or(0.02))?;
            art.checks.extend([c.weighted, c.unweighted, c.residuals]);
        }
        ExperimentKind::RelaxationStudy => {
            let base = cfg.solver.clone().expect("validated");
            let rc = cfg.relaxation.clone().unwrap_or_default();
            let probe = cfg.probe_interval();
            art.checks.push(verify::relaxation_suite(&grid, &base, Ladder::Epsilon, &rc.epsilon, probe)?);
            art.checks.push(verify::relaxation_suite(&grid, &base, Ladder::Eta, &rc.eta, probe)?);
            let mut pc = base.clone();
            if pc.epsilon == 0.0 {
                pc.epsilon = rc.epsilon.iter().cloned().fold(0.0, f64::max);
            }
            art.checks.push(verify::picard_suite(&grid, &pc, rc.picard_iterations, rc.picard_time)?);
        }
        ExperimentKind::BlowupSweep => {
            let rows = sweep(cfg, &grid)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            art.checks.push(Check::at_most(
                "sweep cells completed",
                failed as f64,
                0.0,
                format!("{} cells, {} detected", rows.len(), rows.iter().filter(|r| r.detected).count()),
            ));
            art.refinement = Some(serde_json::to_value(&rows)?);
            art.files.push(("sweep.csv", sweep_csv(&rows, hash, run_id)));
        }
        ExperimentKind::CalibrateConstants => {
            let mut o = CalibrationOptions::standard()?;
            if seed != 0 {
                o.seed = seed;
            }
            let reg = calibrate(&o)?;
            for c in &reg.weighted {
                for (k, v) in [
                    ("c_l2", c.c_l2),
                    ("c8", c.c8),
                    ("c9", c.c9),
                    ("c2_prime", c.c2_prime),
                    ("c5", c.c5),
                ] {
                    art.constants.insert(format!("{k}_beta_{}", c.beta), v);
                }
            }
            art.constants.insert("c1".into(), reg.unweighted.c1);
            art.constants.insert("c0".into(), reg.unweighted.c0);
            let round = Registry::from_json(&reg.to_json()?)?;
            art.checks.push(Check::at_most(
                "registry round-trip",
                if round == reg { 0.0 } else { 1.0 },
                0.0,
                format!("{} samples, seed {}", o.samples, o.seed),
            ));
            art.registry = Some(reg);
        }
    }
    Ok(art)
}

fn simulate(cfg: &ExperimentConfig, grid: &GridSpec, hash: &str, run_id: &str, art: &mut Artifacts) -> Result<()> {
    let solver = cfg.solver.as_ref().expect("validated");
    let reg = Registry::embedded();
    let mut req = DiagnosticsRequest::new(cfg.probe_interval(), cfg.diagnostics.betas.clone());
    let nonneg = solver.initial_field(grid)?.min() >= -1e-10;
    req.cc_slack = cfg.diagnostics.cc_slack && nonneg;
    let out = run(solver, grid, &req, &reg)?;
    let rec = &out.records;
    art.files.push(("series.csv", series_csv(rec, hash, run_id)));

    let up = rec.windows(2).map(|w| w[1].max_val - w[0].max_val).fold(0.0, f64::max);
    let down = rec.windows(2).map(|w| w[0].min_val - w[1].min_val).fold(0.0, f64::max);
    art.checks.push(Check::at_most(
        "max_principle",
        up.max(down),
        1e-6,
        format!("largest max increase {up:.2e}, largest min decrease {down:.2e}"),
    ));
    art.checks.push(Check::at_most(
        "completed",
        if out.blowup.stop_reason.is_some() { 1.0 } else { 0.0 },
        0.0,
        out.blowup.stop_reason.clone().unwrap_or_else(|| format!("t = {}", out.final_state.t)),
    ));
    let fails: Vec<&InequalityResidual> = out
        .residuals
        .iter()
        .flatten()
        .filter(|r| r.status == crate::diagnostics::ResidualStatus::Fail)
        .collect();
    let detail = fails
        .iter()
        .take(5)
        .map(|r| format!("{} at t = {}: residual {:e} > tolerance {:e}", r.key(), r.t, r.value, r.tolerance))
        .collect::<Vec<_>>()
        .join("; ");
    let count = |st| out.residuals.iter().flatten().filter(|r| r.status == st).count();
    let tally = format!(
        "{} pass, {} fail, {} unresolved",
        count(crate::diagnostics::ResidualStatus::Pass),
        fails.len(),
        count(crate::diagnostics::ResidualStatus::Unresolved)
    );
    let detail = if detail.is_empty() { tally } else { format!("{tally}; {detail}") };
    art.checks.push(Check::at_most("residuals", fails.len() as f64, 0.0, detail));
    if req.cc_slack {
        let worst = rec.iter().filter_map(|r| r.cc_slack).fold(f64::INFINITY, f64::min);
        art.checks.push(Check::at_least("cc_pointwise", worst, -1e-6, "unscaled minimum over probes"));
    }
    let m = rec.first().map_or(0.0, |r| r.sup_norm);
    let c0 = reg.unweighted.c0;
    if solver.alpha == 1.0 && solver.nu == 1.0 && classify_smallness(m, c0) == Hypothesis::Within {
        let series: Vec<(f64, f64)> = rec
            .iter()
            .map(|r| (r.t, r.unweighted.l2.powi(2) + r.unweighted.d3_sq))
            .collect();
        let v = gronwall_envelope(&series, c0 * m, series[0].1)?;
        art.checks.push(Check::at_most("gronwall_env h3", v as f64, 0.0, format!("rate C0 m = {:.4e}", c0 * m)));
    }
    art.constants.insert("theta0_sup".into(), m);
    art.constants.insert("envelope_rate_h3".into(), c0 * m);
    for c in &reg.weighted {
        art.constants.insert(format!("envelope_rate_l2_{}", c.beta), c.c_l2 * (1.0 + m));
        art.constants.insert(format!("envelope_rate_eqsob3_{}", c.beta), c.c9);
        art.constants.insert(format!("envelope_rate_eqh1w_{}", c.beta), 2.0 * c.c5);
    }
    art.constants.insert("gradient_growth".into(), out.blowup.gradient_growth);
    Ok(())
}

/// One row per `(α, amplitude)` cell; cells run concurrently and a failing
/// cell is recorded without stopping the others.
pub fn sweep(cfg: &ExperimentConfig, grid: &GridSpec) -> Result<Vec<SweepRow>> {
    let base = cfg.solver.as_ref().ok_or_else(|| Error::Config("missing [solver]".into()))?;
    let s = cfg.sweep.as_ref().ok_or_else(|| Error::Config("missing [sweep]".into()))?;
    let cells: Vec<(f64, f64)> = s
        .alphas
        .iter()
        .flat_map(|&a| s.amplitudes.iter().map(move |&m| (a, m)))
        .collect();
    let probe = cfg.probe_interval();
    Ok(cells
        .par_iter()
        .map(|&(alpha, amplitude)| {
            let mut c = base.clone();
            c.alpha = alpha;
            c.initial_data = base.initial_data.with_amplitude(amplitude).expect("validated");
            let res = if s.refine {
                detect_blowup(&c, grid, probe, BlowupCriteria::default()).map(|(a, b)| (a, Some(b)))
            } else {
                integrate(&c, grid, probe, BlowupCriteria::default(), |_| {}).map(|(_, a)| (a, None))
            };
            match res {
                Ok((coarse, fine)) => {
                    let detected = coarse.detected && fine.as_ref().is_none_or(|f| f.detected);
                    SweepRow {
                        alpha,
                        amplitude,
                        detected,
                        t_detect: detected.then_some(coarse.t_detect),
                        coarse: Some(coarse),
                        fine,
                        error: None,
                    }
                }
                Err(e) => SweepRow {
                    alpha,
                    amplitude,
                    detected: false,
                    t_detect: None,
                    coarse: None,
                    fine: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Whether an error is a configuration problem (exit code 2).
pub fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::InvalidParameter { .. } | Error::InvalidGrid(_))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "simulate"

[solver]
alpha = 1.0
t_end = 0.1

[solver.initial_data]
family = "gaussian"
amplitude = 0.1
sigma = 2.0
"#;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::parse(MINIMAL, &[]).unwrap();
        assert_eq!(c.kind, ExperimentKind::Simulate);
        assert_eq!(c.grid, GridConfig::default());
        assert!((c.probe_interval() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("t_end", "alfa = 1.0\nt_end");
        let e = ExperimentConfig::parse(&text, &[]).unwrap_err().to_string();
        assert!(e.contains("alfa"), "{e}");
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn bad_alpha_is_named() {
        let e = ExperimentConfig::parse(MINIMAL, &["solver.alpha=3".into()]).unwrap_err();
        assert!(is_config_error(&e));
        assert!(e.to_string().contains("alpha"), "{e}");
    }

    #[test]
    fn override_changes_hash() {
        let a = ExperimentConfig::parse(MINIMAL, &[]).unwrap();
        let b = ExperimentConfig::parse(MINIMAL, &["solver.t_end=0.2".into()]).unwrap();
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.outdir = PathBuf::from("/elsewhere");
        assert_eq!(a.hash(), c.hash());
        assert!(a.run_id().starts_with("simulate-"));
    }

    #[test]
    fn empty_sweep_rejected() {
        let text = MINIMAL.replace("kind = \"simulate\"", "kind = \"blowup-sweep\"") + "\n[sweep]\nalphas = []\namplitudes = [1.0]\n";
        assert!(is_config_error(&ExperimentConfig::parse(&text, &[]).unwrap_err()));
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, 5e-324] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn jobs_env_wins() {
        assert_eq!(resolve_jobs(Some(3)).max(1), resolve_jobs(Some(3)));
    }
}
