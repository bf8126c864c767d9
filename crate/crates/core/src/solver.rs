//! Time integration of `θ_t + θ_x Hθ + νΛ^α θ = ε θ_xx`.
//!
//! The linear symbol `-(ν|k|^α + εk²)` is diagonal and treated exactly with an
//! integrating factor; the transport term is advanced by classical RK4.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::diagnostics::{record, residual_series, DiagnosticsRecord, DiagnosticsRequest, InequalityResidual, ResidualContext};
use crate::initial::InitialData;
use crate::registry::Registry;
use crate::spectral::{abs_pow, heat_semigroup, mollify};
use crate::weights::WeightSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtPolicy {
    Fixed { dt: f64 },
    /// `dt = min(cfl h / max(‖Hθ‖_∞, 1e-8), dt_max)`.
    Adaptive { cfl: f64, dt_max: f64 },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Adaptive {
            cfl: 0.4,
            dt_max: 0.01,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub alpha: f64,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default)]
    pub epsilon: f64,
    /// Mollification radius applied to the initial datum; 0 disables it.
    #[serde(default)]
    pub eta: f64,
    pub t_end: f64,
    #[serde(default)]
    pub dt_policy: DtPolicy,
    #[serde(default = "yes")]
    pub dealias: bool,
    /// Drop the transport term (testing aid).
    #[serde(default)]
    pub linear_only: bool,
    pub initial_data: InitialData,
}

impl SolverConfig {
    pub fn new(alpha: f64, t_end: f64, initial_data: InitialData) -> Self {
        Self {
            alpha,
            nu: 1.0,
            epsilon: 0.0,
            eta: 0.0,
            t_end,
            dt_policy: DtPolicy::default(),
            dealias: true,
            linear_only: false,
            initial_data,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_param("alpha", self.alpha, self.alpha > 0.0 && self.alpha <= 2.0, "must lie in (0, 2]")?;
        check_param("nu", self.nu, self.nu >= 0.0, "must be nonnegative")?;
        check_param("epsilon", self.epsilon, self.epsilon >= 0.0, "must be nonnegative")?;
        check_param("eta", self.eta, self.eta >= 0.0, "must be nonnegative")?;
        check_param("t_end", self.t_end, self.t_end > 0.0, "must be positive")?;
        match self.dt_policy {
            DtPolicy::Fixed { dt } => check_param("dt", dt, dt > 0.0, "must be positive"),
            DtPolicy::Adaptive { cfl, dt_max } => {
                check_param("cfl", cfl, cfl > 0.0 && cfl <= 1.0, "must lie in (0, 1]")?;
                check_param("dt_max", dt_max, dt_max > 0.0, "must be positive")
            }
        }
    }

    /// Sampled and, when `eta > 0`, mollified initial datum.
    pub fn initial_field(&self, grid: &GridSpec) -> Result<Field> {
        self.validate()?;
        let raw = self.initial_data.sample(grid);
        if self.eta > 0.0 {
            mollify(&raw, self.eta)
        } else {
            Ok(raw)
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryState {
    pub t: f64,
    pub theta: Field,
    pub step_count: u64,
    pub dt_last: f64,
}

impl TrajectoryState {
    pub fn initial(cfg: &SolverConfig, grid: &GridSpec) -> Result<Self> {
        Ok(Self {
            t: 0.0,
            theta: cfg.initial_field(grid)?,
            step_count: 0,
            dt_last: 0.0,
        })
    }
}

/// Evaluates `-θ_x Hθ - νΛ^α θ + ε θ_xx` (transport product dealiased when
/// `cfg.dealias`).
pub fn rhs(theta: &Field, cfg: &SolverConfig) -> Field {
    let ops = Operators::new(cfg, theta.grid());
    let spec = theta.spectrum();
    let mut out: Vec<Complex64> = if cfg.linear_only {
        vec![Complex64::new(0.0, 0.0); spec.len()]
    } else {
        ops.transport(spec)
    };
    for ((o, s), l) in out.iter_mut().zip(spec).zip(&ops.linear) {
        *o += s * l;
    }
    Field::from_spectrum(theta.grid(), out)
}

/// One step with the configured policy. Reuse a [`Stepper`] when stepping
/// repeatedly.
pub fn step(state: &TrajectoryState, cfg: &SolverConfig) -> Result<TrajectoryState> {
    let theta0 = cfg.initial_field(state.theta.grid())?;
    let mut stepper = Stepper::new(cfg, state.theta.grid(), theta0.sup_norm())?;
    let dt = stepper.next_dt(state, f64::INFINITY);
    stepper.advance(state, dt)
}

struct Operators {
    grid: GridSpec,
    linear: Vec<f64>,
    ik: Vec<Complex64>,
    hil: Vec<Complex64>,
    keep: Vec<bool>,
}

impl Operators {
    fn new(cfg: &SolverConfig, grid: &GridSpec) -> Self {
        let nyq = grid.nyquist_index();
        let cut = grid.n_points() / 3;
        let ks = grid.wavenumbers();
        let zero = Complex64::new(0.0, 0.0);
        let linear = ks
            .iter()
            .map(|&k| -(cfg.nu * abs_pow(k, cfg.alpha) + cfg.epsilon * k * k))
            .collect();
        let ik = ks
            .iter()
            .enumerate()
            .map(|(m, &k)| if m == nyq { zero } else { Complex64::new(0.0, k) })
            .collect();
        let hil = ks
            .iter()
            .enumerate()
            .map(|(m, &k)| {
                if m == nyq || k == 0.0 {
                    zero
                } else {
                    Complex64::new(0.0, k.signum())
                }
            })
            .collect();
        let keep = (0..grid.n_points())
            .map(|m| !cfg.dealias || grid.mode_index(m).unsigned_abs() as usize <= cut)
            .collect();
        Self {
            grid: grid.clone(),
            linear,
            ik,
            hil,
            keep,
        }
    }

    /// `-(θ_x Hθ)^` from a spectrum.
    fn transport(&self, spec: &[Complex64]) -> Vec<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        let mut dx = Vec::with_capacity(spec.len());
        let mut hv = Vec::with_capacity(spec.len());
        for (m, s) in spec.iter().enumerate() {
            let s = if self.keep[m] { *s } else { zero };
            dx.push(s * self.ik[m]);
            hv.push(s * self.hil[m]);
        }
        let dx = self.grid.inverse_real(&dx);
        let hv = self.grid.inverse_real(&hv);
        let prod: Vec<f64> = dx.iter().zip(&hv).map(|(a, b)| -a * b).collect();
        let mut out = self.grid.forward_real(&prod);
        for (o, k) in out.iter_mut().zip(&self.keep) {
            if !k {
                *o = zero;
            }
        }
        out
    }

    fn hilbert_sup(&self, spec: &[Complex64]) -> f64 {
        let hv: Vec<Complex64> = spec.iter().zip(&self.hil).map(|(a, b)| a * b).collect();
        sup(&self.grid.inverse_real(&hv))
    }

    fn gradient_sup(&self, spec: &[Complex64]) -> f64 {
        let dx: Vec<Complex64> = spec.iter().zip(&self.ik).map(|(a, b)| a * b).collect();
        sup(&self.grid.inverse_real(&dx))
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Reusable integrating-factor RK4 stepper.
pub struct Stepper {
    ops: Operators,
    policy: DtPolicy,
    transport_on: bool,
    guard: f64,
    factors: Option<(f64, Vec<f64>, Vec<f64>)>,
}

impl Stepper {
    pub fn new(cfg: &SolverConfig, grid: &GridSpec, initial_sup: f64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            ops: Operators::new(cfg, grid),
            policy: cfg.dt_policy,
            transport_on: !cfg.linear_only,
            guard: 10.0 * initial_sup + 1.0,
            factors: None,
        })
    }

    /// Step size from the policy, clipped so that `t + dt <= t_stop`.
    pub fn next_dt(&self, state: &TrajectoryState, t_stop: f64) -> f64 {
        let dt = match self.policy {
            DtPolicy::Fixed { dt } => dt,
            DtPolicy::Adaptive { cfl, dt_max } => {
                let u = self.ops.hilbert_sup(state.theta.spectrum()).max(1e-8);
                (cfl * self.ops.grid.spacing() / u).min(dt_max)
            }
        };
        dt.min(t_stop - state.t)
    }

    pub fn gradient_sup(&self, theta: &Field) -> f64 {
        self.ops.gradient_sup(theta.spectrum())
    }

    fn factors(&mut self, dt: f64) -> (&[f64], &[f64]) {
        let stale = !matches!(&self.factors, Some((d, _, _)) if *d == dt);
        if stale {
            let e = self.ops.linear.iter().map(|l| (l * dt).exp()).collect();
            let e2 = self.ops.linear.iter().map(|l| (0.5 * l * dt).exp()).collect();
            self.factors = Some((dt, e, e2));
        }
        let (_, e, e2) = self.factors.as_ref().expect("factors set above");
        (e, e2)
    }

    fn nonlinear(&self, spec: &[Complex64], dt: f64) -> Vec<Complex64> {
        if self.transport_on {
            let mut v = self.ops.transport(spec);
            v.iter_mut().for_each(|z| *z *= dt);
            v
        } else {
            vec![Complex64::new(0.0, 0.0); spec.len()]
        }
    }

    /// Advances by exactly `dt`.
    pub fn advance(&mut self, state: &TrajectoryState, dt: f64) -> Result<TrajectoryState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Blowup {
                t: state.t,
                reason: format!("step size {dt:e} is not positive"),
            });
        }
        let u = state.theta.spectrum().to_vec();
        let (e, e2) = {
            let (e, e2) = self.factors(dt);
            (e.to_vec(), e2.to_vec())
        };
        let n = u.len();
        let k1 = self.nonlinear(&u, dt);
        let a: Vec<Complex64> = (0..n).map(|m| e2[m] * (u[m] + 0.5 * k1[m])).collect();
        let k2 = self.nonlinear(&a, dt);
        let b: Vec<Complex64> = (0..n).map(|m| e2[m] * u[m] + 0.5 * k2[m]).collect();
        let k3 = self.nonlinear(&b, dt);
        let c: Vec<Complex64> = (0..n).map(|m| e[m] * u[m] + e2[m] * k3[m]).collect();
        let k4 = self.nonlinear(&c, dt);
        let next: Vec<Complex64> = (0..n)
            .map(|m| {
                e[m] * u[m] + (e[m] * k1[m] + 2.0 * e2[m] * (k2[m] + k3[m]) + k4[m]) / 6.0
            })
            .collect();
        let theta = Field::from_spectrum(&self.ops.grid, next);
        let t = state.t + dt;
        if !theta.is_finite() {
            return Err(Error::Blowup {
                t,
                reason: "non-finite values".into(),
            });
        }
        let s = theta.sup_norm();
        if s > self.guard {
            return Err(Error::Blowup {
                t,
                reason: format!("sup norm {s:e} exceeds guard {:e}", self.guard),
            });
        }
        Ok(TrajectoryState {
            t,
            theta,
            step_count: state.step_count + 1,
            dt_last: dt,
        })
    }
}

/// Thresholds for the blow-up flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupCriteria {
    pub gradient_growth: f64,
    pub dt_floor: f64,
}

impl Default for BlowupCriteria {
    fn default() -> Self {
        Self {
            gradient_growth: 50.0,
            dt_floor: 1e-7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupIndicator {
    GradientSup,
    DtCollapse,
    H3Norm,
    NonFinite,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub detected: bool,
    pub t_detect: f64,
    /// Indicators that fired, in the order they fired.
    pub indicators: Vec<BlowupIndicator>,
    pub gradient_growth: f64,
    pub min_dt: f64,
    /// `(t, ‖θ_x‖_∞)` at every probe.
    pub history: Vec<(f64, f64)>,
    /// Set when the run stopped before `t_end`.
    pub stop_reason: Option<String>,
}

impl BlowupReport {
    fn fire(&mut self, ind: BlowupIndicator, t: f64) {
        if !self.indicators.contains(&ind) {
            self.indicators.push(ind);
            if self.indicators.len() == 1 {
                self.t_detect = t;
            }
        }
    }

    fn settle(&mut self, t: f64) {
        let grad = self.indicators.contains(&BlowupIndicator::GradientSup);
        let other = self
            .indicators
            .iter()
            .any(|i| matches!(i, BlowupIndicator::DtCollapse | BlowupIndicator::NonFinite));
        if grad && other && !self.detected {
            self.detected = true;
            self.t_detect = t;
        }
    }
}

/// Safety cap on steps per trajectory.
pub const MAX_STEPS: u64 = 20_000_000;

/// Integrates to `cfg.t_end`, calling `probe` at `t = 0` and at every multiple
/// of `probe_interval` (steps are clipped to land on probe times). Step errors
/// end the run and are reported, never propagated.
pub fn integrate(
    cfg: &SolverConfig,
    grid: &GridSpec,
    probe_interval: f64,
    criteria: BlowupCriteria,
    mut probe: impl FnMut(&TrajectoryState),
) -> Result<(TrajectoryState, BlowupReport)> {
    check_param(
        "probe_interval",
        probe_interval,
        probe_interval > 0.0,
        "must be positive",
    )?;
    let mut state = TrajectoryState::initial(cfg, grid)?;
    let mut stepper = Stepper::new(cfg, grid, state.theta.sup_norm())?;
    let g0 = stepper.gradient_sup(&state.theta);
    let mut report = BlowupReport {
        gradient_growth: 1.0,
        min_dt: f64::INFINITY,
        history: vec![(0.0, g0)],
        ..Default::default()
    };
    probe(&state);
    let n_probes = (cfg.t_end / probe_interval - 1e-9).ceil().max(1.0) as u64;
    let mut k = 1u64;
    while k <= n_probes {
        let t_probe = (k as f64 * probe_interval).min(cfg.t_end);
        let dt = stepper.next_dt(&state, t_probe);
        let landing = state.t + dt >= t_probe - 1e-12 * t_probe.max(1.0);
        let dt = if landing { t_probe - state.t } else { dt };
        if !landing {
            report.min_dt = report.min_dt.min(dt);
        }
        if dt < criteria.dt_floor && !landing {
            report.fire(BlowupIndicator::DtCollapse, state.t);
        }
        match stepper.advance(&state, dt) {
            Ok(mut next) => {
                if landing {
                    next.t = t_probe;
                }
                state = next;
            }
            Err(Error::Blowup { t, reason }) => {
                report.fire(BlowupIndicator::NonFinite, t);
                report.settle(t);
                report.stop_reason = Some(reason);
                return Ok((state, report));
            }
            Err(e) => return Err(e),
        }
        let g = stepper.gradient_sup(&state.theta);
        if g0 > 0.0 {
            report.gradient_growth = report.gradient_growth.max(g / g0);
            if g >= criteria.gradient_growth * g0 {
                report.fire(BlowupIndicator::GradientSup, state.t);
            }
        }
        report.settle(state.t);
        if report.detected {
            report.history.push((state.t, g));
            report.stop_reason = Some("blow-up indicators fired".into());
            return Ok((state, report));
        }
        if state.step_count >= MAX_STEPS {
            report.stop_reason = Some("step budget exhausted".into());
            return Ok((state, report));
        }
        if landing {
            report.history.push((state.t, g));
            probe(&state);
            k += 1;
        }
    }
    Ok((state, report))
}

/// Probe records, their residuals, and the blow-up report of one trajectory.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub final_state: TrajectoryState,
    pub records: Vec<DiagnosticsRecord>,
    /// One row per adjacent record pair.
    pub residuals: Vec<Vec<InequalityResidual>>,
    pub blowup: BlowupReport,
}

/// Integrates `cfg` and evaluates every diagnostic at each probe time.
pub fn run(cfg: &SolverConfig, grid: &GridSpec, req: &DiagnosticsRequest, registry: &Registry) -> Result<RunOutput> {
    let weights: Vec<WeightSpec> = req
        .betas
        .iter()
        .map(|&b| WeightSpec::new(b, grid))
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut failure = None;
    let (final_state, blowup) = integrate(cfg, grid, req.probe_interval, BlowupCriteria::default(), |s| {
        if failure.is_none() {
            match record(&s.theta, s.t, &weights, req.cc_slack) {
                Ok(r) => records.push(r),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let m = records.first().map_or(0.0, |r| r.sup_norm);
    let ctx = ResidualContext::new(cfg, m, registry);
    let residuals = residual_series(&records, &req.betas, &ctx)?;
    for (row, rec) in residuals.iter().zip(records.iter_mut().skip(1)) {
        for r in row {
            rec.residuals.insert(r.key(), r.value);
        }
    }
    Ok(RunOutput {
        final_state,
        records,
        residuals,
        blowup,
    })
}

/// Runs the blow-up experiment at `grid` and at its refinement; the combined
/// report is `detected` only if both resolutions detect.
pub fn detect_blowup(
    cfg: &SolverConfig,
    grid: &GridSpec,
    probe_interval: f64,
    criteria: BlowupCriteria,
) -> Result<(BlowupReport, BlowupReport)> {
    let (_, coarse) = integrate(cfg, grid, probe_interval, criteria, |_| {})?;
    let (_, fine) = integrate(cfg, &grid.refined()?, probe_interval, criteria, |_| {})?;
    Ok((coarse, fine))
}

/// Sup-distance between the `k`-th Picard iterate and the stepped solution at
/// `t_short`, for each `k` in `0..=iterations`.
///
/// Iterates live on `n_nodes + 1` equispaced time nodes; the Duhamel integral
/// uses the composite trapezoid rule with Richardson-corrected endpoints
/// (Simpson when the node count allows).
pub fn picard_deviations(
    cfg: &SolverConfig,
    grid: &GridSpec,
    iterations: usize,
    t_short: f64,
    n_nodes: usize,
) -> Result<Vec<f64>> {
    check_param("epsilon", cfg.epsilon, cfg.epsilon > 0.0, "Picard validation needs epsilon > 0")?;
    check_param("t_short", t_short, t_short > 0.0, "must be positive")?;
    if n_nodes < 2 || n_nodes % 2 != 0 {
        return Err(Error::Degenerate(format!(
            "Picard time grid needs an even node count >= 2, got {n_nodes}"
        )));
    }
    let gamma0 = cfg.initial_field(grid)?;
    let tau = t_short / n_nodes as f64;

    // Reference: stepped solution at t_short with substeps of tau / 8.
    let mut reference_cfg = cfg.clone();
    reference_cfg.t_end = t_short;
    reference_cfg.dt_policy = DtPolicy::Fixed { dt: tau / 8.0 };
    let mut state = TrajectoryState::initial(&reference_cfg, grid)?;
    let mut stepper = Stepper::new(&reference_cfg, grid, gamma0.sup_norm())?;
    for _ in 0..(8 * n_nodes) {
        state = stepper.advance(&state, tau / 8.0)?;
    }
    let reference = state.theta;

    // Nonlinear-plus-fractional forcing excluding the heat part.
    let mut forcing_cfg = cfg.clone();
    forcing_cfg.epsilon = 0.0;
    let forcing = |f: &Field| rhs(f, &forcing_cfg);

    let free: Vec<Field> = (0..=n_nodes)
        .map(|j| heat_semigroup(&gamma0, j as f64 * tau, cfg.epsilon))
        .collect::<Result<_>>()?;
    let mut iterate = free.clone();
    let mut out = vec![iterate[n_nodes].sup_distance(&reference)];
    for _ in 0..iterations {
        let g: Vec<Field> = iterate.iter().map(forcing).collect();
        let mut next = Vec::with_capacity(n_nodes + 1);
        next.push(free[0].clone());
        for j in 1..=n_nodes {
            // ∫_0^{t_j} e^{ε(t_j - s)Δ} g(s) ds on nodes 0..=j.
            let mut acc = Field::zeros(grid);
            let weights = composite_weights(j, tau);
            for (i, w) in weights.iter().enumerate() {
                let lag = (j - i) as f64 * tau;
                acc = acc.add(&heat_semigroup(&g[i], lag, cfg.epsilon)?.scale(*w));
            }
            next.push(free[j].add(&acc));
        }
        iterate = next;
        out.push(iterate[n_nodes].sup_distance(&reference));
    }
    Ok(out)
}

/// Quadrature weights on `j + 1` nodes with spacing `tau`: Simpson for even
/// `j`, Simpson plus a closing 3/8 panel for odd `j >= 3`, trapezoid for 1.
fn composite_weights(j: usize, tau: f64) -> Vec<f64> {
    let mut w = vec![0.0; j + 1];
    match j {
        0 => {}
        1 => {
            w[0] = tau / 2.0;
            w[1] = tau / 2.0;
        }
        _ => {
            let simpson_end = if j % 2 == 0 { j } else { j - 3 };
            for i in (0..simpson_end).step_by(2) {
                w[i] += tau / 3.0;
                w[i + 1] += 4.0 * tau / 3.0;
                w[i + 2] += tau / 3.0;
            }
            if j % 2 == 1 {
                let s = simpson_end;
                for (o, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                    w[s + o] += 3.0 * tau / 8.0 * c;
                }
            }
        }
    }
    w
}

/// Default Picard check: returns the deviation at iterate `iterations` and
/// errors if the sequence stops contracting.
pub fn picard_validate(cfg: &SolverConfig, grid: &GridSpec, iterations: usize, t_short: f64) -> Result<f64> {
    let devs = picard_deviations(cfg, grid, iterations, t_short, 16)?;
    for (i, pair) in devs.windows(2).enumerate() {
        // Stagnation at the quadrature floor is not divergence.
        if pair[1] > pair[0] * (1.0 + 1e-6) && pair[1] > 1e-10 {
            return Err(Error::NonContraction {
                iterate: i + 1,
                previous: pair[0],
                current: pair[1],
            });
        }
    }
    Ok(*devs.last().expect("at least the zeroth iterate"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ladder {
    Epsilon,
    Eta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationRow {
    pub coarse: f64,
    pub fine: f64,
    pub distance: f64,
}

/// Start of the time window used by the relaxation distances.
pub const RELAXATION_DELTA: f64 = 0.1;

/// `L²([δ, T] × box)` distances between consecutive rungs of a ladder.
///
/// Snapshots are taken every `probe_interval`; the time integral uses the
/// trapezoid rule on those snapshots.
pub fn relaxation_study(
    base: &SolverConfig,
    grid: &GridSpec,
    ladder: Ladder,
    values: &[f64],
    probe_interval: f64,
) -> Result<Vec<RelaxationRow>> {
    if values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Degenerate("ladder must be strictly decreasing".into()));
    }
    if values.len() < 2 {
        return Ok(Vec::new());
    }
    use rayon::prelude::*;
    let runs: Vec<Vec<(f64, Field)>> = values
        .par_iter()
        .map(|&v| {
            let mut cfg = base.clone();
            match ladder {
                Ladder::Epsilon => cfg.epsilon = v,
                Ladder::Eta => cfg.eta = v,
            }
            let mut snaps = Vec::new();
            let (_, report) = integrate(&cfg, grid, probe_interval, BlowupCriteria::default(), |s| {
                if s.t >= RELAXATION_DELTA - 1e-12 {
                    snaps.push((s.t, s.theta.clone()));
                }
            })?;
            if let Some(reason) = report.stop_reason {
                return Err(Error::Blowup { t: report.t_detect, reason });
            }
            Ok(snaps)
        })
        .collect::<Result<_>>()?;
    Ok(values
        .windows(2)
        .zip(runs.windows(2))
        .map(|(v, r)| RelaxationRow {
            coarse: v[0],
            fine: v[1],
            distance: space_time_distance(&r[0], &r[1]),
        })
        .collect())
}

fn space_time_distance(a: &[(f64, Field)], b: &[(f64, Field)]) -> f64 {
    let sq: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .map(|((t, f), (_, g))| (*t, f.sub(g).l2_norm().powi(2)))
        .collect();
    sq.windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{derivative, hilbert};

    fn grid() -> GridSpec {
        GridSpec::new(10.0, 256).unwrap()
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = grid();
        let cfg = SolverConfig::new(1.0, 1.0, InitialData::Constant { value: 0.7 });
        let s0 = TrajectoryState::initial(&cfg, &g).unwrap();
        let s1 = step(&s0, &cfg).unwrap();
        assert!(s1.theta.sup_distance(&s0.theta) < 1e-12);
        assert!(rhs(&s0.theta, &cfg).sup_norm() < 1e-12);
    }

    #[test]
    fn rhs_matches_pointwise_product() {
        let g = grid();
        let mut cfg = SolverConfig::new(1.0, 1.0, InitialData::Mode { amplitude: 1.0, mode: 3 });
        cfg.nu = 0.0;
        let f = cfg.initial_field(&g).unwrap();
        let expect = derivative(&f).mul(&hilbert(&f)).scale(-1.0);
        assert!(rhs(&f, &cfg).sup_distance(&expect) < 1e-12);
    }

    #[test]
    fn linear_mode_decays_exactly() {
        let g = grid();
        let mut cfg = SolverConfig::new(0.7, 1.0, InitialData::Mode { amplitude: 1.0, mode: 5 });
        cfg.epsilon = 0.01;
        cfg.linear_only = true;
        cfg.dt_policy = DtPolicy::Fixed { dt: 0.1 };
        let (end, _) = integrate(&cfg, &g, 0.25, BlowupCriteria::default(), |_| {}).unwrap();
        let k = std::f64::consts::PI * 5.0 / 10.0;
        let decay = (-(k.powf(0.7) + 0.01 * k * k)).exp();
        let exact = cfg.initial_field(&g).unwrap().scale(decay);
        assert!((end.t - 1.0).abs() < 1e-14);
        assert!(end.theta.sup_distance(&exact) < 1e-8 * decay);
    }

    #[test]
    fn picard_iterate_zero_is_heat_flow() {
        let g = grid();
        let mut cfg = SolverConfig::new(1.0, 1.0, InitialData::Constant { value: 0.0 });
        cfg.epsilon = 0.1;
        let devs = picard_deviations(&cfg, &g, 3, 0.1, 4).unwrap();
        assert!(devs.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn composite_weights_integrate_cubics() {
        for j in 1..9 {
            let w = composite_weights(j, 0.1);
            let q: f64 = w.iter().enumerate().map(|(i, w)| w * (0.1 * i as f64).powi(2)).sum();
            let exact = (0.1 * j as f64).powi(3) / 3.0;
            let tol = if j == 1 { 1e-3 } else { 1e-14 };
            assert!((q - exact).abs() < tol, "j = {j}");
        }
    }

    #[test]
    fn single_rung_ladder_is_empty() {
        let cfg = SolverConfig::new(1.0, 0.5, InitialData::Constant { value: 0.0 });
        let rows = relaxation_study(&cfg, &grid(), Ladder::Eta, &[0.5], 0.1).unwrap();
        assert!(rows.is_empty());
    }
}
