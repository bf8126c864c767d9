//! Energy functionals, inequality residuals and pointwise identity checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::field::Field;
use crate::registry::{classify_smallness, Hypothesis, Registry};
use crate::solver::{rhs, SolverConfig};
use crate::spectral::{
    abs_pow, derivative, derivative_energy, hilbert, interpolate, lambda_energy, lambda_power,
};
use crate::weights::{weighted_lp_norm, WeightSpec, RATIO_FLOOR};

/// Relative tolerance applied to every residual, scaled by the magnitude of
/// the terms in the inequality.
pub const RESIDUAL_REL_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRequest {
    pub probe_interval: f64,
    pub betas: Vec<f64>,
    /// Evaluate the pointwise cubic inequality at each probe (nonnegative
    /// data only).
    #[serde(default)]
    pub cc_slack: bool,
}

impl DiagnosticsRequest {
    pub fn new(probe_interval: f64, betas: Vec<f64>) -> Self {
        Self {
            probe_interval,
            betas,
            cc_slack: false,
        }
    }
}

/// Norms in `L²(w_β)`. Fields named `dissip_*` are squared norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorms {
    pub beta: f64,
    pub l2w: f64,
    pub h_half_w: f64,
    pub h1w: f64,
    /// `‖∂_x θ‖_{L²(w)}`
    pub dxw: f64,
    pub dissip_half: f64,
    pub dissip_1: f64,
    pub dissip_3half: f64,
    /// `∫ |θ Λθ| w`
    pub theta_lambda_w: f64,
}

/// Unweighted twins, plus the H³-level energies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnweightedNorms {
    pub l2: f64,
    pub h_half: f64,
    pub h1: f64,
    pub dissip_half: f64,
    pub dissip_1: f64,
    pub dissip_3half: f64,
    /// `‖∂_x³ θ‖²_2`
    pub d3_sq: f64,
    /// `‖Λ^{7/2} θ‖²_2`
    pub lambda7half_sq: f64,
    /// `‖∂_x⁴ θ‖²_2`
    pub d4_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub sup_norm: f64,
    pub min_val: f64,
    pub max_val: f64,
    pub grad_sup: f64,
    pub weighted: Vec<WeightedNorms>,
    pub unweighted: UnweightedNorms,
    pub cc_slack: Option<f64>,
    pub residuals: BTreeMap<String, f64>,
}

fn weighted_norms(theta: &Field, w: &WeightSpec) -> Result<WeightedNorms> {
    let half = lambda_power(theta, 0.5);
    let one = lambda_power(theta, 1.0);
    let three = lambda_power(theta, 1.5);
    let l2w = weighted_lp_norm(theta, 2.0, w)?;
    let h_half_w = weighted_lp_norm(&half, 2.0, w)?;
    let h1w = weighted_lp_norm(&one, 2.0, w)?;
    let dxw = weighted_lp_norm(&derivative(theta), 2.0, w)?;
    let p = weighted_lp_norm(&three, 2.0, w)?;
    let theta_lambda_w = weighted_lp_norm(&theta.mul(&one), 1.0, w)?;
    Ok(WeightedNorms {
        beta: w.beta(),
        l2w,
        h_half_w,
        h1w,
        dxw,
        dissip_half: h_half_w * h_half_w,
        dissip_1: h1w * h1w,
        dissip_3half: p * p,
        theta_lambda_w,
    })
}

fn unweighted_norms(theta: &Field) -> UnweightedNorms {
    let l2 = lambda_energy(theta, 0.0).sqrt();
    let dissip_half = lambda_energy(theta, 0.5);
    let dissip_1 = lambda_energy(theta, 1.0);
    UnweightedNorms {
        l2,
        h_half: dissip_half.sqrt(),
        h1: dissip_1.sqrt(),
        dissip_half,
        dissip_1,
        dissip_3half: lambda_energy(theta, 1.5),
        d3_sq: derivative_energy(theta, 3),
        lambda7half_sq: lambda_energy(theta, 3.5),
        d4_sq: derivative_energy(theta, 4),
    }
}

/// Every norm of the record for `theta` at time `t`.
pub fn record(theta: &Field, t: f64, weights: &[WeightSpec], cc: bool) -> Result<DiagnosticsRecord> {
    let weighted = weights
        .iter()
        .map(|w| weighted_norms(theta, w))
        .collect::<Result<_>>()?;
    let cc_slack = if cc {
        Some(cc_pointwise_check(theta)?.min_slack)
    } else {
        None
    };
    Ok(DiagnosticsRecord {
        t,
        sup_norm: theta.sup_norm(),
        min_val: theta.min(),
        max_val: theta.max(),
        grad_sup: derivative(theta).sup_norm(),
        weighted,
        unweighted: unweighted_norms(theta),
        cc_slack,
        residuals: BTreeMap::new(),
    })
}

// ---------------------------------------------------------------------------
// Instantaneous rates (exact time derivatives along the equation)

/// Squared weighted energies of a state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedState {
    /// `‖θ‖²_w`
    pub a: f64,
    /// `‖Λ^{1/2}θ‖²_w`
    pub b: f64,
    /// `‖∂_xθ‖²_w`
    pub f: f64,
    /// `‖Λθ‖²_w`
    pub g: f64,
    /// `‖Λ^{3/2}θ‖²_w`
    pub p: f64,
    pub theta_lambda: f64,
}

/// Time derivatives of `a`, `b`, `f` of [`WeightedState`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedRates {
    pub a: f64,
    pub b: f64,
    pub f: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UnweightedState {
    pub l2_sq: f64,
    pub half_sq: f64,
    pub lambda1_sq: f64,
    pub lambda3half_sq: f64,
    pub d3_sq: f64,
    pub lambda7half_sq: f64,
    pub d4_sq: f64,
}

/// Time derivatives of `‖θ‖²`, `‖Λ^{1/2}θ‖²`, `‖Λθ‖²` and
/// `‖θ‖² + ‖∂³θ‖²`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UnweightedRates {
    pub l2: f64,
    pub half: f64,
    pub lambda1: f64,
    pub h3: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rates {
    pub state_w: WeightedState,
    pub linear_w: WeightedRates,
    pub nonlinear_w: WeightedRates,
    pub state: UnweightedState,
    pub linear: UnweightedRates,
    pub nonlinear: UnweightedRates,
}

fn weighted_pairing(f: &Field, g: &Field, w: &WeightSpec) -> f64 {
    let h = f.grid().spacing();
    h * f
        .samples()
        .iter()
        .zip(g.samples())
        .zip(w.w_samples())
        .map(|((a, b), c)| a * b * c)
        .sum::<f64>()
}

/// `Σ |k|^{2s} Re(f̂ conj ĝ)`, scaled as an `L²` pairing over the box.
fn spectral_pairing(f: &Field, g: &Field, weight: impl Fn(f64) -> f64) -> f64 {
    let grid = f.grid();
    let n = grid.n_points() as f64;
    let s: f64 = f
        .spectrum()
        .iter()
        .zip(g.spectrum())
        .zip(grid.wavenumbers())
        .map(|((a, b), &k)| weight(k) * (a * b.conj()).re)
        .sum();
    2.0 * grid.half_length() * s / (n * n)
}

fn weighted_rates(theta: &Field, dt: &Field, w: &WeightSpec) -> WeightedRates {
    WeightedRates {
        a: 2.0 * weighted_pairing(theta, dt, w),
        b: 2.0 * weighted_pairing(&lambda_power(theta, 0.5), &lambda_power(dt, 0.5), w),
        f: 2.0 * weighted_pairing(&derivative(theta), &derivative(dt), w),
    }
}

fn unweighted_rates(theta: &Field, dt: &Field) -> UnweightedRates {
    let nyq = theta.grid().nyquist_index();
    let d3: f64 = {
        let grid = theta.grid();
        let n = grid.n_points() as f64;
        let s: f64 = theta
            .spectrum()
            .iter()
            .zip(dt.spectrum())
            .zip(grid.wavenumbers())
            .enumerate()
            .filter(|(m, _)| *m != nyq)
            .map(|(_, ((a, b), &k))| k.powi(6) * (a * b.conj()).re)
            .sum();
        2.0 * grid.half_length() * s / (n * n)
    };
    let l2 = 2.0 * spectral_pairing(theta, dt, |_| 1.0);
    UnweightedRates {
        l2,
        half: 2.0 * spectral_pairing(theta, dt, |k| abs_pow(k, 1.0)),
        lambda1: 2.0 * spectral_pairing(theta, dt, |k| k * k),
        h3: l2 + 2.0 * d3,
    }
}

/// Exact time derivatives of the tracked energies at `theta`, split into the
/// dissipative (linear) and transport (nonlinear) parts of the equation.
pub fn instantaneous_rates(theta: &Field, cfg: &SolverConfig, w: &WeightSpec) -> Result<Rates> {
    if theta.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let mut lin_cfg = cfg.clone();
    lin_cfg.linear_only = true;
    let lin = rhs(theta, &lin_cfg);
    let full = rhs(theta, cfg);
    let nl = full.sub(&lin);
    let nw = weighted_norms(theta, w)?;
    let un = unweighted_norms(theta);
    Ok(Rates {
        state_w: WeightedState {
            a: nw.l2w * nw.l2w,
            b: nw.dissip_half,
            f: nw.dxw * nw.dxw,
            g: nw.dissip_1,
            p: nw.dissip_3half,
            theta_lambda: nw.theta_lambda_w,
        },
        linear_w: weighted_rates(theta, &lin, w),
        nonlinear_w: weighted_rates(theta, &nl, w),
        state: UnweightedState {
            l2_sq: un.l2 * un.l2,
            half_sq: un.dissip_half,
            lambda1_sq: un.dissip_1,
            lambda3half_sq: un.dissip_3half,
            d3_sq: un.d3_sq,
            lambda7half_sq: un.lambda7half_sq,
            d4_sq: un.d4_sq,
        },
        linear: unweighted_rates(theta, &lin),
        nonlinear: unweighted_rates(theta, &nl),
    })
}

// ---------------------------------------------------------------------------
// Residuals

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    Eql2,
    Eqsob3,
    /// Weighted `H¹` level.
    Eqh1w,
    L2,
    H12,
    Sob,
    H3,
    CcPointwise,
    Magic,
    GronwallEnv,
}

impl InequalityId {
    pub fn name(&self) -> &'static str {
        match self {
            InequalityId::Eql2 => "eql2",
            InequalityId::Eqsob3 => "eqsob3",
            InequalityId::Eqh1w => "eqh1w",
            InequalityId::L2 => "l2",
            InequalityId::H12 => "h1_2",
            InequalityId::Sob => "sob",
            InequalityId::H3 => "h3",
            InequalityId::CcPointwise => "cc_pointwise",
            InequalityId::Magic => "magic",
            InequalityId::GronwallEnv => "gronwall_env",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualStatus {
    Pass,
    Fail,
    /// Outside the hypotheses (non-critical run or data above threshold).
    RecordOnly,
    /// Data within 10% of the smallness threshold.
    Inconclusive,
    /// Record spacing too coarse for the difference quotient.
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityResidual {
    pub id: InequalityId,
    pub beta: Option<f64>,
    /// Midpoint of the record pair.
    pub t: f64,
    /// LHS - RHS; `<= tolerance` means satisfied.
    pub value: f64,
    pub tolerance: f64,
    /// Estimated error of the difference quotient (0 when unavailable).
    pub fd_error: f64,
    pub status: ResidualStatus,
}

impl InequalityResidual {
    /// Column key, e.g. `eql2_0.5` or `h1_2`.
    pub fn key(&self) -> String {
        match self.beta {
            Some(b) => format!("{}_{}", self.id.name(), b),
            None => self.id.name().to_string(),
        }
    }
}

/// Run-level data every residual needs.
#[derive(Clone, Debug)]
pub struct ResidualContext<'a> {
    /// `‖θ₀‖_∞`
    pub m: f64,
    pub epsilon: f64,
    /// Contracts apply only to the critical equation `α = 1, ν = 1`.
    pub critical: bool,
    pub registry: &'a Registry,
}

impl<'a> ResidualContext<'a> {
    pub fn new(cfg: &SolverConfig, m: f64, registry: &'a Registry) -> Self {
        Self {
            m,
            epsilon: cfg.epsilon,
            critical: cfg.alpha == 1.0 && cfg.nu == 1.0,
            registry,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SobolevLevel {
    Half,
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnweightedLevel {
    L2,
    H12,
    Sob,
    H3,
}

struct Pair<'r> {
    a: &'r DiagnosticsRecord,
    b: &'r DiagnosticsRecord,
    dt: f64,
}

impl<'r> Pair<'r> {
    fn new(a: &'r DiagnosticsRecord, b: &'r DiagnosticsRecord) -> Result<Self> {
        let dt = b.t - a.t;
        if !(dt > 0.0) {
            return Err(Error::Degenerate(format!("records not increasing in t ({} then {})", a.t, b.t)));
        }
        Ok(Self { a, b, dt })
    }

    fn rate(&self, f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
        (f(self.b) - f(self.a)) / self.dt
    }

    fn mid(&self, f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
        0.5 * (f(self.a) + f(self.b))
    }

    fn t(&self) -> f64 {
        0.5 * (self.a.t + self.b.t)
    }
}

fn beta_index(r: &DiagnosticsRecord, beta: f64) -> Result<usize> {
    r.weighted
        .iter()
        .position(|w| (w.beta - beta).abs() < 1e-12)
        .ok_or_else(|| Error::Degenerate(format!("record carries no norms for beta = {beta}")))
}

fn finish(
    id: InequalityId,
    beta: Option<f64>,
    t: f64,
    terms: &[f64],
    hypothesis: Hypothesis,
    critical: bool,
) -> InequalityResidual {
    let value: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|v| v.abs()).sum();
    let tolerance = RESIDUAL_REL_TOL * scale;
    let status = if !critical || hypothesis == Hypothesis::Outside {
        ResidualStatus::RecordOnly
    } else if hypothesis == Hypothesis::Inconclusive {
        ResidualStatus::Inconclusive
    } else if value <= tolerance {
        ResidualStatus::Pass
    } else {
        ResidualStatus::Fail
    };
    InequalityResidual {
        id,
        beta,
        t,
        value,
        tolerance,
        fd_error: 0.0,
        status,
    }
}

/// `d/dt‖θ‖²_w + ‖Λ^{1/2}θ‖²_w - C(1+m)‖θ‖²_w - m∫|θΛθ|w`.
pub fn residual_l2(
    a: &DiagnosticsRecord,
    b: &DiagnosticsRecord,
    beta: f64,
    ctx: &ResidualContext,
) -> Result<InequalityResidual> {
    let p = Pair::new(a, b)?;
    let i = beta_index(a, beta)?;
    let c = constants(ctx, beta)?.c_l2;
    let m = ctx.m;
    let terms = [
        p.rate(|r| r.weighted[i].l2w.powi(2)),
        p.mid(|r| r.weighted[i].dissip_half),
        -c * (1.0 + m) * p.mid(|r| r.weighted[i].l2w.powi(2)),
        -m * p.mid(|r| r.weighted[i].theta_lambda_w),
    ];
    Ok(finish(InequalityId::Eql2, Some(beta), p.t(), &terms, Hypothesis::Within, ctx.critical))
}

fn constants<'a>(ctx: &'a ResidualContext, beta: f64) -> Result<&'a crate::registry::WeightedConstants> {
    ctx.registry
        .weighted(beta)
        .ok_or_else(|| Error::Degenerate(format!("registry has no constants for beta = {beta}")))
}

/// Weighted `H^{1/2}` (`Half`) or `H¹` (`One`) level inequality.
pub fn residual_sobolev(
    a: &DiagnosticsRecord,
    b: &DiagnosticsRecord,
    beta: f64,
    level: SobolevLevel,
    ctx: &ResidualContext,
) -> Result<InequalityResidual> {
    let p = Pair::new(a, b)?;
    let i = beta_index(a, beta)?;
    let k = constants(ctx, beta)?;
    let m = ctx.m;
    let a2 = |r: &DiagnosticsRecord| r.weighted[i].l2w.powi(2);
    match level {
        SobolevLevel::Half => {
            let v = |r: &DiagnosticsRecord| a2(r) + r.weighted[i].dissip_half;
            let terms = [
                p.rate(v),
                -(k.c8 * m - 1.0) * p.mid(|r| r.weighted[i].dissip_1),
                -k.c9 * p.mid(v),
            ];
            let hyp = classify_smallness(m, k.c8);
            Ok(finish(InequalityId::Eqsob3, Some(beta), p.t(), &terms, hyp, ctx.critical))
        }
        SobolevLevel::One => {
            let f2 = |r: &DiagnosticsRecord| r.weighted[i].dxw.powi(2);
            let terms = [
                0.5 * p.rate(f2),
                -(k.c2_prime * m - 1.0) * p.mid(|r| r.weighted[i].dissip_3half),
                -k.c5 * p.mid(|r| a2(r) + f2(r)),
            ];
            let hyp = classify_smallness(m, k.c2_prime);
            Ok(finish(InequalityId::Eqh1w, Some(beta), p.t(), &terms, hyp, ctx.critical))
        }
    }
}

/// Unweighted inequalities of the relaxation argument.
pub fn residual_unweighted(
    a: &DiagnosticsRecord,
    b: &DiagnosticsRecord,
    level: UnweightedLevel,
    ctx: &ResidualContext,
) -> Result<InequalityResidual> {
    let p = Pair::new(a, b)?;
    let m = ctx.m;
    let u = |f: fn(&UnweightedNorms) -> f64| move |r: &DiagnosticsRecord| f(&r.unweighted);
    let (id, terms, hyp) = match level {
        UnweightedLevel::L2 => (
            InequalityId::L2,
            vec![
                p.rate(u(|n| n.l2 * n.l2)),
                2.0 * p.mid(u(|n| n.dissip_half)),
                -2.0 * m * p.mid(u(|n| n.l2 * n.h1)),
            ],
            Hypothesis::Within,
        ),
        UnweightedLevel::H12 => (
            InequalityId::H12,
            vec![
                p.rate(u(|n| n.dissip_half)),
                2.0 * (1.0 - m) * p.mid(u(|n| n.dissip_1)),
            ],
            classify_smallness(m, 1.0),
        ),
        UnweightedLevel::Sob => {
            let c1 = ctx.registry.unweighted.c1;
            (
                InequalityId::Sob,
                vec![
                    p.rate(u(|n| n.dissip_1)),
                    2.0 * (1.0 - c1 * m) * p.mid(u(|n| n.dissip_3half)),
                ],
                classify_smallness(m, c1),
            )
        }
        UnweightedLevel::H3 => {
            let c0 = ctx.registry.unweighted.c0;
            let e = u(|n| n.l2 * n.l2 + n.d3_sq);
            (
                InequalityId::H3,
                vec![
                    p.rate(e),
                    -c0 * m * p.mid(e),
                    -2.0 * (c0 * m - 1.0) * p.mid(u(|n| n.lambda7half_sq)),
                    2.0 * ctx.epsilon * p.mid(u(|n| n.d4_sq)),
                ],
                classify_smallness(m, c0),
            )
        }
    };
    Ok(finish(id, None, p.t(), &terms, hyp, ctx.critical))
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    L2(f64),
    Half(f64),
    One(f64),
    Plain(UnweightedLevel),
}

impl Kind {
    fn eval(self, a: &DiagnosticsRecord, b: &DiagnosticsRecord, ctx: &ResidualContext) -> Result<InequalityResidual> {
        match self {
            Kind::L2(beta) => residual_l2(a, b, beta, ctx),
            Kind::Half(beta) => residual_sobolev(a, b, beta, SobolevLevel::Half, ctx),
            Kind::One(beta) => residual_sobolev(a, b, beta, SobolevLevel::One, ctx),
            Kind::Plain(level) => residual_unweighted(a, b, level, ctx),
        }
    }

    /// The quantity under the time derivative.
    fn tracked(self, r: &DiagnosticsRecord, i: usize) -> f64 {
        match self {
            Kind::L2(_) => r.weighted[i].l2w.powi(2),
            Kind::Half(_) => r.weighted[i].l2w.powi(2) + r.weighted[i].dissip_half,
            Kind::One(_) => r.weighted[i].dxw.powi(2),
            Kind::Plain(UnweightedLevel::L2) => r.unweighted.l2.powi(2),
            Kind::Plain(UnweightedLevel::H12) => r.unweighted.dissip_half,
            Kind::Plain(UnweightedLevel::Sob) => r.unweighted.dissip_1,
            Kind::Plain(UnweightedLevel::H3) => r.unweighted.l2.powi(2) + r.unweighted.d3_sq,
        }
    }
}

/// Largest relative change of a tracked quantity across one record pair.
pub const MAX_PAIR_CHANGE: f64 = 0.25;

/// Every residual for every adjacent record pair.
///
/// Each residual carries an estimate of its discretization error: the larger
/// of the third-difference bound `Δt²|V'''|/24` on the tracked quantity and a
/// Richardson estimate from the same residual on the surrounding triple-width
/// pair (one-sided double width at the ends). A residual whose verdict could
/// flip within that error, or whose tracked quantity moves by more than
/// [`MAX_PAIR_CHANGE`] across the pair, is marked `Unresolved`.
pub fn residual_series(
    records: &[DiagnosticsRecord],
    betas: &[f64],
    ctx: &ResidualContext,
) -> Result<Vec<Vec<InequalityResidual>>> {
    let mut kinds: Vec<(Kind, usize)> = Vec::new();
    if let Some(first) = records.first() {
        for &beta in betas {
            let i = beta_index(first, beta)?;
            kinds.extend([(Kind::L2(beta), i), (Kind::Half(beta), i), (Kind::One(beta), i)]);
        }
    }
    for level in [UnweightedLevel::L2, UnweightedLevel::H12, UnweightedLevel::Sob, UnweightedLevel::H3] {
        kinds.push((Kind::Plain(level), 0));
    }
    let n = records.len();
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for j in 0..n.saturating_sub(1) {
        let mut row = Vec::with_capacity(kinds.len());
        for &(kind, i) in &kinds {
            let mut r = kind.eval(&records[j], &records[j + 1], ctx)?;
            if n >= 4 {
                let q = |x: &DiagnosticsRecord| kind.tracked(x, i);
                let s = j.saturating_sub(1).min(n - 4);
                let v: Vec<f64> = records[s..s + 4].iter().map(q).collect();
                let dt = records[j + 1].t - records[j].t;
                let third = (v[3] - 3.0 * v[2] + 3.0 * v[1] - v[0]).abs() / (24.0 * dt);
                let rich = if j >= 1 && j + 2 < n {
                    (kind.eval(&records[j - 1], &records[j + 2], ctx)?.value - r.value).abs() / 8.0
                } else if j == 0 {
                    (kind.eval(&records[0], &records[2], ctx)?.value - r.value).abs() / 3.0
                } else {
                    (kind.eval(&records[j - 1], &records[j + 1], ctx)?.value - r.value).abs() / 3.0
                };
                r.fd_error = third.max(rich);
                let (a, b) = (q(&records[j]), q(&records[j + 1]));
                let jump = (b - a).abs() > MAX_PAIR_CHANGE * a.abs().max(b.abs());
                let undecided = jump || (r.value - r.tolerance).abs() <= r.fd_error;
                if undecided && matches!(r.status, ResidualStatus::Pass | ResidualStatus::Fail) {
                    r.status = ResidualStatus::Unresolved;
                }
            }
            row.push(r);
        }
        out.push(row);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Pointwise checks

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcSlack {
    /// `min_x 3θ²Λθ - Λ(θ³)`
    pub min_slack: f64,
    /// `‖θ‖²_∞ ‖Λθ‖_∞ + ‖Λ(θ³)‖_∞`
    pub scale: f64,
}

/// Negative parts below `-NEGATIVITY_FLOOR · ‖θ‖_∞` count as genuine.
pub const NEGATIVITY_FLOOR: f64 = 1e-6;

/// Slack of `Λ(θ³) <= 3θ²Λθ`, evaluated on the twice-refined grid where the
/// cube of a 2/3-dealiased field is represented exactly.
pub fn cc_pointwise_check(theta: &Field) -> Result<CcSlack> {
    let sup = theta.sup_norm();
    if theta.min() < -NEGATIVITY_FLOOR * sup.max(RATIO_FLOOR) {
        return Err(Error::NegativeField { min: theta.min() });
    }
    let fine = theta.grid().refined()?;
    let t = interpolate(theta, &fine)?;
    let lt = lambda_power(&t, 1.0);
    let cube = lambda_power(&t.map(|v| v * v * v), 1.0);
    let slack = t.zip_with(&lt, |a, b| 3.0 * a * a * b).sub(&cube);
    Ok(CcSlack {
        min_slack: slack.min(),
        scale: sup * sup * lt.sup_norm() + cube.sup_norm(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagicCheck {
    pub sup_error: f64,
    /// `‖f‖²_∞`
    pub scale: f64,
    /// False when `f` has content above `N/4` or a nonzero mean; the
    /// tolerance does not apply then.
    pub admissible: bool,
}

/// `sup |2H(f Hf) - (Hf)² + f²|`.
pub fn magic_identity_check(f: &Field) -> MagicCheck {
    let grid = f.grid();
    let spec = f.spectrum();
    let peak = spec.iter().map(|c| c.norm()).fold(0.0, f64::max).max(RATIO_FLOOR);
    let band = grid.n_points() as i64 / 4;
    let admissible = spec[0].norm() <= 1e-12 * peak
        && spec
            .iter()
            .enumerate()
            .all(|(m, c)| grid.mode_index(m).abs() < band || c.norm() <= 1e-12 * peak);
    let hf = hilbert(f);
    let lhs = hilbert(&f.mul(&hf)).scale(2.0);
    let rhs = hf.mul(&hf).sub(&f.mul(f));
    MagicCheck {
        sup_error: lhs.sup_distance(&rhs),
        scale: f.sup_norm().powi(2),
        admissible,
    }
}

/// Number of samples with `v(t) > v0 e^{rate t} (1 + 1e-4)`.
pub fn gronwall_envelope(series: &[(f64, f64)], rate: f64, v0: f64) -> Result<usize> {
    check_param("rate", rate, rate >= 0.0, "must be nonnegative")?;
    Ok(series
        .iter()
        .filter(|(t, v)| *v > v0 * (rate * t).exp() * (1.0 + 1e-4))
        .count())
}

/// Spectral content of `theta` above `|j| = N/3`, relative to the peak mode.
pub fn spectral_tail(theta: &Field) -> f64 {
    let grid = theta.grid();
    let cut = grid.n_points() as i64 / 3;
    let spec = theta.spectrum();
    let peak = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    spec.iter()
        .enumerate()
        .filter(|(m, _)| grid.mode_index(*m).abs() > cut - cut / 10)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max)
        / peak
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::initial::InitialData;

    fn grid() -> GridSpec {
        GridSpec::new(50.0, 512).unwrap()
    }

    #[test]
    fn zero_field_has_zero_norms_and_residuals() {
        let g = grid();
        let w = vec![WeightSpec::new(0.5, &g).unwrap()];
        let z = Field::zeros(&g);
        let a = record(&z, 0.0, &w, false).unwrap();
        let b = record(&z, 0.1, &w, false).unwrap();
        assert_eq!(a.weighted[0].l2w, 0.0);
        assert_eq!(a.unweighted.h1, 0.0);
        let reg = Registry::embedded();
        let cfg = SolverConfig::new(1.0, 1.0, InitialData::Constant { value: 0.0 });
        let ctx = ResidualContext::new(&cfg, 0.0, &reg);
        for row in residual_series(&[a, b], &[0.5], &ctx).unwrap() {
            for r in row {
                assert_eq!(r.value, 0.0, "{}", r.key());
            }
        }
    }

    #[test]
    fn single_mode_ratio() {
        let g = grid();
        let k = std::f64::consts::PI * 4.0 / 50.0;
        let f = Field::from_fn(&g, |x| (k * x).sin());
        let r = record(&f, 0.0, &[WeightSpec::unit(&g)], false).unwrap();
        assert!((r.weighted[0].h1w / r.weighted[0].l2w - k).abs() < 1e-8 * k);
        assert!((r.unweighted.h1 / r.unweighted.l2 - k).abs() < 1e-8 * k);
    }

    #[test]
    fn weight_ordering() {
        let g = grid();
        let f = Field::from_fn(&g, |x| (-x * x / 20.0).exp());
        let ws = vec![WeightSpec::new(0.25, &g).unwrap(), WeightSpec::new(0.75, &g).unwrap()];
        let r = record(&f, 0.0, &ws, false).unwrap();
        assert!(r.weighted[0].l2w >= r.weighted[1].l2w);
        assert!(r.weighted[0].h_half_w >= r.weighted[1].h_half_w);
        assert!(r.weighted[0].h1w >= r.weighted[1].h1w);
    }

    #[test]
    fn cc_constant_and_negative() {
        let g = grid();
        let c = cc_pointwise_check(&Field::constant(&g, 2.0)).unwrap();
        assert!(c.min_slack.abs() < 1e-12);
        assert!(cc_pointwise_check(&Field::from_fn(&g, |x| x.sin())).is_err());
    }

    #[test]
    fn magic_for_sine() {
        let g = grid();
        let k = std::f64::consts::PI * 3.0 / 50.0;
        let c = magic_identity_check(&Field::from_fn(&g, |x| (k * x).sin()));
        assert!(c.admissible);
        assert!(c.sup_error < 1e-12);
    }

    #[test]
    fn envelope_counts() {
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 1.0)).collect();
        assert_eq!(gronwall_envelope(&flat, 0.0, 1.0).unwrap(), 0);
        let grow: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, (i as f64).exp())).collect();
        assert_eq!(gronwall_envelope(&grow, 0.5, 1.0).unwrap(), 9);
    }

    #[test]
    fn rates_match_difference_quotients() {
        let g = GridSpec::new(20.0, 256).unwrap();
        let mut cfg = SolverConfig::new(1.0, 1.0, InitialData::Gaussian { amplitude: 0.4, sigma: 2.0, center: 0.0 });
        cfg.dt_policy = crate::solver::DtPolicy::Fixed { dt: 1e-4 };
        let w = WeightSpec::new(0.5, &g).unwrap();
        let theta = cfg.initial_field(&g).unwrap();
        let r = instantaneous_rates(&theta, &cfg, &w).unwrap();
        let s0 = crate::solver::TrajectoryState::initial(&cfg, &g).unwrap();
        let mut st = crate::solver::Stepper::new(&cfg, &g, 0.4).unwrap();
        let plus = st.advance(&s0, 1e-4).unwrap();
        let minus_cfg = cfg.clone();
        let mut back = crate::solver::Stepper::new(&minus_cfg, &g, 0.4).unwrap();
        let _ = &mut back;
        let a0 = weighted_lp_norm(&theta, 2.0, &w).unwrap().powi(2);
        let a1 = weighted_lp_norm(&plus.theta, 2.0, &w).unwrap().powi(2);
        let fd = (a1 - a0) / 1e-4;
        let exact = r.linear_w.a + r.nonlinear_w.a;
        assert!((fd - exact).abs() < 1e-3 * exact.abs(), "{fd} vs {exact}");
        let h3 = r.linear.h3 + r.nonlinear.h3;
        let e = |f: &Field| lambda_energy(f, 0.0) + derivative_energy(f, 3);
        let fd3 = (e(&plus.theta) - e(&theta)) / 1e-4;
        assert!((fd3 - h3).abs() < 1e-3 * h3.abs(), "{fd3} vs {h3}");
    }
}
