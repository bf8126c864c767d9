//! Verification suites. Each returns named pass/fail checks with the measured
//! value and the threshold it was held to.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commutators::{
    commutator_full, commutator_half, half_commutator_admissible, lambda_weight_bound, operator_ratio,
    truncation_commutator_scaling, LambdaQuadrature, CUTOFF,
};
use crate::diagnostics::{cc_pointwise_check, magic_identity_check, DiagnosticsRecord, DiagnosticsRequest, ResidualStatus};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::initial::InitialData;
use crate::registry::{calibrate, CalibrationOptions, Registry};
use crate::solver::{
    detect_blowup, integrate, picard_validate, relaxation_study, run, BlowupCriteria, DtPolicy, Ladder, SolverConfig,
};
use crate::spectral::{derivative, hilbert, lambda_power};
use crate::suite::{band_limited, bump_sum, rng, BumpSumOptions, GaussianSum};
use crate::weights::{gn_check, hedberg_check, maximal_function, weighted_lp_norm, GnInequality, WeightSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail: detail.into(),
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: measured >= threshold,
            measured,
            threshold,
            detail: detail.into(),
        }
    }

    /// Folds several checks into one line that passes only if all do.
    pub fn all(name: impl Into<String>, parts: &[Check]) -> Self {
        let failed: Vec<&str> = parts.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        let detail = if failed.is_empty() {
            parts
                .iter()
                .map(|c| format!("{} {:.3e}", c.name, c.measured))
                .collect::<Vec<_>>()
                .join("; ")
        } else {
            format!("failed: {}", failed.join(", "))
        };
        Self {
            name: name.into(),
            passed: failed.is_empty(),
            measured: parts.iter().filter(|c| !c.passed).count() as f64,
            threshold: 0.0,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: measured {:.6e}, threshold {:.6e}; {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
    }
}

fn max_rel(a: &Field, b: &Field, scale: f64) -> f64 {
    a.sup_distance(b) / scale.max(f64::MIN_POSITIVE)
}

fn drift(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------
// Operators

/// `∂_xH = -Λ`, `HΛ = ∂_x`, `‖Hf‖ = ‖f‖` and `H² = -I` on random mean-zero
/// band-limited fields.
pub fn operator_identities(grid: &GridSpec, seed: u64, count: usize) -> Result<Vec<Check>> {
    let mut r = rng(seed);
    let modes = grid.n_points() / 8;
    let (mut e1, mut e2, mut e3, mut e4) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..count {
        let f = band_limited(grid, &mut r, modes);
        let hf = hilbert(&f);
        let lf = lambda_power(&f, 1.0);
        let df = derivative(&f);
        e1 = e1.max(max_rel(&derivative(&hf).scale(-1.0), &lf, lf.sup_norm()));
        e2 = e2.max(max_rel(&hilbert(&lf), &df, df.sup_norm()));
        e3 = e3.max(drift(hf.l2_norm(), f.l2_norm()));
        e4 = e4.max(max_rel(&hilbert(&hf).scale(-1.0), &f, f.sup_norm()));
    }
    let d = format!("{count} fields, modes 1..={modes}, N = {}", grid.n_points());
    Ok(vec![
        Check::at_most("dxH = -Lambda", e1, 1e-10, d.clone()),
        Check::at_most("H Lambda = dx", e2, 1e-10, d.clone()),
        Check::at_most("Hilbert isometry", e3, 1e-10, d.clone()),
        Check::at_most("H^2 = -I", e4, 1e-10, d),
    ])
}

/// `2H(fHf) = (Hf)² - f²` on fields band-limited below `N/4`.
pub fn magic_suite(grid: &GridSpec, seed: u64, count: usize) -> Result<Check> {
    let mut r = rng(seed);
    let modes = grid.n_points() / 4 - 1;
    let mut worst = 0.0f64;
    for _ in 0..count {
        let f = band_limited(grid, &mut r, modes);
        let c = magic_identity_check(&f);
        if !c.admissible {
            return Err(Error::Degenerate("suite field is not band-limited".into()));
        }
        worst = worst.max(c.sup_error / c.scale);
    }
    Ok(Check::at_most(
        "magic identity",
        worst,
        1e-8,
        format!("{count} fields, modes 1..={modes}, scaled by sup^2"),
    ))
}

/// Temporal order of the integrator from three step sizes against a
/// reference at an eighth of the smallest.
pub fn integrator_order(grid: &GridSpec, cfg: &SolverConfig, steps: [f64; 3]) -> Result<Check> {
    let solve = |dt: f64| -> Result<Field> {
        let mut c = cfg.clone();
        c.dt_policy = DtPolicy::Fixed { dt };
        let (s, rep) = integrate(&c, grid, c.t_end, BlowupCriteria::default(), |_| {})?;
        if let Some(reason) = rep.stop_reason {
            return Err(Error::Blowup { t: s.t, reason });
        }
        Ok(s.theta)
    };
    let reference = solve(steps[2] / 8.0)?;
    let errs: Vec<f64> = steps
        .iter()
        .map(|&dt| Ok(solve(dt)?.sup_distance(&reference)))
        .collect::<Result<_>>()?;
    let orders: Vec<f64> = (0..2).map(|i| (errs[i] / errs[i + 1]).ln() / (steps[i] / steps[i + 1]).ln()).collect();
    let order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Check::at_least(
        "integrator order",
        order,
        3.7,
        format!("errors {:.3e} {:.3e} {:.3e} at dt {:?}", errs[0], errs[1], errs[2], steps),
    ))
}

// ---------------------------------------------------------------------------
// Weights

/// `sup |Λw_β|/w_β` finite, even, and stable under quadrature refinement.
pub fn weight_bound_certificate(betas: &[f64], half_length: f64, points: usize) -> Result<Vec<Check>> {
    let grid = GridSpec::new(half_length, 64)?;
    betas
        .iter()
        .map(|&beta| {
            let w = WeightSpec::new(beta, &grid)?;
            let base = lambda_weight_bound(&w, points, LambdaQuadrature::default())?;
            let fine = lambda_weight_bound(&w, points, LambdaQuadrature::refined())?;
            let parts = vec![
                Check::at_most("finite", if base.ratio.is_finite() { 0.0 } else { 1.0 }, 0.0, ""),
                Check::at_most("even", base.asymmetry, 1e-8, ""),
                Check::at_most("refinement", drift(base.ratio, fine.ratio), 0.02, ""),
            ];
            let mut c = Check::all(format!("Lambda w bound beta={beta}"), &parts);
            c.measured = base.ratio;
            c.threshold = f64::INFINITY;
            c.detail = format!(
                "sup ratio {:.8} at x = {}, asymmetry {:.1e}, refined {:.8}; {}",
                base.ratio, base.witness_x, base.asymmetry, fine.ratio, c.detail
            );
            Ok(c)
        })
        .collect()
}

fn smooth_family(grid: &GridSpec, seed: u64, count: usize) -> Vec<GaussianSum> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| bump_sum(grid, &mut r, BumpSumOptions::default()))
        .collect()
}

/// Hedberg `(1/2, 1)` and the three interpolation inequalities: finite, scale
/// invariant, stable under `N` doubling.
pub fn hedberg_gn_suite(grid: &GridSpec, betas: &[f64], seed: u64, count: usize) -> Result<Vec<Check>> {
    let fine = grid.refined()?;
    let family = smooth_family(grid, seed, count);
    let mut checks = Vec::new();

    let hed = |g: &GridSpec| -> Result<(f64, f64)> {
        let mut worst = 0.0f64;
        let mut scale_err = 0.0f64;
        for s in &family {
            let f = s.sample(g);
            let a = hedberg_check(&f, 0.5, 1.0)?.ratio;
            let b = hedberg_check(&f.scale(2.0), 0.5, 1.0)?.ratio;
            worst = worst.max(a);
            scale_err = scale_err.max(drift(a, b));
        }
        Ok((worst, scale_err))
    };
    let (h0, s0) = hed(grid)?;
    let (h1, s1) = hed(&fine)?;
    checks.push(Check::all(
        "Hedberg",
        &[
            Check::at_most("finite", if h0.is_finite() && h1.is_finite() { 0.0 } else { 1.0 }, 0.0, ""),
            Check::at_most("scaling", s0.max(s1), 1e-10, ""),
            Check::at_most("N-drift", drift(h0, h1), 0.1, ""),
        ],
    ));
    let last = checks.last_mut().expect("pushed");
    last.measured = h0;
    last.threshold = f64::INFINITY;
    last.detail = format!("max ratio {h0:.6} (N) {h1:.6} (2N); {}", last.detail);

    for &beta in betas {
        for which in GnInequality::ALL {
            let gn = |g: &GridSpec| -> Result<(f64, f64)> {
                let w = WeightSpec::new(beta, g)?;
                let mut worst = 0.0f64;
                let mut scale_err = 0.0f64;
                for s in &family {
                    let f = s.sample(g);
                    let a = gn_check(&f, &w, which)?;
                    let b = gn_check(&f.scale(2.0), &w, which)?;
                    worst = worst.max(a);
                    scale_err = scale_err.max(drift(a, b));
                }
                Ok((worst, scale_err))
            };
            let (g0, s0) = gn(grid)?;
            let (g1, s1) = gn(&fine)?;
            let mut c = Check::all(
                format!("GN {} beta={beta}", which.id()),
                &[
                    Check::at_most("finite", if g0.is_finite() && g1.is_finite() { 0.0 } else { 1.0 }, 0.0, ""),
                    Check::at_most("scaling", s0.max(s1), 1e-10, ""),
                    Check::at_most("N-drift", drift(g0, g1), 0.1, ""),
                ],
            );
            c.measured = g0;
            c.threshold = f64::INFINITY;
            c.detail = format!("max ratio {g0:.6} (N) {g1:.6} (2N); {}", c.detail);
            checks.push(c);
        }
    }
    Ok(checks)
}

/// `‖Mf‖_{L²(w)}/‖f‖_{L²(w)}` over the smooth family, at `N` and `2N`.
pub fn maximal_boundedness(grid: &GridSpec, beta: f64, seed: u64, count: usize) -> Result<Check> {
    let family = smooth_family(grid, seed, count);
    let at = |g: &GridSpec| -> Result<f64> {
        let w = WeightSpec::new(beta, g)?;
        family.iter().try_fold(0.0f64, |acc, s| {
            let f = s.sample(g);
            Ok(acc.max(weighted_lp_norm(&maximal_function(&f), 2.0, &w)? / weighted_lp_norm(&f, 2.0, &w)?))
        })
    };
    let (a, b) = (at(grid)?, at(&grid.refined()?)?);
    Ok(Check::at_most(
        format!("maximal function on L2(w) beta={beta}"),
        drift(a, b),
        0.1,
        format!("ratio {a:.6} (N) {b:.6} (2N)"),
    ))
}

// ---------------------------------------------------------------------------
// Commutators

/// Empirical `L^p(w)` norms of both commutators over the smooth family, at
/// `N` and `2N`, for `p ∈ {2, 3}` where the claim applies.
pub fn commutator_suite(grid: &GridSpec, betas: &[f64], seed: u64, count: usize) -> Result<Vec<Check>> {
    let fine = grid.refined()?;
    let family = smooth_family(grid, seed, count);
    let mut checks = Vec::new();
    for &beta in betas {
        for p in [2.0, 3.0] {
            for (name, half) in [("half", true), ("full", false)] {
                if half && !half_commutator_admissible(beta, p) {
                    continue;
                }
                let norm = |g: &GridSpec| -> Result<f64> {
                    let w = WeightSpec::new(beta, g)?;
                    family.iter().try_fold(0.0f64, |acc, s| {
                        let f = s.sample(g);
                        let r = if half {
                            operator_ratio(|f| commutator_half(f, &w), &f, p, &w)?
                        } else {
                            operator_ratio(|f| commutator_full(f, &w), &f, p, &w)?
                        };
                        Ok(acc.max(r))
                    })
                };
                let (a, b) = (norm(grid)?, norm(&fine)?);
                let mut c = Check::at_most(
                    format!("commutator {name} beta={beta} p={p}"),
                    drift(a, b),
                    0.2,
                    format!("norm {a:.6} (N) {b:.6} (2N)"),
                );
                c.passed &= a.is_finite() && b.is_finite();
                checks.push(c);
            }
        }
    }
    Ok(checks)
}

/// Log-log slope of `‖[Λ^{1/2}, ψ_R]θ₀‖_{L²(w)}` for
/// `θ₀ = (1+x²)^{-1/4}` cut off at `L/2`.
pub fn truncation_suite(grid: &GridSpec, beta: f64, radii: &[f64]) -> Result<Check> {
    let cut = 0.5 * grid.half_length();
    let theta0 = Field::from_fn(grid, |x| (1.0 + x * x).powf(-0.25) * CUTOFF.rescaled(x, cut));
    let w = WeightSpec::new(beta, grid)?;
    let start = Instant::now();
    let s = truncation_commutator_scaling(&theta0, &w, radii)?;
    Ok(Check::at_most(
        "truncation commutator slope",
        s.slope,
        -0.35,
        format!(
            "R {:?}, norms {:?}, L = {}, N = {}, {:.1}s",
            s.radii,
            s.norms.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>(),
            grid.half_length(),
            grid.n_points(),
            start.elapsed().as_secs_f64()
        ),
    ))
}

// ---------------------------------------------------------------------------
// Trajectories

/// Ten mixed configurations: `α ∈ {0.6, 1, 1.5}`, `ε ∈ {0, 1e-3}`, a mix of
/// nonnegative and signed data.
pub fn max_principle_configs() -> Vec<SolverConfig> {
    let data = [
        InitialData::Gaussian { amplitude: 1.0, sigma: 2.0, center: 0.0 },
        InitialData::Bump { amplitude: 0.8, radius: 3.0 },
        InitialData::Gaussian { amplitude: -0.7, sigma: 1.5, center: 3.0 },
    ];
    let mut out = Vec::new();
    for (i, &alpha) in [0.6, 1.0, 1.5].iter().enumerate() {
        for (j, &eps) in [0.0, 1e-3].iter().enumerate() {
            let mut c = SolverConfig::new(alpha, 2.0, data[(i + j) % 3].clone());
            c.epsilon = eps;
            out.push(c);
        }
    }
    for (alpha, d) in [
        (1.0, InitialData::Tail { amplitude: 0.5, decay: 0.5, cutoff_radius: 20.0 }),
        (0.6, InitialData::Ccf { amplitude: 1.0, sigma: 2.0, cutoff: 2.0 }),
        (1.5, InitialData::Mode { amplitude: 0.5, mode: 3 }),
        (1.0, InitialData::Bump { amplitude: 1.5, radius: 4.0 }),
    ] {
        out.push(SolverConfig::new(alpha, 2.0, d));
    }
    out
}

#[derive(Clone, Debug)]
pub struct TrajectorySuite {
    pub max_principle: Check,
    pub cc_pointwise: Check,
}

/// Maximum principle on every configuration; the pointwise cubic inequality
/// on every probe of the nonnegative ones.
pub fn trajectory_suite(grid: &GridSpec, configs: &[SolverConfig], probe_interval: f64) -> Result<TrajectorySuite> {
    let rows: Vec<(f64, f64, Option<f64>)> = configs
        .par_iter()
        .map(|cfg| {
            let mut records: Vec<(f64, f64)> = Vec::new();
            let nonneg = cfg.initial_field(grid)?.min() >= -1e-10;
            let mut cc = if nonneg { Some(f64::INFINITY) } else { None };
            let mut fail = None;
            let (_, rep) = integrate(cfg, grid, probe_interval, BlowupCriteria::default(), |s| {
                records.push((s.theta.max(), s.theta.min()));
                if let Some(v) = cc.as_mut() {
                    match cc_pointwise_check(&s.theta) {
                        Ok(c) => *v = v.min(c.min_slack / c.scale.max(f64::MIN_POSITIVE)),
                        Err(e) => fail = Some(e),
                    }
                }
            })?;
            if let Some(e) = fail {
                return Err(e);
            }
            if let Some(reason) = rep.stop_reason {
                return Err(Error::Blowup { t: cfg.t_end, reason });
            }
            let up = records.windows(2).map(|w| w[1].0 - w[0].0).fold(f64::NEG_INFINITY, f64::max);
            let down = records.windows(2).map(|w| w[0].1 - w[1].1).fold(f64::NEG_INFINITY, f64::max);
            Ok((up, down, cc))
        })
        .collect::<Result<_>>()?;
    let worst_up = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let worst_down = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let cc = rows.iter().filter_map(|r| r.2).fold(f64::INFINITY, f64::min);
    let n_cc = rows.iter().filter(|r| r.2.is_some()).count();
    Ok(TrajectorySuite {
        max_principle: Check::at_most(
            "maximum principle",
            worst_up.max(worst_down),
            1e-6,
            format!(
                "{} configs; largest max increase {worst_up:.2e}, largest min decrease {worst_down:.2e}",
                rows.len()
            ),
        ),
        cc_pointwise: Check::at_least(
            "pointwise cubic inequality",
            cc,
            -1e-6,
            format!("{n_cc} nonnegative trajectories, every probe, slack scaled"),
        ),
    })
}

fn trapezoid(ts: &[f64], vs: &[f64]) -> f64 {
    ts.windows(2)
        .zip(vs.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

#[derive(Clone, Debug)]
pub struct CriticalRun {
    pub records: Vec<DiagnosticsRecord>,
    pub weighted: Check,
    pub unweighted: Check,
    pub residuals: Check,
}

/// The critical small-data run with `β` and the unit harness weight: bounded
/// weighted norms, convergent dissipation, unweighted decay and budget, and
/// residual certification.
pub fn critical_small_data(grid: &GridSpec, cfg: &SolverConfig, beta: f64, probe_interval: f64) -> Result<CriticalRun> {
    let reg = Registry::embedded();
    let req = DiagnosticsRequest::new(probe_interval, vec![beta]);
    let out = run(cfg, grid, &req, &reg)?;
    if let Some(reason) = &out.blowup.stop_reason {
        return Err(Error::Blowup { t: out.final_state.t, reason: reason.clone() });
    }
    let rec = &out.records;
    let m = rec[0].sup_norm;
    let ts: Vec<f64> = rec.iter().map(|r| r.t).collect();
    let half_t = 0.5 * cfg.t_end;
    let k_half = ts.iter().position(|&t| t >= half_t - 1e-9).unwrap_or(ts.len() - 1);
    let sup_to = |k: usize, f: &dyn Fn(&DiagnosticsRecord) -> f64| rec[..=k].iter().map(f).fold(0.0, f64::max);
    let last = rec.len() - 1;
    let l2w = |r: &DiagnosticsRecord| r.weighted[0].l2w;
    let hhw = |r: &DiagnosticsRecord| r.weighted[0].h_half_w;
    let c_l2 = drift(sup_to(k_half, &l2w), sup_to(last, &l2w));
    let c_hh = drift(sup_to(k_half, &hhw), sup_to(last, &hhw));
    let diss: Vec<f64> = rec.iter().map(|r| r.weighted[0].dissip_1).collect();
    let total = trapezoid(&ts, &diss);
    let late = trapezoid(&ts[k_half..], &diss[k_half..]);
    let weighted = Check::all(
        "critical small-data run (weighted)",
        &[
            Check::at_most("sup L2(w) T/2->T", c_l2, 0.05, ""),
            Check::at_most("sup H1/2(w) T/2->T", c_hh, 0.05, ""),
            Check::at_most("dissipation tail share", late / total.max(f64::MIN_POSITIVE), 0.05, ""),
        ],
    );
    let weighted = Check {
        detail: format!(
            "m = {m}, T = {}, beta = {beta}: sup-change {c_l2:.2e} / {c_hh:.2e}, int|Lambda th|^2_w = {total:.6e} with {late:.3e} after T/2; {}",
            cfg.t_end, weighted.detail
        ),
        ..weighted
    };

    let hh: Vec<f64> = rec.iter().map(|r| r.unweighted.h_half).collect();
    let rise = hh.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max) / hh[0];
    let budget: f64 = trapezoid(&ts, &rec.iter().map(|r| r.unweighted.dissip_1).collect::<Vec<_>>());
    let bound = rec[0].unweighted.dissip_half / (2.0 * (1.0 - m));
    let unweighted = Check::all(
        "critical small-data run (unweighted)",
        &[
            Check::at_most("H1/2 nonincreasing", rise, 1e-6, ""),
            Check::at_most("dissipation budget", budget / bound, 1.0, ""),
        ],
    );
    let unweighted = Check {
        detail: format!(
            "largest relative rise of |Lambda^1/2 th| {rise:.2e}; budget {budget:.6e} <= {bound:.6e}; {}",
            unweighted.detail
        ),
        ..unweighted
    };

    let mut counts = [0usize; 5];
    let mut worst: Option<(String, f64, f64, f64)> = None;
    for r in out.residuals.iter().flatten() {
        let i = match r.status {
            ResidualStatus::Pass => 0,
            ResidualStatus::Fail => 1,
            ResidualStatus::RecordOnly => 2,
            ResidualStatus::Inconclusive => 3,
            ResidualStatus::Unresolved => 4,
        };
        counts[i] += 1;
        if r.status == ResidualStatus::Fail && worst.as_ref().is_none_or(|w| r.value - r.tolerance > w.2 - w.3) {
            worst = Some((r.key(), r.t, r.value, r.tolerance));
        }
    }
    let detail = match &worst {
        Some((k, t, v, tol)) => format!("worst {k} at t = {t}: residual {v:.3e} > tolerance {tol:.3e}"),
        None => String::new(),
    };
    let residuals = Check::at_most(
        "residual certification",
        counts[1] as f64,
        0.0,
        format!(
            "pass {} fail {} record-only {} inconclusive {} unresolved {}; {detail}",
            counts[0], counts[1], counts[2], counts[3], counts[4]
        ),
    );
    Ok(CriticalRun {
        records: out.records,
        weighted,
        unweighted,
        residuals,
    })
}

/// Consecutive space-time distances along an ε- or η-ladder must decrease.
pub fn relaxation_suite(grid: &GridSpec, base: &SolverConfig, ladder: Ladder, values: &[f64], probe_interval: f64) -> Result<Check> {
    let rows = relaxation_study(base, grid, ladder, values, probe_interval)?;
    let d: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    let worst = d.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let mut c = Check::at_most(
        format!("relaxation {ladder:?} ladder"),
        worst,
        1.0 - 1e-12,
        format!(
            "ladder {values:?}, distances [{}] (largest consecutive ratio shown)",
            d.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>().join(", ")
        ),
    );
    c.passed &= d.len() + 1 == values.len();
    Ok(c)
}

/// Picard iterates of the regularized Duhamel form contract to the stepped
/// solution.
pub fn picard_suite(grid: &GridSpec, cfg: &SolverConfig, iterations: usize, t_short: f64) -> Result<Check> {
    match picard_validate(cfg, grid, iterations, t_short) {
        Ok(dev) => Ok(Check::at_most(
            "Picard contraction",
            dev,
            1e-6,
            format!("deviation after {iterations} iterates on [0, {t_short}]"),
        )),
        Err(Error::NonContraction { iterate, previous, current }) => Ok(Check::at_most(
            "Picard contraction",
            current,
            previous,
            format!("iterate {iterate} grew"),
        )),
        Err(e) => Err(e),
    }
}

/// A fresh calibration (new seeds, no safety factor) stays below every
/// registered constant.
pub fn registry_suite(registry: &Registry, seeds: &[u64], samples: usize) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut at = String::new();
    for &seed in seeds {
        let mut o = CalibrationOptions::standard()?;
        o.seed = seed;
        o.samples = samples;
        o.safety = 1.0;
        let fresh = calibrate(&o)?;
        let mut cmp = |name: String, f: f64, r: f64| {
            let ratio = if r > 0.0 { f / r } else if f > 0.0 { f64::INFINITY } else { 0.0 };
            if ratio > worst {
                worst = ratio;
                at = format!("{name} (seed {seed}): fresh {f:.4e} vs registered {r:.4e}");
            }
        };
        for c in &fresh.weighted {
            let r = registry
                .weighted(c.beta)
                .ok_or_else(|| Error::Config(format!("registry lacks beta = {}", c.beta)))?;
            cmp(format!("c_l2 beta={}", c.beta), c.c_l2, r.c_l2);
            cmp(format!("c8 beta={}", c.beta), c.c8, r.c8);
            cmp(format!("c9 beta={}", c.beta), c.c9, r.c9);
            cmp(format!("c2_prime beta={}", c.beta), c.c2_prime, r.c2_prime);
            cmp(format!("c5 beta={}", c.beta), c.c5, r.c5);
        }
        cmp("c1".into(), fresh.unweighted.c1, registry.unweighted.c1);
        cmp("c0".into(), fresh.unweighted.c0, registry.unweighted.c0);
    }
    Ok(Check::at_most(
        "registry covers fresh calibration",
        worst,
        1.0,
        format!("largest fresh/registered ratio: {at}"),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupParams {
    pub cfg: SolverConfig,
    pub grid: GridSpec,
    pub probe_interval: f64,
    pub time_budget_s: f64,
}

impl BlowupParams {
    /// `α = 1/4`, cut-off Gaussian of height 8 and width 1 on a box of
    /// half-length 5, `N = 81920` and its refinement.
    pub fn standard() -> Result<Self> {
        let mut cfg = SolverConfig::new(
            0.25,
            0.19,
            InitialData::Ccf {
                amplitude: 8.0,
                sigma: 1.0,
                cutoff: 2.0,
            },
        );
        cfg.dt_policy = DtPolicy::Adaptive { cfl: 0.9, dt_max: 0.01 };
        Ok(Self {
            cfg,
            grid: GridSpec::new(5.0, 81_920)?,
            probe_interval: 0.01,
            time_budget_s: 900.0,
        })
    }
}

/// Gradient growth ×50 together with a time-step collapse (or loss of
/// finiteness), at `N` and at `2N`, within the time budget.
pub fn blowup_suite(p: &BlowupParams) -> Result<Check> {
    let start = Instant::now();
    let criteria = BlowupCriteria::default();
    let (coarse, fine) = detect_blowup(&p.cfg, &p.grid, p.probe_interval, criteria)?;
    let secs = start.elapsed().as_secs_f64();
    let describe = |r: &crate::solver::BlowupReport| {
        format!(
            "growth x{:.1}, min dt {:.2e}, indicators {:?}",
            r.gradient_growth, r.min_dt, r.indicators
        )
    };
    let both = coarse.detected && fine.detected;
    Ok(Check {
        name: "supercritical blow-up indicator".into(),
        passed: both && secs <= p.time_budget_s,
        measured: coarse.gradient_growth.min(fine.gradient_growth),
        threshold: criteria.gradient_growth,
        detail: format!(
            "N = {}: {}; 2N: {}; dt floor {:.0e}; {:.0}s",
            p.grid.n_points(),
            describe(&coarse),
            describe(&fine),
            criteria.dt_floor,
            secs
        ),
    })
}
