//! Frozen empirical constants for the energy inequalities.
//!
//! Each constant is the maximum, over a seeded family of smooth fields, of the
//! ratio that the corresponding inequality needs, times a safety factor.
//! Derivatives are exact instantaneous rates from the equation's right-hand
//! side, not finite differences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{instantaneous_rates, Rates};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::initial::InitialData;
use crate::solver::SolverConfig;
use crate::suite::{bump_sum, rng, BumpSumOptions};
use crate::weights::WeightSpec;

pub const REGISTRY_SCHEMA: &str = "fractrans-registry";
pub const REGISTRY_VERSION: u32 = 1;

static EMBEDDED: &str = include_str!("../data/registry.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedConstants {
    pub beta: f64,
    /// `C` in the weighted L² inequality.
    pub c_l2: f64,
    /// Smallness constant of the weighted H^{1/2} inequality.
    pub c8: f64,
    /// Growth constant of the weighted H^{1/2} inequality.
    pub c9: f64,
    /// Smallness constant of the weighted H¹ inequality.
    pub c2_prime: f64,
    /// Growth constant of the weighted H¹ inequality.
    pub c5: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnweightedConstants {
    /// Smallness constant of the unweighted Λ-level inequality.
    pub c1: f64,
    /// Growth constant of the H³ inequality.
    pub c0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationInfo {
    pub seed: u64,
    pub samples: usize,
    pub half_length: f64,
    pub n_points: usize,
    pub safety: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    pub schema: String,
    pub version: u32,
    pub calibration: CalibrationInfo,
    pub weighted: Vec<WeightedConstants>,
    pub unweighted: UnweightedConstants,
}

impl Registry {
    /// The registry shipped with the crate.
    pub fn embedded() -> Self {
        Self::from_json(EMBEDDED).expect("embedded registry is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Registry = serde_json::from_str(text)?;
        if r.schema != REGISTRY_SCHEMA {
            return Err(Error::Config(format!("registry schema `{}` is not `{REGISTRY_SCHEMA}`", r.schema)));
        }
        if r.version != REGISTRY_VERSION {
            return Err(Error::Config(format!(
                "registry version {} is not the supported version {REGISTRY_VERSION}",
                r.version
            )));
        }
        Ok(r)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Constants for `beta`, matched to 1e-12.
    pub fn weighted(&self, beta: f64) -> Option<&WeightedConstants> {
        self.weighted.iter().find(|c| (c.beta - beta).abs() < 1e-12)
    }
}

/// Smallness classification of `m = ‖θ₀‖_∞` against a threshold `1/C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Within,
    /// Within 10% of the threshold on either side.
    Inconclusive,
    Outside,
}

pub fn classify_smallness(m: f64, constant: f64) -> Hypothesis {
    if constant <= 0.0 {
        return Hypothesis::Within;
    }
    let threshold = 1.0 / constant;
    if m < 0.9 * threshold {
        Hypothesis::Within
    } else if m <= 1.1 * threshold {
        Hypothesis::Inconclusive
    } else {
        Hypothesis::Outside
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationOptions {
    pub seed: u64,
    pub samples: usize,
    pub grid: GridSpec,
    pub betas: Vec<f64>,
    pub safety: f64,
}

impl CalibrationOptions {
    pub fn standard() -> Result<Self> {
        Ok(Self {
            seed: 20_240_601,
            samples: 512,
            grid: GridSpec::new(50.0, 1024)?,
            betas: vec![0.25, 0.5, 0.75],
            safety: 1.5,
        })
    }
}

/// Raw maxima over the family, before the safety factor.
#[derive(Clone, Debug, PartialEq, Default)]
struct Maxima {
    c_l2: f64,
    c9: f64,
    c8: f64,
    c5: f64,
    c2p: f64,
}

/// Deterministic centered profiles (Gaussian and Poisson-kernel shapes over a
/// width ladder) followed by seeded random bump sums, all at unit sup norm.
fn unit_amplitude_family(opts: &CalibrationOptions) -> Vec<Field> {
    let grid = &opts.grid;
    let mut family = Vec::with_capacity(opts.samples + 2 * LADDER.len());
    for &s in &LADDER {
        family.push(Field::from_fn(grid, |x| (-(x / s).powi(2)).exp()));
        family.push(Field::from_fn(grid, |x| 1.0 / (1.0 + (x / s).powi(2))));
    }
    let mut r = rng(opts.seed);
    let mut drawn = 0;
    while drawn < opts.samples {
        let o = BumpSumOptions {
            center_fraction: 0.1,
            width: (0.25, 6.0),
            nonnegative: drawn % 3 == 0,
            ..BumpSumOptions::default()
        };
        let f = bump_sum(grid, &mut r, o).sample(grid);
        let s = f.sup_norm();
        if s > 0.0 {
            family.push(f.scale(1.0 / s));
            drawn += 1;
        }
    }
    family
}

const LADDER: [f64; 7] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

fn critical_cfg() -> SolverConfig {
    SolverConfig::new(1.0, 1.0, InitialData::Constant { value: 0.0 })
}

/// Measures every registry constant over the seeded family.
pub fn calibrate(opts: &CalibrationOptions) -> Result<Registry> {
    let family = unit_amplitude_family(opts);
    let cfg = critical_cfg();
    let weights: Vec<WeightSpec> = opts
        .betas
        .iter()
        .map(|&b| WeightSpec::new(b, &opts.grid))
        .collect::<Result<_>>()?;
    let unit = WeightSpec::unit(&opts.grid);
    let per_field: Vec<(Vec<Maxima>, f64, f64)> = family
        .par_iter()
        .map(|f| {
            let m = f.sup_norm();
            let mut out = Vec::with_capacity(weights.len());
            for w in &weights {
                let r = instantaneous_rates(f, &cfg, w)?;
                out.push(weighted_maxima(&r, m));
            }
            let r = instantaneous_rates(f, &cfg, &unit)?;
            let c1 = r.nonlinear.lambda1 / (2.0 * m * r.state.lambda3half_sq);
            let e = r.state.l2_sq + r.state.d3_sq;
            let c0 = r.nonlinear.h3 / (m * (e + 2.0 * r.state.lambda7half_sq));
            Ok((out, c1, c0))
        })
        .collect::<Result<_>>()?;
    let s = opts.safety;
    let weighted = opts
        .betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let mx = per_field.iter().fold(Maxima::default(), |acc, (v, _, _)| Maxima {
                c_l2: acc.c_l2.max(v[i].c_l2),
                c9: acc.c9.max(v[i].c9),
                c8: acc.c8.max(v[i].c8),
                c5: acc.c5.max(v[i].c5),
                c2p: acc.c2p.max(v[i].c2p),
            });
            WeightedConstants {
                beta,
                c_l2: s * mx.c_l2,
                c8: s * mx.c8,
                c9: s * mx.c9,
                c2_prime: s * mx.c2p,
                c5: s * mx.c5,
            }
        })
        .collect();
    let c1 = per_field.iter().map(|p| p.1).fold(0.0, f64::max);
    let c0 = per_field.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(Registry {
        schema: REGISTRY_SCHEMA.into(),
        version: REGISTRY_VERSION,
        calibration: CalibrationInfo {
            seed: opts.seed,
            samples: opts.samples,
            half_length: opts.grid.half_length(),
            n_points: opts.grid.n_points(),
            safety: s,
        },
        weighted,
        unweighted: UnweightedConstants {
            c1: s * c1,
            c0: s * c0,
        },
    })
}

/// Splits each weighted inequality into its linear (amplitude-quadratic) and
/// transport (amplitude-cubic) parts and bounds each separately, so that the
/// constants do not depend on the amplitude of the family.
fn weighted_maxima(r: &Rates, m: f64) -> Maxima {
    let st = &r.state_w;
    let lin = &r.linear_w;
    let nl = &r.nonlinear_w;
    // d/dt A + B <= C(1+m) A + m J
    let c_l2 = ((lin.a + st.b) / st.a).max((nl.a - m * st.theta_lambda) / (m * st.a));
    // d/dt (A + B) <= (C8 m - 1) G + C9 (A + B)
    let c9 = ((lin.a + lin.b + st.g) / (st.a + st.b)).max(0.0);
    let c8 = ((nl.a + nl.b) / (m * st.g)).max(0.0);
    // (1/2) d/dt F <= (C2' m - 1) P + C5 (A + F)
    let c5 = ((0.5 * lin.f + st.p) / (st.a + st.f)).max(0.0);
    let c2p = (0.5 * nl.f / (m * st.p)).max(0.0);
    Maxima {
        c_l2: c_l2.max(0.0),
        c9,
        c8,
        c5,
        c2p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_registry_parses() {
        let r = Registry::embedded();
        assert_eq!(r.version, REGISTRY_VERSION);
        for b in [0.25, 0.5, 0.75] {
            assert!(r.weighted(b).is_some());
        }
    }

    #[test]
    fn rejects_foreign_schema() {
        let mut r = Registry::embedded();
        r.schema = "other".into();
        let text = serde_json::to_string(&r).unwrap();
        assert!(Registry::from_json(&text).is_err());
    }

    #[test]
    fn smallness_bands() {
        assert_eq!(classify_smallness(0.05, 2.0), Hypothesis::Within);
        assert_eq!(classify_smallness(0.5, 2.0), Hypothesis::Inconclusive);
        assert_eq!(classify_smallness(0.9, 2.0), Hypothesis::Outside);
    }
}
