//! Named families of initial data.

use serde::{Deserialize, Serialize};

use crate::bump::{raw_bump, SmoothCutoff};
use crate::field::Field;
use crate::grid::GridSpec;

fn default_ccf_cutoff() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `A exp(-1/(1-(x/r)^2)) e` scaled so that the peak equals `A`.
    Bump { amplitude: f64, radius: f64 },
    /// `A exp(-(x-c)^2/σ^2)`, untruncated.
    Gaussian {
        amplitude: f64,
        sigma: f64,
        #[serde(default)]
        center: f64,
    },
    /// Even, positive, compactly supported: `A exp(-x^2/σ^2) ψ(x/(cσ))`,
    /// supported in `|x| < 2cσ`.
    Ccf {
        amplitude: f64,
        sigma: f64,
        #[serde(default = "default_ccf_cutoff")]
        cutoff: f64,
    },
    /// Slowly decaying data `A (1+x^2)^{-decay/2} ψ(x/R)`.
    Tail {
        amplitude: f64,
        decay: f64,
        cutoff_radius: f64,
    },
    /// `A sin(π j x / L)`.
    Mode { amplitude: f64, mode: u32 },
    Constant { value: f64 },
}

impl InitialData {
    /// The same family with its amplitude replaced; `None` for constants.
    pub fn with_amplitude(&self, a: f64) -> Option<InitialData> {
        let mut out = self.clone();
        match &mut out {
            InitialData::Bump { amplitude, .. }
            | InitialData::Gaussian { amplitude, .. }
            | InitialData::Ccf { amplitude, .. }
            | InitialData::Tail { amplitude, .. }
            | InitialData::Mode { amplitude, .. } => *amplitude = a,
            InitialData::Constant { .. } => return None,
        }
        Some(out)
    }

    pub fn sample(&self, grid: &GridSpec) -> Field {
        match *self {
            InitialData::Bump { amplitude, radius } => {
                let peak = raw_bump(0.0);
                Field::from_fn(grid, |x| amplitude * raw_bump(x / radius) / peak)
            }
            InitialData::Gaussian {
                amplitude,
                sigma,
                center,
            } => Field::from_fn(grid, |x| amplitude * (-((x - center) / sigma).powi(2)).exp()),
            InitialData::Ccf {
                amplitude,
                sigma,
                cutoff,
            } => Field::from_fn(grid, |x| {
                amplitude * (-(x / sigma).powi(2)).exp() * SmoothCutoff::UNIT.rescaled(x, cutoff * sigma)
            }),
            InitialData::Tail {
                amplitude,
                decay,
                cutoff_radius,
            } => Field::from_fn(grid, |x| {
                amplitude
                    * (1.0 + x * x).powf(-decay / 2.0)
                    * SmoothCutoff::UNIT.rescaled(x, cutoff_radius)
            }),
            InitialData::Mode { amplitude, mode } => {
                let k = std::f64::consts::PI * mode as f64 / grid.half_length();
                Field::from_fn(grid, |x| amplitude * (k * x).sin())
            }
            InitialData::Constant { value } => Field::constant(grid, value),
        }
    }
}
