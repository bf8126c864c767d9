//! Real periodic fields with a lazily computed spectrum.

use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// A real-valued function sampled on a [`GridSpec`].
///
/// Fields are immutable. The spectrum is computed on first use and cached.
#[derive(Clone, Debug)]
pub struct Field {
    grid: GridSpec,
    samples: Arc<[f64]>,
    spectrum: OnceLock<Arc<[Complex64]>>,
}

impl Field {
    pub fn from_samples(grid: &GridSpec, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.n_points(),
                samples.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            samples: samples.into(),
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = (0..grid.n_points()).map(|i| f(grid.x(i))).collect();
        Self {
            grid: grid.clone(),
            samples: samples.into(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        Self::from_fn(grid, |_| c)
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Builds a field from a spectrum assumed conjugate-symmetric.
    /// The imaginary residue of the inverse transform is dropped.
    pub fn from_spectrum(grid: &GridSpec, spectrum: Vec<Complex64>) -> Self {
        assert_eq!(spectrum.len(), grid.n_points());
        let samples = grid.inverse_real(&spectrum);
        let cell = OnceLock::new();
        let _ = cell.set(Arc::from(spectrum));
        Self {
            grid: grid.clone(),
            samples: samples.into(),
            spectrum: cell,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| Arc::from(self.grid.forward_real(&self.samples)))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Average over the box.
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    /// Unweighted `L^2` norm over the box (trapezoid rule).
    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.samples.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `∫ f g dx` over the box.
    pub fn inner(&self, other: &Field) -> f64 {
        self.grid.spacing()
            * self
                .samples
                .iter()
                .zip(other.samples.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|&v| f(v)).collect(),
            spectrum: OnceLock::new(),
        }
    }

    /// Pointwise combination; panics on grid mismatch.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Field {
            grid: self.grid.clone(),
            samples: self
                .samples
                .iter()
                .zip(other.samples.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// Multiplication by a sampled function (weights, cutoffs).
    pub fn mul_samples(&self, m: &[f64]) -> Field {
        assert_eq!(m.len(), self.len());
        Field {
            grid: self.grid.clone(),
            samples: self.samples.iter().zip(m).map(|(a, b)| a * b).collect(),
            spectrum: OnceLock::new(),
        }
    }

    /// Sup-norm distance; panics on grid mismatch.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        self.samples
            .iter()
            .zip(other.samples.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}
