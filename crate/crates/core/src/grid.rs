//! Uniform periodic grid on `[-L, L)` and its FFT plans.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-L, L)` with `N` points.
///
/// Wavenumbers follow FFT storage order: index `m < N/2` holds mode `j = m`,
/// index `m >= N/2` holds `j = m - N`, so the unpaired mode `-N/2` sits at `m = N/2`.
#[derive(Clone)]
pub struct GridSpec {
    half_length: f64,
    n_points: usize,
    spacing: f64,
    wavenumbers: Arc<[f64]>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("half_length", &self.half_length)
            .field("n_points", &self.n_points)
            .finish()
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.half_length == other.half_length && self.n_points == other.n_points
    }
}

fn is_smooth_number(mut n: usize) -> bool {
    for p in [2, 3, 5, 7] {
        while n % p == 0 {
            n /= p;
        }
    }
    n == 1
}

impl GridSpec {
    pub fn new(half_length: f64, n_points: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        if n_points < 4 || n_points % 2 != 0 || !is_smooth_number(n_points) {
            return Err(Error::InvalidGrid(format!(
                "point count must be an even product of 2, 3, 5, 7 and at least 4, got {n_points}"
            )));
        }
        let spacing = 2.0 * half_length / n_points as f64;
        let scale = std::f64::consts::PI / half_length;
        let wavenumbers: Arc<[f64]> = (0..n_points)
            .map(|m| Self::mode_index_of(n_points, m) as f64 * scale)
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        Ok(Self {
            half_length,
            n_points,
            spacing,
            wavenumbers,
            forward,
            inverse,
        })
    }

    fn mode_index_of(n: usize, m: usize) -> i64 {
        if m < n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Angular wavenumbers `k_j = pi j / L` in FFT storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Integer mode `j` stored at FFT index `m`.
    pub fn mode_index(&self, m: usize) -> i64 {
        Self::mode_index_of(self.n_points, m)
    }

    /// FFT index of the unpaired `-N/2` mode.
    pub fn nyquist_index(&self) -> usize {
        self.n_points / 2
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Index of the grid point nearest to `x` (after periodic wrapping).
    pub fn nearest_index(&self, x: f64) -> usize {
        let period = 2.0 * self.half_length;
        let shifted = (x + self.half_length).rem_euclid(period);
        ((shifted / self.spacing).round() as usize) % self.n_points
    }

    /// Same box, twice the points.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.half_length, 2 * self.n_points)
    }

    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n_points as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    pub(crate) fn forward_real(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    pub(crate) fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.inverse_in_place(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}
