//! Fourier-multiplier implementations of the nonlocal operators.
//!
//! Sign convention: the Hilbert transform has symbol `i sign(k)`, so that
//! `∂_x H = -Λ` and `H Λ = ∂_x`. The unpaired `-N/2` mode is dropped by every
//! odd symbol (`H`, `∂_x`) to keep results real.

use rustfft::num_complex::Complex64;

use crate::bump::bump;
use crate::error::{check_param, Result};
use crate::field::Field;
use crate::grid::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SymbolKind {
    Hilbert,
    /// `|k|^s`; the public operator restricts `s` to `(0, 2]`.
    FracLap(f64),
    Derivative,
    HeatSemigroup { t: f64, epsilon: f64 },
}

/// A diagonal Fourier multiplier sampled on a grid.
#[derive(Clone, Debug)]
pub struct OperatorSymbol {
    pub kind: SymbolKind,
    pub multiplier: Vec<Complex64>,
}

impl OperatorSymbol {
    pub fn new(kind: SymbolKind, grid: &GridSpec) -> Self {
        let nyq = grid.nyquist_index();
        let multiplier = grid
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(m, &k)| match kind {
                SymbolKind::Hilbert if m == nyq => Complex64::new(0.0, 0.0),
                SymbolKind::Hilbert => Complex64::new(0.0, sign(k)),
                SymbolKind::Derivative if m == nyq => Complex64::new(0.0, 0.0),
                SymbolKind::Derivative => Complex64::new(0.0, k),
                SymbolKind::FracLap(s) => Complex64::new(abs_pow(k, s), 0.0),
                SymbolKind::HeatSemigroup { t, epsilon } => {
                    Complex64::new((-epsilon * t * k * k).exp(), 0.0)
                }
            })
            .collect();
        Self { kind, multiplier }
    }

    pub fn apply(&self, f: &Field) -> Field {
        let spectrum = f
            .spectrum()
            .iter()
            .zip(&self.multiplier)
            .map(|(a, m)| a * m)
            .collect();
        Field::from_spectrum(f.grid(), spectrum)
    }
}

fn sign(k: f64) -> f64 {
    if k > 0.0 {
        1.0
    } else if k < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `|k|^s` with `0^s = 0`.
pub(crate) fn abs_pow(k: f64, s: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k.abs().powf(s)
    }
}

/// Applies a real or complex per-mode multiplier `m(k, index)`.
pub(crate) fn apply_multiplier(f: &Field, m: impl Fn(f64, usize) -> Complex64) -> Field {
    let grid = f.grid();
    let spectrum = f
        .spectrum()
        .iter()
        .zip(grid.wavenumbers())
        .enumerate()
        .map(|(idx, (a, &k))| a * m(k, idx))
        .collect();
    Field::from_spectrum(grid, spectrum)
}

/// Hilbert transform, symbol `i sign(k)`.
pub fn hilbert(f: &Field) -> Field {
    let nyq = f.grid().nyquist_index();
    apply_multiplier(f, |k, m| {
        if m == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, sign(k))
        }
    })
}

/// `∂_x`, symbol `i k`.
pub fn derivative(f: &Field) -> Field {
    let nyq = f.grid().nyquist_index();
    apply_multiplier(f, |k, m| {
        if m == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k)
        }
    })
}

/// `∂_x^order`, dropping the unpaired mode for odd orders.
pub fn derivative_n(f: &Field, order: u32) -> Field {
    let nyq = f.grid().nyquist_index();
    apply_multiplier(f, |k, m| {
        if m == nyq && order % 2 == 1 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, k).powu(order)
    })
}

/// `Λ^α = (-Δ)^{α/2}` for `α ∈ (0, 2]`.
pub fn lambda_alpha(f: &Field, alpha: f64) -> Result<Field> {
    check_param("alpha", alpha, alpha > 0.0 && alpha <= 2.0, "must lie in (0, 2]")?;
    Ok(lambda_power(f, alpha))
}

/// `Λ^s` for any `s >= 0` (diagnostics need `s` up to 7/2).
pub fn lambda_power(f: &Field, s: f64) -> Field {
    assert!(s >= 0.0, "negative order");
    if s == 0.0 {
        return f.clone();
    }
    apply_multiplier(f, |k, _| Complex64::new(abs_pow(k, s), 0.0))
}

/// `e^{ε t Δ} f`.
pub fn heat_semigroup(f: &Field, t: f64, epsilon: f64) -> Result<Field> {
    check_param("t", t, t >= 0.0, "must be nonnegative")?;
    check_param("epsilon", epsilon, epsilon > 0.0, "must be positive")?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(apply_multiplier(f, |k, _| {
        Complex64::new((-epsilon * t * k * k).exp(), 0.0)
    }))
}

/// Normalized discrete mollifier weights `c_m ∝ φ(m h / η)` for `|m| < η/h`.
fn mollifier_weights(grid: &GridSpec, eta: f64) -> Vec<f64> {
    let h = grid.spacing();
    let reach = (eta / h).ceil() as usize;
    let mut w: Vec<f64> = (0..=reach).map(|m| bump(m as f64 * h / eta)).collect();
    if w.iter().skip(1).all(|&v| v == 0.0) {
        // η below one cell: identity.
        w = vec![1.0];
    }
    let total = w[0] + 2.0 * w[1..].iter().sum::<f64>();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Convolution with `φ_η`, computed as a normalized discrete convolution
/// so that sign, sup bound and mean are preserved exactly on the grid.
pub fn mollify(f: &Field, eta: f64) -> Result<Field> {
    let grid = f.grid();
    check_param(
        "eta",
        eta,
        eta > 0.0 && eta < grid.half_length() / 4.0,
        "must lie in (0, L/4)",
    )?;
    let weights = mollifier_weights(grid, eta);
    let n = grid.n_points();
    let s = f.samples();
    let out: Vec<f64> = (0..n)
        .map(|i| {
            let mut acc = weights[0] * s[i];
            for (m, &c) in weights.iter().enumerate().skip(1) {
                acc += c * (s[(i + m) % n] + s[(i + n - m % n) % n]);
            }
            acc
        })
        .collect();
    Field::from_samples(grid, out)
}

/// 2/3-rule truncation: zero every mode with `|j| > N/3`.
pub fn dealias(grid: &GridSpec, spectrum: &mut [Complex64]) {
    let cutoff = grid.n_points() as i64 / 3;
    for (m, c) in spectrum.iter_mut().enumerate() {
        if grid.mode_index(m).abs() > cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

pub fn dealias_field(f: &Field) -> Field {
    let mut spectrum = f.spectrum().to_vec();
    dealias(f.grid(), &mut spectrum);
    Field::from_spectrum(f.grid(), spectrum)
}

/// `‖Λ^s f‖²_2` over the box by Parseval; `s = 0` keeps the mean.
pub fn lambda_energy(f: &Field, s: f64) -> f64 {
    if s == 0.0 {
        return f.l2_norm().powi(2);
    }
    let grid = f.grid();
    let n = grid.n_points() as f64;
    let sum: f64 = f
        .spectrum()
        .iter()
        .zip(grid.wavenumbers())
        .map(|(a, &k)| abs_pow(k, 2.0 * s) * a.norm_sqr())
        .sum();
    2.0 * grid.half_length() * sum / (n * n)
}

/// `‖∂_x^order f‖²_2` by Parseval; agrees with [`derivative_n`] on the
/// unpaired mode.
pub fn derivative_energy(f: &Field, order: u32) -> f64 {
    let grid = f.grid();
    let nyq = grid.nyquist_index();
    let n = grid.n_points() as f64;
    let sum: f64 = f
        .spectrum()
        .iter()
        .zip(grid.wavenumbers())
        .enumerate()
        .filter(|(m, _)| !(order % 2 == 1 && *m == nyq))
        .map(|(_, (a, &k))| k.powi(2 * order as i32) * a.norm_sqr())
        .sum();
    2.0 * grid.half_length() * sum / (n * n)
}

/// Trigonometric interpolation onto `fine` (same box, more points). The
/// unpaired mode is split evenly between `±N/2`.
pub fn interpolate(f: &Field, fine: &GridSpec) -> Result<Field> {
    let grid = f.grid();
    let (n, m) = (grid.n_points(), fine.n_points());
    if fine.half_length() != grid.half_length() || m < n {
        return Err(crate::Error::GridMismatch);
    }
    let src = f.spectrum();
    let scale = m as f64 / n as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for (j, a) in src.iter().enumerate() {
        let idx = grid.mode_index(j);
        if m > n && j == grid.nyquist_index() {
            out[n / 2] += a * (0.5 * scale);
            out[m - n / 2] += a * (0.5 * scale);
        } else {
            out[idx.rem_euclid(m as i64) as usize] = a * scale;
        }
    }
    Ok(Field::from_spectrum(fine, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(50.0, 512).unwrap()
    }

    #[test]
    fn hilbert_of_sine_is_cosine() {
        let g = grid();
        let k = PI / 50.0;
        let f = Field::from_fn(&g, |x| (k * x).sin());
        let hf = hilbert(&f);
        let expect = Field::from_fn(&g, |x| (k * x).cos());
        assert!(hf.sup_distance(&expect) < 1e-13);
    }

    #[test]
    fn constants_are_annihilated() {
        let g = grid();
        let c = Field::constant(&g, 3.5);
        assert!(hilbert(&c).sup_norm() < 1e-14);
        assert!(lambda_alpha(&c, 0.7).unwrap().sup_norm() < 1e-14);
        assert!(derivative(&c).sup_norm() < 1e-14);
    }

    #[test]
    fn lambda_alpha_rejects_out_of_range() {
        let f = Field::zeros(&grid());
        assert!(lambda_alpha(&f, 0.0).is_err());
        assert!(lambda_alpha(&f, 2.5).is_err());
        assert!(lambda_alpha(&f, 2.0).is_ok());
    }

    #[test]
    fn lambda_on_single_mode() {
        let g = grid();
        let k = 3.0 * PI / 50.0;
        let f = Field::from_fn(&g, |x| (k * x).cos());
        let lf = lambda_alpha(&f, 0.6).unwrap();
        assert!(lf.sup_distance(&f.scale(k.powf(0.6))) < 1e-13);
    }

    #[test]
    fn heat_semigroup_cases() {
        let g = grid();
        let f = Field::from_fn(&g, |x| (-x * x / 4.0).exp());
        let same = heat_semigroup(&f, 0.0, 0.3).unwrap();
        assert_eq!(same.samples(), f.samples());
        let c = heat_semigroup(&Field::constant(&g, 2.0), 5.0, 1.0).unwrap();
        assert!(c.sup_distance(&Field::constant(&g, 2.0)) < 1e-14);
        let k = 4.0 * PI / 50.0;
        let s = Field::from_fn(&g, |x| (k * x).sin());
        let out = heat_semigroup(&s, 1.5, 0.2).unwrap();
        assert!(out.sup_distance(&s.scale((-0.2 * 1.5 * k * k).exp())) < 1e-14);
        assert!(heat_semigroup(&s, -1.0, 0.2).is_err());
    }

    #[test]
    fn heat_semigroup_contracts_sup() {
        let g = grid();
        let f = Field::from_fn(&g, |x| (-x * x / 4.0).exp() - 0.5 * (-(x - 3.0).powi(2)).exp());
        let out = heat_semigroup(&f, 2.0, 0.5).unwrap();
        assert!(out.sup_norm() <= f.sup_norm() + 1e-10);
    }

    #[test]
    fn mollify_preserves_constants_and_sign() {
        let g = grid();
        let c = mollify(&Field::constant(&g, 1.7), 0.5).unwrap();
        assert!(c.sup_distance(&Field::constant(&g, 1.7)) < 1e-10);
        let f = Field::from_fn(&g, |x| if x.abs() < 2.0 { 1.0 } else { 0.0 });
        let m = mollify(&f, 0.3).unwrap();
        assert!(m.min() >= -1e-12);
        assert!(m.sup_norm() <= f.sup_norm() + 1e-15);
        assert!((m.mean() - f.mean()).abs() < 1e-10);
        assert!(mollify(&f, 12.5).is_err());
        assert!(mollify(&f, 0.0).is_err());
    }

    #[test]
    fn mollify_error_shrinks_with_eta() {
        let g = GridSpec::new(50.0, 4096).unwrap();
        let f = Field::from_fn(&g, |x| (1.0 + (x / 2.0).sin()) * (-x * x / 50.0).exp());
        let errs: Vec<f64> = [0.5, 0.25, 0.125]
            .iter()
            .map(|&eta| mollify(&f, eta).unwrap().sub(&f).l2_norm())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn dealias_band_and_idempotence() {
        let g = GridSpec::new(10.0, 96).unwrap();
        let k = |j: f64| PI * j / 10.0;
        let inside = Field::from_fn(&g, |x| (k(32.0) * x).cos() + (k(5.0) * x).sin());
        assert!(dealias_field(&inside).sup_distance(&inside) < 1e-12);
        let outside = Field::from_fn(&g, |x| (k(47.0) * x).cos());
        assert!(dealias_field(&outside).sup_norm() < 1e-13);
    }

    #[test]
    fn symbol_matches_function_form() {
        let g = grid();
        let f = Field::from_fn(&g, |x| (-x * x / 9.0).exp() * (x / 3.0).sin());
        let pairs = [
            (OperatorSymbol::new(SymbolKind::Hilbert, &g), hilbert(&f)),
            (OperatorSymbol::new(SymbolKind::Derivative, &g), derivative(&f)),
            (
                OperatorSymbol::new(SymbolKind::FracLap(1.3), &g),
                lambda_alpha(&f, 1.3).unwrap(),
            ),
            (
                OperatorSymbol::new(SymbolKind::HeatSemigroup { t: 0.5, epsilon: 0.1 }, &g),
                heat_semigroup(&f, 0.5, 0.1).unwrap(),
            ),
        ];
        for (sym, direct) in pairs {
            assert!(sym.apply(&f).sup_distance(&direct) < 1e-15);
        }
        let heat = OperatorSymbol::new(SymbolKind::HeatSemigroup { t: 2.0, epsilon: 0.3 }, &g);
        assert!(heat.multiplier.iter().all(|m| m.re > 0.0 && m.re <= 1.0 && m.im == 0.0));
    }

    #[test]
    fn parseval_energies_match_grid_norms() {
        let g = GridSpec::new(10.0, 256).unwrap();
        let f = Field::from_fn(&g, |x| (-x * x / 4.0).exp() * (1.0 + 0.3 * (2.0 * x).cos()));
        let a = lambda_power(&f, 1.5).l2_norm().powi(2);
        assert!((lambda_energy(&f, 1.5) - a).abs() < 1e-12 * a);
        let b = derivative_n(&f, 3).l2_norm().powi(2);
        assert!((derivative_energy(&f, 3) - b).abs() < 1e-12 * b);
    }

    #[test]
    fn interpolation_is_exact_for_trig_polynomials() {
        let g = GridSpec::new(PI, 16).unwrap();
        let fine = GridSpec::new(PI, 48).unwrap();
        let f = |x: f64| (3.0 * x).sin() + 0.5 * (8.0 * x).cos() + 0.2;
        let got = interpolate(&Field::from_fn(&g, f), &fine).unwrap();
        assert!(got.sup_distance(&Field::from_fn(&fine, f)) < 1e-13);
    }
}
