//! Singular-integral quadratures used as independent checks of the spectral
//! operators. Everything here works on analytic functions, not on grids.
//!
//! Periodic operators are compared against kernels summed over images:
//! `K_s(d) = Σ_n |d + 2Ln|^{-s}`.

use statrs::function::gamma::gamma;

use crate::quadrature::{integrate_pieces, Tolerance};

/// Normalization in `Λ^α f(x) = C_α PV ∫ (f(x) - f(y)) / |x-y|^{1+α} dy`.
pub fn c_alpha(alpha: f64) -> f64 {
    2f64.powf(alpha) * gamma((1.0 + alpha) / 2.0)
        / (std::f64::consts::PI.sqrt() * gamma(-alpha / 2.0).abs())
}

/// Explicit images on each side before switching to the integral tail.
const IMAGES: i32 = 24;

/// `Σ_n |d + 2Ln|^{-s}` for `|d| <= L`, `s > 1`.
pub fn periodic_kernel(d: f64, s: f64, half_length: f64) -> f64 {
    d.abs().powf(-s) + image_part(d, s, half_length)
}

/// The image sum without the `n = 0` term (smooth in `d`). Explicit images up
/// to `IMAGES`, then the midpoint integral with two Euler–Maclaurin
/// corrections.
fn image_part(d: f64, s: f64, half_length: f64) -> f64 {
    let p = 2.0 * half_length;
    let mut k = 0.0;
    for n in 1..=IMAGES {
        let c = p * n as f64;
        k += (c + d).powf(-s) + (c - d).powf(-s);
    }
    let c = p * (IMAGES as f64 + 0.5);
    let integral = ((c + d).powf(1.0 - s) + (c - d).powf(1.0 - s)) / (p * (s - 1.0));
    let d1 = -s * p * ((c + d).powf(-s - 1.0) + (c - d).powf(-s - 1.0));
    let d3 = -s * (s + 1.0) * (s + 2.0) * p.powi(3) * ((c + d).powf(-s - 3.0) + (c - d).powf(-s - 3.0));
    k + integral + d1 / 24.0 - 7.0 * d3 / 5760.0
}

/// Wraps `y` into `[-L, L)`.
pub fn wrap(y: f64, half_length: f64) -> f64 {
    let p = 2.0 * half_length;
    (y + half_length).rem_euclid(p) - half_length
}

/// Inner radius below which paired integrands are replaced by their
/// second-order Taylor form.
pub const TAYLOR_RADIUS: f64 = 1e-3;

fn tol() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-11,
        max_intervals: 20_000,
    }
}

fn breaks(outer: f64) -> Vec<f64> {
    let mut b = vec![TAYLOR_RADIUS];
    let mut r = 0.01;
    while r < outer {
        b.push(r);
        r *= 4.0;
    }
    b.push(outer);
    b
}

/// Periodic `Λ^α f(x)` for an `2L`-periodic (or box-localized, wrapped) `f`
/// given with its second derivative at `x`.
pub fn frac_lap_periodic(f: &dyn Fn(f64) -> f64, f2_at_x: f64, x: f64, alpha: f64, half_length: f64) -> f64 {
    let s = 1.0 + alpha;
    let fx = f(x);
    let pair = |d: f64| 2.0 * fx - f(wrap(x + d, half_length)) - f(wrap(x - d, half_length));
    let near = -f2_at_x * TAYLOR_RADIUS.powf(2.0 - alpha) / (2.0 - alpha);
    let near_img = integrate_pieces(|d| pair(d) * image_part(d, s, half_length), &[0.0, TAYLOR_RADIUS], tol());
    let far = integrate_pieces(|d| pair(d) * periodic_kernel(d, s, half_length), &breaks(half_length), tol());
    c_alpha(alpha) * (near + near_img.value + far.value)
}

/// `c₀/w(x) ∫ (w(x) - w(y)) f(y) |x-y|^{-1-α} dy` with the periodic kernel;
/// `w` and `f` come as 2-jets `[v, v', v'']`.
pub fn weighted_commutator_periodic(
    w: &dyn Fn(f64) -> [f64; 3],
    f: &dyn Fn(f64) -> [f64; 3],
    x: f64,
    alpha: f64,
    half_length: f64,
) -> f64 {
    let s = 1.0 + alpha;
    let wx = w(x);
    let fx = f(x);
    let one = |y: f64| {
        let y = wrap(y, half_length);
        (wx[0] - w(y)[0]) * f(y)[0]
    };
    // Paired integrand ≈ -(2w'f' + w''f) d² near d = 0.
    let c2 = -(2.0 * wx[1] * fx[1] + wx[2] * fx[0]);
    let near_main = c2 * TAYLOR_RADIUS.powf(2.0 - alpha) / (2.0 - alpha);
    let near_img = integrate_pieces(
        |d| (one(x + d) + one(x - d)) * image_part(d, s, half_length),
        &[0.0, TAYLOR_RADIUS],
        tol(),
    );
    let far = integrate_pieces(
        |d| (one(x + d) + one(x - d)) * periodic_kernel(d, s, half_length),
        &breaks(half_length),
        tol(),
    );
    c_alpha(alpha) * (near_main + near_img.value + far.value) / wx[0]
}

/// `(1/π) ∫_0^2 α(d)/d (f(x+d) - f(x-d)) dd` for an analytic `f`.
pub fn truncated_hilbert_at(f: &dyn Fn(f64) -> f64, f1_at_x: f64, x: f64, cutoff: &dyn Fn(f64) -> f64) -> f64 {
    let g = |d: f64| cutoff(d) * (f(x + d) - f(x - d)) / d;
    let near = 2.0 * f1_at_x * TAYLOR_RADIUS;
    let far = integrate_pieces(g, &[TAYLOR_RADIUS, 0.5, 1.0, 1.5, 2.0], tol());
    (near + far.value) / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_alpha_values() {
        assert!((c_alpha(1.0) - 1.0 / std::f64::consts::PI).abs() < 1e-14);
        // α = 1/2 against an independent evaluation of the closed form.
        assert!((c_alpha(0.5) - 0.199_471_140_200_716_3).abs() < 1e-9);
    }

    #[test]
    fn periodic_kernel_alpha_one_closed_form() {
        let l = 5.0;
        for &d in &[0.3, 1.7, 4.9] {
            let exact = (std::f64::consts::PI / (2.0 * l)).powi(2) / (std::f64::consts::PI * d / (2.0 * l)).sin().powi(2);
            let got = periodic_kernel(d, 2.0, l);
            assert!((got - exact).abs() < 1e-10 * exact, "{got} vs {exact}");
        }
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap(0.5, 1.0), 0.5);
        assert!((wrap(1.5, 1.0) + 0.5).abs() < 1e-15);
        assert!((wrap(-1.5, 1.0) - 0.5).abs() < 1e-15);
    }
}
