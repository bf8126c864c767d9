//! Commutators of `Λ^s` with the weights, the truncated Hilbert transform and
//! the pointwise bound on `Λ w_β`.

use serde::{Deserialize, Serialize};

use crate::bump::SmoothCutoff;
use crate::error::{check_param, Error, Result};
use crate::field::Field;
use crate::quadrature::{integrate_pieces, Tolerance};
use crate::spectral::{derivative, lambda_power};
use crate::weights::{weighted_lp_norm, WeightSpec, RATIO_FLOOR};

/// `α_cut`: 1 on `|x| <= 1`, 0 on `|x| >= 2`. The plateau cutoff `ψ` of the
/// truncation argument has the same profile.
pub const CUTOFF: SmoothCutoff = SmoothCutoff::UNIT;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `|x-y| < 2`
    Near,
    /// `|x-y| >= 2` and `|x-y| <= max(|x|,|y|)/2`
    Mid,
    /// `|x-y| >= 2` and `|x-y| > max(|x|,|y|)/2`
    Far,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionSplit {
    pub x: f64,
}

impl RegionSplit {
    pub fn classify(&self, y: f64) -> Region {
        let d = (self.x - y).abs();
        if d < 2.0 {
            Region::Near
        } else if d <= 0.5 * self.x.abs().max(y.abs()) {
            Region::Mid
        } else {
            Region::Far
        }
    }
}

/// `(1/w)(Λ^{1/2}(w f) - w Λ^{1/2} f)`.
pub fn commutator_half(f: &Field, w: &WeightSpec) -> Result<Field> {
    weighted_commutator(f, w.w_samples(), 0.5)
}

/// `(1/γ)(Λ(γ f) - γ Λ f)` with `γ = w^{1/2}`.
pub fn commutator_full(f: &Field, w: &WeightSpec) -> Result<Field> {
    weighted_commutator(f, w.gamma_samples(), 1.0)
}

fn weighted_commutator(f: &Field, m: &[f64], s: f64) -> Result<Field> {
    if f.len() != m.len() {
        return Err(Error::GridMismatch);
    }
    let a = lambda_power(&f.mul_samples(m), s);
    let b = lambda_power(f, s).mul_samples(m);
    let out = a
        .samples()
        .iter()
        .zip(b.samples())
        .zip(m)
        .map(|((a, b), m)| (a - b) / m)
        .collect();
    Field::from_samples(f.grid(), out)
}

/// `H_# f(x) = (1/π) PV ∫ α_cut(x-y) f(y) / (y-x) dy`, the Hilbert kernel
/// (same sign as [`crate::spectral::hilbert`]) cut off to `|x-y| < 2`.
///
/// Odd pairing turns the principal value into
/// `(1/π) ∫_0^2 α(d)(f(x+d) - f(x-d))/d dd`, summed by the trapezoid rule on
/// the grid; the `d = 0` node contributes `2 f'(x)` (spectral derivative).
pub fn truncated_hilbert(f: &Field) -> Field {
    let grid = f.grid();
    let n = f.len();
    let h = grid.spacing();
    let reach = ((2.0 / h).ceil() as usize).min(n / 2 - 1);
    let kernel: Vec<f64> = (1..=reach)
        .map(|m| {
            let d = m as f64 * h;
            CUTOFF.eval(d) / d
        })
        .collect();
    let df = derivative(f);
    let v = f.samples();
    let out = (0..n)
        .map(|i| {
            let paired: f64 = kernel
                .iter()
                .enumerate()
                .map(|(j, k)| {
                    let m = j + 1;
                    k * (v[(i + m) % n] - v[(i + n - m) % n])
                })
                .sum();
            h * (df.samples()[i] + paired) / std::f64::consts::PI
        })
        .collect();
    Field::from_samples(grid, out).expect("same length")
}

/// Quadrature controls for [`lambda_of_weight`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaQuadrature {
    pub rel_tol: f64,
    /// Numerical integration runs to `far`; beyond it the asymptotic tail of
    /// `w_β` is integrated in closed form.
    pub far: f64,
    /// Inner radius replaced by the Taylor form `-w''(x) d²`.
    pub inner: f64,
}

impl Default for LambdaQuadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            far: 1e4,
            inner: 1e-3,
        }
    }
}

impl LambdaQuadrature {
    pub fn refined() -> Self {
        Self {
            rel_tol: 1e-12,
            far: 1e5,
            inner: 2.5e-4,
        }
    }
}

/// `Λ w_β(x) = (1/π) PV ∫ (w(x) - w(y)) / |x-y|² dy` over the whole line.
pub fn lambda_of_weight(w: &WeightSpec, x: f64) -> Result<f64> {
    lambda_of_weight_with(w, x, LambdaQuadrature::default())
}

pub fn lambda_of_weight_with(w: &WeightSpec, x: f64, q: LambdaQuadrature) -> Result<f64> {
    let window = 0.5 * w.grid().half_length();
    check_param("x", x, x.abs() <= window, "outside the trusted window |x| <= L/2")?;
    let beta = w.beta();
    let wx = w.w(x);
    let near = -w.d2w(x) * q.inner;
    let mut breaks = vec![q.inner];
    let mut r = 0.01;
    while r < q.far {
        if r > q.inner {
            breaks.push(r);
        }
        r *= 4.0;
    }
    if x.abs() > q.inner {
        breaks.push(x.abs());
    }
    breaks.push(q.far);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let tol = Tolerance {
        abs: 1e-15,
        rel: q.rel_tol,
        max_intervals: 20_000,
    };
    let mid = integrate_pieces(|d| (2.0 * wx - w.w(x + d) - w.w(x - d)) / (d * d), &breaks, tol);
    // w(x+d) + w(x-d) = d^{-β}(2 + β((β+1)x² - 1)/d² + O(d^{-4}))
    let y = q.far;
    let tail = 2.0 * wx / y
        - 2.0 * y.powf(-1.0 - beta) / (1.0 + beta)
        - beta * ((beta + 1.0) * x * x - 1.0) * y.powf(-3.0 - beta) / (3.0 + beta);
    Ok((near + mid.value + tail) / std::f64::consts::PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightBound {
    /// `sup |Λw(x)| / w(x)` over the sampled window.
    pub ratio: f64,
    pub witness_x: f64,
    /// Largest `|Λw(x) - Λw(-x)|` over the samples.
    pub asymmetry: f64,
}

/// Samples `|Λ w_β| / w_β` at `points` equispaced nodes of `[-L/2, L/2]`.
pub fn lambda_weight_bound(w: &WeightSpec, points: usize, q: LambdaQuadrature) -> Result<WeightBound> {
    if points < 2 {
        return Err(Error::Degenerate("need at least two sample points".into()));
    }
    let a = 0.5 * w.grid().half_length();
    let xs: Vec<f64> = (0..points)
        .map(|i| -a + 2.0 * a * i as f64 / (points - 1) as f64)
        .collect();
    let vals: Vec<f64> = xs
        .iter()
        .map(|&x| lambda_of_weight_with(w, x, q))
        .collect::<Result<_>>()?;
    let mut out = WeightBound {
        ratio: 0.0,
        witness_x: 0.0,
        asymmetry: 0.0,
    };
    for (i, (&x, &v)) in xs.iter().zip(&vals).enumerate() {
        let r = v.abs() / w.w(x);
        if r > out.ratio {
            out.ratio = r;
            out.witness_x = x;
        }
        out.asymmetry = out.asymmetry.max((v - vals[points - 1 - i]).abs());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationScaling {
    pub radii: Vec<f64>,
    /// `‖[Λ^{1/2}, ψ_R] θ0‖_{L²(w)}` per radius.
    pub norms: Vec<f64>,
    /// Least-squares slope of `log norm` against `log R`.
    pub slope: f64,
}

/// `Λ^{1/2}(ψ_R θ0) - ψ_R Λ^{1/2} θ0` with `ψ_R(x) = ψ(x/R)`.
pub fn truncation_commutator(theta0: &Field, radius: f64) -> Field {
    let psi: Vec<f64> = theta0
        .grid()
        .coordinates()
        .iter()
        .map(|&x| CUTOFF.rescaled(x, radius))
        .collect();
    lambda_power(&theta0.mul_samples(&psi), 0.5).sub(&lambda_power(theta0, 0.5).mul_samples(&psi))
}

pub fn truncation_commutator_scaling(theta0: &Field, w: &WeightSpec, radii: &[f64]) -> Result<TruncationScaling> {
    if radii.len() < 2 || radii.windows(2).any(|p| !(p[1] > p[0])) || radii[0] <= 0.0 {
        return Err(Error::Degenerate("radii must be positive and increasing, at least two".into()));
    }
    let quarter = 0.25 * theta0.grid().half_length();
    check_param("radius", radii[radii.len() - 1], radii[radii.len() - 1] <= quarter, "largest radius must be <= L/4")?;
    let base = weighted_lp_norm(theta0, 2.0, w)?;
    if base <= RATIO_FLOOR {
        return Err(Error::Degenerate("theta0 vanishes".into()));
    }
    let norms: Vec<f64> = radii
        .iter()
        .map(|&r| weighted_lp_norm(&truncation_commutator(theta0, r), 2.0, w))
        .collect::<Result<_>>()?;
    if norms.iter().any(|&v| v <= RATIO_FLOOR * base) {
        return Err(Error::Degenerate("commutator norm underflows".into()));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    Ok(TruncationScaling {
        radii: radii.to_vec(),
        norms,
        slope: least_squares_slope(&xs, &ys),
    })
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `‖op(f)‖_{L^p(w)} / ‖f‖_{L^p(w)}`.
pub fn operator_ratio(op: impl Fn(&Field) -> Result<Field>, f: &Field, p: f64, w: &WeightSpec) -> Result<f64> {
    let den = weighted_lp_norm(f, p, w)?;
    if den <= RATIO_FLOOR {
        return Err(Error::Degenerate("zero field".into()));
    }
    Ok(weighted_lp_norm(&op(f)?, p, w)? / den)
}

/// The half-order commutator is claimed on `L^p(w_β)` only when
/// `3/2 - β(1 - 1/p) > 1`.
pub fn half_commutator_admissible(beta: f64, p: f64) -> bool {
    1.5 - beta * (1.0 - 1.0 / p) > 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::oracle;
    use crate::spectral::hilbert;
    use crate::suite::{bump_sum, rng, BumpSumOptions};

    #[test]
    fn regions_partition() {
        let s = RegionSplit { x: 10.0 };
        assert_eq!(s.classify(11.0), Region::Near);
        assert_eq!(s.classify(7.0), Region::Mid);
        assert_eq!(s.classify(-3.0), Region::Far);
    }

    #[test]
    fn commutators_vanish_for_unit_weight() {
        let g = GridSpec::new(50.0, 512).unwrap();
        let f = bump_sum(&g, &mut rng(1), BumpSumOptions::default()).sample(&g);
        let w = WeightSpec::unit(&g);
        assert!(commutator_half(&f, &w).unwrap().sup_norm() < 1e-10);
        assert!(commutator_full(&f, &w).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn truncated_hilbert_of_constant_and_near_support() {
        let g = GridSpec::new(50.0, 8192).unwrap();
        assert!(truncated_hilbert(&Field::constant(&g, 3.0)).sup_norm() < 1e-12);
        // Bump supported in |x| < 1/2: for |x| < 1/2 every |x-y| < 1, where
        // the cutoff is 1. The residual is the periodic part of the spectral H.
        let f = Field::from_fn(&g, |x| crate::bump::raw_bump(2.0 * x));
        let a = truncated_hilbert(&f);
        let b = hilbert(&f);
        for i in 0..g.n_points() {
            if g.x(i).abs() < 0.5 {
                assert!((a.samples()[i] - b.samples()[i]).abs() < 1e-4, "x = {}", g.x(i));
            }
        }
    }

    #[test]
    fn truncated_hilbert_matches_quadrature_at_origin() {
        let g = GridSpec::new(20.0, 4096).unwrap();
        let f = |x: f64| x * (-x * x).exp() + 0.3 * (2.0 * x).sin() * (-0.5 * x * x).exp();
        let df0 = 1.0 + 0.6;
        let field = Field::from_fn(&g, f);
        let got = truncated_hilbert(&field).samples()[g.nearest_index(0.0)];
        let oracle = oracle::truncated_hilbert_at(&f, df0, 0.0, &|d| CUTOFF.eval(d));
        assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn lambda_weight_is_even_and_positive_at_origin() {
        let g = GridSpec::new(50.0, 64).unwrap();
        let w = WeightSpec::new(0.5, &g).unwrap();
        assert!(lambda_of_weight(&w, 0.0).unwrap() > 0.0);
        for &x in &[0.7, 3.0, 20.0] {
            let a = lambda_of_weight(&w, x).unwrap();
            let b = lambda_of_weight(&w, -x).unwrap();
            assert!((a - b).abs() < 1e-8);
        }
        assert!(lambda_of_weight(&w, 30.0).is_err());
    }

    #[test]
    fn admissibility() {
        assert!(half_commutator_admissible(0.5, 3.0));
        assert!(!half_commutator_admissible(0.75, 3.0));
        assert!(half_commutator_admissible(0.75, 2.0));
    }
}
