//! The weights `w_β = (1+x²)^{-β/2}`, weighted norms, the maximal function,
//! the `A_p` product and the Hedberg / Gagliardo–Nirenberg checkers.

use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::spectral::{derivative, hilbert, lambda_power};

/// Floor applied to every ratio denominator.
pub const RATIO_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct WeightSpec {
    beta: f64,
    grid: GridSpec,
    w: Vec<f64>,
    gamma: Vec<f64>,
}

impl WeightSpec {
    pub fn new(beta: f64, grid: &GridSpec) -> Result<Self> {
        check_param("beta", beta, beta > 0.0 && beta < 1.0, "must lie in (0, 1)")?;
        Ok(Self::build(beta, grid))
    }

    /// `w ≡ 1` (the `β = 0` member); for harness comparisons with unweighted
    /// quantities.
    pub fn unit(grid: &GridSpec) -> Self {
        Self::build(0.0, grid)
    }

    fn build(beta: f64, grid: &GridSpec) -> Self {
        let w: Vec<f64> = grid.coordinates().iter().map(|&x| weight(beta, x)).collect();
        let gamma = grid
            .coordinates()
            .iter()
            .map(|&x| (1.0 + x * x).powf(-beta / 4.0))
            .collect();
        Self {
            beta,
            grid: grid.clone(),
            w,
            gamma,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn w_samples(&self) -> &[f64] {
        &self.w
    }

    pub fn gamma_samples(&self) -> &[f64] {
        &self.gamma
    }

    pub fn w(&self, x: f64) -> f64 {
        weight(self.beta, x)
    }

    pub fn dw(&self, x: f64) -> f64 {
        power_jet(self.beta, x)[1]
    }

    pub fn d2w(&self, x: f64) -> f64 {
        power_jet(self.beta, x)[2]
    }

    /// `[w, w', w'']` at `x`.
    pub fn w_jet(&self, x: f64) -> [f64; 3] {
        power_jet(self.beta, x)
    }

    /// `[γ, γ', γ'']` at `x`, `γ = w^{1/2}`.
    pub fn gamma_jet(&self, x: f64) -> [f64; 3] {
        power_jet(self.beta / 2.0, x)
    }

    pub fn w_field(&self) -> Field {
        Field::from_samples(&self.grid, self.w.clone()).expect("weight sampled on its own grid")
    }

    pub fn gamma_field(&self) -> Field {
        Field::from_samples(&self.grid, self.gamma.clone()).expect("weight sampled on its own grid")
    }

    /// `sup |w'| + |w''|` over `w`, on the grid.
    pub fn derivative_bound(&self) -> f64 {
        self.grid
            .coordinates()
            .iter()
            .map(|&x| (self.dw(x).abs() + self.d2w(x).abs()) / self.w(x))
            .fold(0.0, f64::max)
    }

    /// Analytic constants of the pointwise region estimates.
    pub fn region_constants(&self) -> RegionConstants {
        let b = self.beta;
        let spread1 = (1.5 + 5f64.sqrt() / 2.0).powf(b / 2.0);
        let spread2 = (3.0 + 2.0 * 2f64.sqrt()).powf(b / 2.0);
        RegionConstants {
            near: 0.5 * b * spread2,
            far: 4.25f64.powf(b / 2.0),
            taylor: (0.5 * b * spread1).max(0.5 * b * (spread2 + 1.0)),
        }
    }
}

fn weight(beta: f64, x: f64) -> f64 {
    (1.0 + x * x).powf(-beta / 2.0)
}

fn power_jet(b: f64, x: f64) -> [f64; 3] {
    let s = 1.0 + x * x;
    let v = s.powf(-b / 2.0);
    [v, -b * x * v / s, b * v / (s * s) * ((b + 1.0) * x * x - 1.0)]
}

/// Constants for the pointwise estimates
///
/// * `|w(x) - w(y)| <= near |x-y| w(x)` when `|x-y| < 2`,
/// * `w(x)^{-1} <= far |x-y|^β` on the far-diagonal region,
/// * `|w(y) - w(x) + α(x-y)(x-y)w'(x)| <= taylor |x-y|² w(x)` when `|x-y| < 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionConstants {
    pub near: f64,
    pub far: f64,
    pub taylor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub p: f64,
    pub sobolev_order: f64,
    pub value: f64,
}

fn same_grid(f: &Field, w: &WeightSpec) -> Result<()> {
    if f.grid() == w.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `(∫|f|^p w)^{1/p}` by the periodic trapezoid rule.
pub fn weighted_lp_norm(f: &Field, p: f64, w: &WeightSpec) -> Result<f64> {
    check_param("p", p, p >= 1.0, "must be at least 1")?;
    same_grid(f, w)?;
    let h = f.grid().spacing();
    let s: f64 = f
        .samples()
        .iter()
        .zip(&w.w)
        .map(|(v, wi)| v.abs().powf(p) * wi)
        .sum();
    Ok((h * s).powf(1.0 / p))
}

/// `‖Λ^s f‖_{L^p(w)}` for any `s >= 0`.
pub fn weighted_seminorm(f: &Field, s: f64, p: f64, w: &WeightSpec) -> Result<f64> {
    check_param("s", s, s >= 0.0, "must be nonnegative")?;
    if s == 0.0 {
        weighted_lp_norm(f, p, w)
    } else {
        weighted_lp_norm(&lambda_power(f, s), p, w)
    }
}

/// `(‖f‖²_{L²(w)} + ‖Λ^s f‖²_{L²(w)})^{1/2}` for `s ∈ {1/2, 1}`.
pub fn weighted_sobolev_norm(f: &Field, s: f64, w: &WeightSpec) -> Result<WeightedNorm> {
    check_param("s", s, s == 0.5 || s == 1.0, "Sobolev order must be 1/2 or 1")?;
    let a = weighted_lp_norm(f, 2.0, w)?;
    let b = weighted_seminorm(f, s, 2.0, w)?;
    Ok(WeightedNorm {
        p: 2.0,
        sobolev_order: s,
        value: a.hypot(b),
    })
}

/// Periodic prefix sums over three copies of `v`, so windows of half-width up
/// to `N` cells can be read off directly.
struct WindowSums {
    n: usize,
    prefix: Vec<f64>,
}

impl WindowSums {
    fn new(v: &[f64]) -> Self {
        let n = v.len();
        let mut prefix = Vec::with_capacity(3 * n + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for k in 0..3 * n {
            acc += v[k % n];
            prefix.push(acc);
        }
        Self { n, prefix }
    }

    /// Trapezoid sum over cells `i-m ..= i+m`, in units of `h`
    /// (`m <= N`).
    fn trapezoid(&self, i: usize, m: usize) -> f64 {
        let lo = self.n + i - m;
        let hi = self.n + i + m;
        let full = self.prefix[hi + 1] - self.prefix[lo];
        let ends = (self.prefix[lo + 1] - self.prefix[lo]) + (self.prefix[hi + 1] - self.prefix[hi]);
        full - 0.5 * ends
    }
}

/// Radii ladder `h, 2h, 4h, ...` up to `2L`, in cells.
fn dyadic_cells(n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut m = 1;
    while m < n {
        out.push(m);
        m *= 2;
    }
    out.push(n);
    out
}

fn maximal_over(f: &Field, cells: &[usize]) -> Field {
    let abs: Vec<f64> = f.samples().iter().map(|v| v.abs()).collect();
    let sums = WindowSums::new(&abs);
    let out = (0..abs.len())
        .map(|i| {
            cells
                .iter()
                .map(|&m| sums.trapezoid(i, m) / (2 * m) as f64)
                .fold(abs[i], f64::max)
        })
        .collect();
    Field::from_samples(f.grid(), out).expect("same length")
}

/// Centered maximal function: sup over every grid radius
/// `r = mh`, `m = 1..=N`, of periodic window averages of `|f|`, and over the
/// `r -> 0` limit `|f(x)|`. Cost `O(N²)`.
pub fn maximal_function(f: &Field) -> Field {
    let cells: Vec<usize> = (1..=f.len()).collect();
    maximal_over(f, &cells)
}

/// As [`maximal_function`] over the dyadic ladder `h, 2h, ..., 2L` only; within
/// a factor 2 of the dense value, `O(N log N)`.
pub fn maximal_function_dyadic(f: &Field) -> Field {
    maximal_over(f, &dyadic_cells(f.len()))
}

/// Largest `A_p` product `(avg w)(avg w^{-1/(p-1)})^{p-1}` over grid centers
/// and dyadic radii.
pub fn ap_constant(w: &WeightSpec, p: f64) -> Result<f64> {
    check_param("p", p, p > 1.0, "must exceed 1")?;
    let dual: Vec<f64> = w.w.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
    let sw = WindowSums::new(&w.w);
    let sd = WindowSums::new(&dual);
    let cells = dyadic_cells(w.w.len());
    let mut best: f64 = 0.0;
    for i in 0..w.w.len() {
        for &m in &cells {
            let len = (2 * m) as f64;
            let a = sw.trapezoid(i, m) / len;
            let b = sd.trapezoid(i, m) / len;
            best = best.max(a * b.powf(p - 1.0));
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioWitness {
    pub ratio: f64,
    pub x: f64,
}

/// `sup_x |Λ^γ f| / ((M Λ^δ f)^{γ/δ} ‖f‖_∞^{1-γ/δ})` with its maximizer.
pub fn hedberg_check(f: &Field, gamma: f64, delta: f64) -> Result<RatioWitness> {
    check_param("gamma", gamma, gamma > 0.0 && gamma < delta, "need 0 < gamma < delta")?;
    check_param("delta", delta, delta <= 2.0, "need delta <= 2")?;
    let sup = f.sup_norm();
    if sup == 0.0 {
        return Err(Error::Degenerate("Hedberg check of the zero field".into()));
    }
    let num = lambda_power(f, gamma);
    let max = maximal_function(&lambda_power(f, delta));
    let q = gamma / delta;
    let scale = sup.powf(1.0 - q);
    let grid = f.grid();
    let (i, ratio) = num
        .samples()
        .iter()
        .zip(max.samples())
        .map(|(a, m)| a.abs() / (m.powf(q) * scale).max(RATIO_FLOOR))
        .enumerate()
        .fold((0, 0.0), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
    Ok(RatioWitness { ratio, x: grid.x(i) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GnInequality {
    /// `‖Λ^{1/2}f‖_{L⁴(w)} ≲ ‖f‖_∞^{1/2} ‖Λf‖_{L²(w)}^{1/2}`
    B1,
    /// `‖Λf‖_{L³(w)} ≲ ‖f‖_∞^{1/3} ‖Λ^{3/2}f‖_{L²(w)}^{2/3}`
    B,
    /// `‖∂_x f‖_{L³(w)} ≲ ‖f‖_∞^{1/3} ‖Λ^{3/2}f‖_{L²(w)}^{2/3}`
    B2,
}

impl GnInequality {
    pub const ALL: [GnInequality; 3] = [GnInequality::B1, GnInequality::B, GnInequality::B2];

    pub fn id(&self) -> &'static str {
        match self {
            GnInequality::B1 => "b1",
            GnInequality::B => "b",
            GnInequality::B2 => "b2",
        }
    }
}

/// LHS / RHS of the selected interpolation inequality.
pub fn gn_check(f: &Field, w: &WeightSpec, which: GnInequality) -> Result<f64> {
    same_grid(f, w)?;
    if f.max() - f.min() <= RATIO_FLOOR * (1.0 + f.sup_norm()) {
        return Err(Error::Degenerate("constant field makes the right-hand side vanish".into()));
    }
    let sup = f.sup_norm();
    let (lhs, rhs) = match which {
        GnInequality::B1 => (
            weighted_seminorm(f, 0.5, 4.0, w)?,
            sup.sqrt() * weighted_seminorm(f, 1.0, 2.0, w)?.sqrt(),
        ),
        GnInequality::B | GnInequality::B2 => {
            let lhs = if which == GnInequality::B {
                weighted_seminorm(f, 1.0, 3.0, w)?
            } else {
                weighted_lp_norm(&derivative(f), 3.0, w)?
            };
            (lhs, sup.cbrt() * weighted_seminorm(f, 1.5, 2.0, w)?.powf(2.0 / 3.0))
        }
    };
    Ok(lhs / rhs.max(RATIO_FLOOR))
}

/// `‖Hf‖_{L^p(w)} / ‖f‖_{L^p(w)}`.
pub fn hilbert_lp_ratio(f: &Field, p: f64, w: &WeightSpec) -> Result<f64> {
    let den = weighted_lp_norm(f, p, w)?;
    if den <= RATIO_FLOOR {
        return Err(Error::Degenerate("zero field".into()));
    }
    Ok(weighted_lp_norm(&hilbert(f), p, w)? / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, Tolerance};

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(50.0, n).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = grid(64);
        assert!(WeightSpec::new(1.0, &g).is_err());
        assert!(WeightSpec::new(0.0, &g).is_err());
        let w = WeightSpec::new(0.5, &g).unwrap();
        let f = Field::constant(&g, 1.0);
        assert!(weighted_lp_norm(&f, 0.5, &w).is_err());
        assert!(weighted_sobolev_norm(&f, 0.75, &w).is_err());
        assert!(ap_constant(&w, 1.0).is_err());
        assert!(hedberg_check(&f, 1.0, 0.5).is_err());
        assert!(gn_check(&f, &w, GnInequality::B).is_err());
    }

    #[test]
    fn weight_shape() {
        let g = grid(512);
        let w = WeightSpec::new(0.75, &g).unwrap();
        assert_eq!(w.w(0.0), 1.0);
        for (wi, gi) in w.w_samples().iter().zip(w.gamma_samples()) {
            assert!(*wi > 0.0 && *wi <= 1.0);
            assert!((gi * gi - wi).abs() < 1e-14);
        }
        // radially nonincreasing from the center index
        let c = g.nearest_index(0.0);
        let s = w.w_samples();
        assert!((c..s.len() - 1).all(|i| s[i + 1] <= s[i]));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let w = WeightSpec::new(0.4, &grid(16)).unwrap();
        for &x in &[-7.0, -0.3, 0.0, 1.1, 12.0] {
            let e = 1e-5;
            let fd1 = (w.w(x + e) - w.w(x - e)) / (2.0 * e);
            let fd2 = (w.w(x + e) - 2.0 * w.w(x) + w.w(x - e)) / (e * e);
            assert!((fd1 - w.dw(x)).abs() < 1e-9);
            assert!((fd2 - w.d2w(x)).abs() < 1e-5);
        }
    }

    #[test]
    fn constant_norm_matches_quadrature() {
        let g = grid(4096);
        let w = WeightSpec::new(0.5, &g).unwrap();
        let got = weighted_lp_norm(&Field::constant(&g, 1.0), 2.0, &w).unwrap();
        let exact = integrate(|x| (1.0 + x * x).powf(-0.25), -50.0, 50.0, Tolerance::default()).value;
        assert!((got * got - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn unit_weight_single_mode() {
        let g = grid(1024);
        let k = std::f64::consts::PI / 50.0;
        let f = Field::from_fn(&g, |x| (k * x).sin());
        let w = WeightSpec::unit(&g);
        for s in [0.5, 1.0] {
            let got = weighted_sobolev_norm(&f, s, &w).unwrap().value;
            let exact = (1.0 + k.powf(2.0 * s)).sqrt() * 50f64.sqrt();
            assert!((got - exact).abs() < 1e-8 * exact);
        }
    }

    #[test]
    fn maximal_of_constant_and_indicator() {
        let g = grid(2048);
        let c = maximal_function(&Field::constant(&g, -1.5));
        assert!(c.samples().iter().all(|v| (v - 1.5).abs() < 1e-12));
        let ind = Field::from_fn(&g, |x| if x.abs() <= 1.0 { 1.0 } else { 0.0 });
        let m = maximal_function(&ind);
        let i = g.nearest_index(3.0);
        assert!((m.samples()[i] - 0.25).abs() <= 2.0 * g.spacing() / 4.0);
        let md = maximal_function_dyadic(&ind);
        assert!(md.samples()[i] <= m.samples()[i] + 1e-15);
        assert!(md.samples()[i] >= 0.5 * m.samples()[i]);
    }

    #[test]
    fn unit_weight_ap_is_one() {
        let g = grid(256);
        assert_eq!(ap_constant(&WeightSpec::unit(&g), 2.0).unwrap(), 1.0);
        let w = WeightSpec::new(0.5, &g).unwrap();
        assert!(ap_constant(&w, 2.0).unwrap() >= 1.0);
    }

    #[test]
    fn region_constants_dominate_derivative_bound() {
        let g = grid(4096);
        for beta in [0.25, 0.5, 0.75] {
            let w = WeightSpec::new(beta, &g).unwrap();
            assert!(w.derivative_bound() <= 1.5 * beta + 1e-12);
        }
    }
}
