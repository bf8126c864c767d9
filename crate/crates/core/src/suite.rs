//! Seeded random test families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::Field;
use crate::grid::GridSpec;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mean-zero trigonometric polynomial with modes `1..=max_mode`; uniform
/// random amplitudes in `[-1, 1]`.
pub fn band_limited(grid: &GridSpec, rng: &mut impl Rng, max_mode: usize) -> Field {
    let base = std::f64::consts::PI / grid.half_length();
    let coeffs: Vec<(f64, f64, f64)> = (1..=max_mode)
        .map(|j| {
            (
                base * j as f64,
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    Field::from_fn(grid, |x| {
        coeffs
            .iter()
            .map(|(k, a, b)| a * (k * x).cos() + b * (k * x).sin())
            .sum()
    })
}

/// `a exp(-((x-c)/s)²) cos(κx + φ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussTerm {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub kappa: f64,
    pub phase: f64,
}

impl GaussTerm {
    /// Value and first two derivatives.
    pub fn jet(&self, x: f64) -> [f64; 3] {
        let z = (x - self.center) / self.width;
        let g = self.amplitude * (-z * z).exp();
        let g1 = -2.0 * z / self.width * g;
        let g2 = (4.0 * z * z - 2.0) / (self.width * self.width) * g;
        let arg = self.kappa * x + self.phase;
        let (s, c) = arg.sin_cos();
        let k = self.kappa;
        [
            g * c,
            g1 * c - k * g * s,
            g2 * c - 2.0 * k * g1 * s - k * k * g * c,
        ]
    }
}

/// Sum of (optionally modulated) Gaussian bumps with analytic derivatives.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GaussianSum {
    pub terms: Vec<GaussTerm>,
}

impl GaussianSum {
    pub fn jet(&self, x: f64) -> [f64; 3] {
        self.terms.iter().fold([0.0; 3], |acc, t| {
            let j = t.jet(x);
            [acc[0] + j[0], acc[1] + j[1], acc[2] + j[2]]
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.jet(x)[1]
    }

    pub fn sample(&self, grid: &GridSpec) -> Field {
        Field::from_fn(grid, |x| self.eval(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpSumOptions {
    pub max_terms: usize,
    /// Centers are drawn from `|c| < center_fraction · L`.
    pub center_fraction: f64,
    pub width: (f64, f64),
    pub modulated: bool,
    pub nonnegative: bool,
}

impl Default for BumpSumOptions {
    fn default() -> Self {
        Self {
            max_terms: 4,
            center_fraction: 0.25,
            width: (0.5, 3.0),
            modulated: true,
            nonnegative: false,
        }
    }
}

pub fn bump_sum(grid: &GridSpec, rng: &mut impl Rng, opts: BumpSumOptions) -> GaussianSum {
    let n = rng.random_range(1..=opts.max_terms);
    let reach = opts.center_fraction * grid.half_length();
    let terms = (0..n)
        .map(|_| {
            let sign = if opts.nonnegative || rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let modulate = opts.modulated && !opts.nonnegative && rng.random_bool(0.5);
            GaussTerm {
                amplitude: sign * rng.random_range(0.5..1.5),
                center: rng.random_range(-reach..reach),
                width: rng.random_range(opts.width.0..opts.width.1),
                kappa: if modulate { rng.random_range(0.2..2.0) } else { 0.0 },
                phase: if modulate {
                    rng.random_range(0.0..std::f64::consts::TAU)
                } else {
                    0.0
                },
            }
        })
        .collect();
    GaussianSum { terms }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jets_match_finite_differences() {
        let g = GridSpec::new(50.0, 64).unwrap();
        let mut r = rng(3);
        for _ in 0..10 {
            let s = bump_sum(&g, &mut r, BumpSumOptions::default());
            for &x in &[-3.0, 0.2, 5.5] {
                let e = 1e-5;
                let j = s.jet(x);
                assert!(((s.eval(x + e) - s.eval(x - e)) / (2.0 * e) - j[1]).abs() < 1e-7);
                assert!(((s.deriv(x + e) - s.deriv(x - e)) / (2.0 * e) - j[2]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn seeded_families_repeat() {
        let g = GridSpec::new(10.0, 64).unwrap();
        let a = band_limited(&g, &mut rng(9), 5);
        let b = band_limited(&g, &mut rng(9), 5);
        assert_eq!(a.samples(), b.samples());
        assert!(a.mean().abs() < 1e-14);
    }
}
