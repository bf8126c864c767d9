//! The compactly supported bump `exp(-1/(1-x^2))` and cutoffs built from it.

use std::sync::OnceLock;

use crate::quadrature::{integrate, Tolerance};

/// Unnormalized bump, supported on `(-1, 1)`.
pub fn raw_bump(x: f64) -> f64 {
    let s = 1.0 - x * x;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// `∫_{-1}^{1} exp(-1/(1-x^2)) dx`, cached.
pub fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        integrate(raw_bump, -1.0, 1.0, Tolerance::new(1e-15, 1e-14)).value
    })
}

/// Unit-mass even bump `φ` on `(-1, 1)`.
pub fn bump(x: f64) -> f64 {
    raw_bump(x) / bump_mass()
}

/// `φ_η(x) = φ(x/η)/η`.
pub fn scaled_bump(x: f64, eta: f64) -> f64 {
    bump(x / eta) / eta
}

const TABLE_SIZE: usize = 2048;

/// Cumulative integral of `φ` on a uniform table over [-1, 1].
fn cumulative_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let step = 2.0 / TABLE_SIZE as f64;
        let mut table = Vec::with_capacity(TABLE_SIZE + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for i in 0..TABLE_SIZE {
            let a = -1.0 + i as f64 * step;
            acc += integrate(bump, a, a + step, Tolerance::new(1e-17, 1e-14)).value;
            table.push(acc);
        }
        // Pin the far end exactly to 1.
        let total = *table.last().unwrap();
        table.iter_mut().for_each(|v| *v /= total);
        table
    })
}

/// Smooth monotone step: 0 for `t <= -1`, 1 for `t >= 1`, `S' = φ`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= -1.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let table = cumulative_table();
    let step = 2.0 / TABLE_SIZE as f64;
    let pos = (t + 1.0) / step;
    let i = (pos.floor() as usize).min(TABLE_SIZE - 1);
    let a = -1.0 + i as f64 * step;
    let s = (t - a) / step;
    // Cubic Hermite with exact derivative values.
    let (y0, y1) = (table[i], table[i + 1]);
    let (d0, d1) = (bump(a) * step, bump(a + step) * step);
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1).clamp(0.0, 1.0)
}

/// Even smooth cutoff equal to 1 on `|x| <= inner` and 0 on `|x| >= outer`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothCutoff {
    pub inner: f64,
    pub outer: f64,
}

impl SmoothCutoff {
    /// The cutoff used by the truncated Hilbert transform and by the
    /// data truncation `ψ`: plateau on `[-1, 1]`, support in `[-2, 2]`.
    pub const UNIT: SmoothCutoff = SmoothCutoff {
        inner: 1.0,
        outer: 2.0,
    };

    pub fn new(inner: f64, outer: f64) -> Self {
        assert!(0.0 <= inner && inner < outer);
        Self { inner, outer }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = x.abs();
        let t = 2.0 * (r - self.inner) / (self.outer - self.inner) - 1.0;
        1.0 - smooth_step(t)
    }

    /// `ψ(x/R)`.
    pub fn rescaled(&self, x: f64, r: f64) -> f64 {
        self.eval(x / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_has_unit_mass() {
        let m = integrate(bump, -1.0, 1.0, Tolerance::new(1e-15, 1e-14)).value;
        assert!((m - 1.0).abs() < 1e-12);
        assert!((bump_mass() - 0.443_993_816_168_079_4).abs() < 1e-12);
    }

    #[test]
    fn smooth_step_matches_quadrature() {
        for &t in &[-0.9, -0.3, 0.0, 0.41, 0.87] {
            let direct = integrate(bump, -1.0, t, Tolerance::new(1e-16, 1e-14)).value;
            assert!((smooth_step(t) - direct).abs() < 1e-12, "t = {t}");
        }
        assert!((smooth_step(0.0) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn cutoff_support_and_plateau() {
        let c = SmoothCutoff::UNIT;
        for i in 0..=400 {
            let x = -3.0 + 6.0 * i as f64 / 400.0;
            let v = c.eval(x);
            assert!((0.0..=1.0).contains(&v));
            assert_eq!(v, c.eval(-x));
            if x.abs() <= 1.0 {
                assert_eq!(v, 1.0);
            }
            if x.abs() >= 2.0 {
                assert_eq!(v, 0.0);
            }
        }
    }
}
