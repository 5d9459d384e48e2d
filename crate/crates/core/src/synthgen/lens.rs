//! Printed patterns of textured contact lenses, one parametric family per
//! brand.
//!
//! Patterns live in iris-relative polar coordinates: `s` is distance from the
//! iris centre over the iris radius and `phi` the angle. Each call to
//! [`LensPattern::new`] draws per-sample variation (rotation, period,
//! intensity) from its own seed.

use std::f64::consts::TAU;

use rand::Rng;

use super::Brand;
use crate::seed;

#[derive(Debug, Clone, Copy)]
pub struct LensPattern {
    brand: Brand,
    phase: f64,
    period: f64,
    count: f64,
    intensity: f64,
    alpha: f64,
    seed: u64,
}

#[inline]
fn frac(x: f64) -> f64 {
    x - x.floor()
}

impl LensPattern {
    pub fn new(brand: Brand, sample_seed: u64) -> Self {
        let mut rng = seed::rng(seed::derive_named(sample_seed, "lens"));
        let jitter = rng.random_range(0.92..1.08);
        let (period, count, intensity) = match brand {
            Brand::BauschLomb => (0.09, 0.0, 195.0),
            Brand::FreshLook => (0.0, 40.0, 45.0),
            Brand::CooperVision => (0.14, 0.0, 160.0),
            Brand::CibaVision => (0.085, 0.0, 70.0),
            Brand::UnitedContactLens => (0.1, 24.0, 210.0),
            Brand::JohnsonJohnson => (0.06, 0.0, 30.0),
            Brand::ClearLab => (0.25, 12.0, 210.0),
        };
        Self {
            brand,
            phase: rng.random_range(0.0..TAU),
            period: period * jitter,
            count: (count * jitter).round(),
            intensity: intensity + rng.random_range(-10.0..10.0),
            alpha: rng.random_range(0.85..0.97),
            seed: rng.random(),
        }
    }

    pub fn brand(&self) -> Brand {
        self.brand
    }

    /// Opacity in `[0, 1]` used for compositing over the iris.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Pattern intensity at `(s, phi)` where the lens print covers the
    /// point, `None` where it is clear.
    pub fn sample(&self, s: f64, phi: f64) -> Option<f64> {
        if !(0.0..=1.0).contains(&s) {
            return None;
        }
        let phi = (phi + self.phase).rem_euclid(TAU);
        let turn = phi / TAU;
        match self.brand {
            Brand::BauschLomb => {
                // Polar dot lattice with dots growing towards the limbus.
                let s0 = 0.3;
                if s < s0 - self.period / 2.0 {
                    return None;
                }
                let k = ((s - s0) / self.period).round();
                let sk = s0 + k * self.period;
                let n = (TAU * sk / self.period).round().max(6.0);
                let m = (turn * n).round();
                let dphi = (turn * n - m) / n * TAU;
                let dist = ((s - sk).powi(2) + (sk * dphi).powi(2)).sqrt();
                let radius = self.period * (0.3 + 0.3 * ((s - s0) / 0.7).clamp(0.0, 1.0));
                (dist < radius).then_some(self.intensity)
            }
            Brand::FreshLook => {
                // Dark radial spokes on the outer half.
                (s > 0.5 && frac(turn * self.count) < 0.6).then_some(self.intensity)
            }
            Brand::CooperVision => {
                // Concentric rings.
                (frac(s / self.period) < 0.5).then_some(self.intensity)
            }
            Brand::CibaVision => {
                // Cartesian grid of squares inside s < 0.85.
                if s > 0.85 {
                    return None;
                }
                let (x, y) = (s * phi.cos(), s * phi.sin());
                let fx = frac(x / self.period);
                let fy = frac(y / self.period);
                (fx < 0.85 && fy < 0.85).then_some(self.intensity)
            }
            Brand::UnitedContactLens => {
                // Dark polar checkerboard in the middle band and a bright
                // limbal ring.
                if s > 0.88 {
                    return Some(self.intensity);
                }
                if !(0.3..=0.7).contains(&s) {
                    return None;
                }
                let a = (turn * self.count).floor() as i64;
                let r = (s / self.period).floor() as i64;
                ((a + r).rem_euclid(2) == 0).then_some(50.0)
            }
            Brand::JohnsonJohnson => {
                // Dark limbal ring with speckles inside.
                if s > 0.72 {
                    return Some(self.intensity);
                }
                let (x, y) = (s * phi.cos(), s * phi.sin());
                let cx = (x / self.period).floor();
                let cy = (y / self.period).floor();
                let h = seed::lattice_value(self.seed, cx as i64 as u64, cy as i64 as u64, 7);
                (h > 0.4).then_some(self.intensity + 30.0)
            }
            Brand::ClearLab => {
                // Spiral stripes, dark in the mid-iris and bright at both
                // edges.
                let v = 35.0 + (self.intensity - 35.0) * ((s - 0.68).abs() / 0.3).min(1.0);
                (frac(turn * self.count + s / self.period) < 0.55).then_some(v)
            }
        }
    }
}
