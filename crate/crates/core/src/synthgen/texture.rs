//! Identity texture: multi-octave value noise on the normalized
//! (radius, angle) rubber sheet, periodic in angle.

use std::f64::consts::TAU;

use crate::seed::lattice_value;

/// (angular cells, radial cells, amplitude) per octave. Angular cell counts
/// dominate so the field shows radial streaks like iris stroma.
const OCTAVES: [(u32, u32, f64); 4] = [(20, 3, 1.0), (40, 6, 0.6), (80, 10, 0.4), (160, 4, 0.3)];

/// Scale that brings the summed noise to a standard deviation near 0.35.
const NORMALIZE: f64 = 0.62;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IrisTexture {
    seed: u64,
}

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

impl IrisTexture {
    pub fn new(identity: u64) -> Self {
        Self { seed: identity }
    }

    /// Texture value at normalized radius `rho` in `[0, 1]` and angle
    /// `theta` (radians). Roughly within `[-1, 1]`.
    pub fn value(&self, rho: f64, theta: f64) -> f64 {
        let a = theta.rem_euclid(TAU) / TAU;
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (o, &(n_ang, n_rad, amp)) in OCTAVES.iter().enumerate() {
            let u = a * f64::from(n_ang);
            let v = rho.clamp(0.0, 1.0) * f64::from(n_rad);
            let i0 = u.floor();
            let j0 = v.floor();
            let fu = fade(u - i0);
            let fv = fade(v - j0);
            let i0 = (i0 as u64) % u64::from(n_ang);
            let i1 = (i0 + 1) % u64::from(n_ang);
            let j0 = j0 as u64;
            let j1 = j0 + 1;
            let o = o as u64;
            let l = |i, j| lattice_value(self.seed, o, i, j);
            let top = l(i0, j0) + (l(i1, j0) - l(i0, j0)) * fu;
            let bottom = l(i0, j1) + (l(i1, j1) - l(i0, j1)) * fu;
            acc += amp * (top + (bottom - top) * fv);
            norm += amp;
        }
        acc / norm / NORMALIZE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_in_angle_and_deterministic() {
        let t = IrisTexture::new(99);
        for k in 0..20 {
            let rho = k as f64 / 19.0;
            assert!((t.value(rho, 0.3) - t.value(rho, 0.3 + TAU)).abs() < 1e-9);
            assert!((t.value(rho, 0.0) - t.value(rho, TAU - 1e-12)).abs() < 1e-6);
        }
        assert_eq!(t.value(0.5, 1.0), IrisTexture::new(99).value(0.5, 1.0));
    }

    #[test]
    fn distinct_identities_are_uncorrelated() {
        let (a, b) = (IrisTexture::new(1), IrisTexture::new(2));
        let mut sab = 0.0;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        for i in 0..64 {
            for j in 0..256 {
                let rho = (i as f64 + 0.5) / 64.0;
                let th = j as f64 / 256.0 * TAU;
                let (x, y) = (a.value(rho, th), b.value(rho, th));
                sab += x * y;
                saa += x * x;
                sbb += y * y;
            }
        }
        let r = sab / (saa * sbb).sqrt();
        assert!(r.abs() < 0.2, "correlation {r}");
        let sd = (saa / (64.0 * 256.0)).sqrt();
        assert!((0.15..0.8).contains(&sd), "std {sd}");
    }
}
