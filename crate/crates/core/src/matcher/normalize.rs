use std::f64::consts::TAU;

use crate::error::Result;
use crate::imageio::{GrayImage, IrisGeometry};

pub const RADIAL_RES: usize = 64;
pub const ANGULAR_RES: usize = 512;
const SPECULAR: f64 = 250.0;

/// Rubber-sheet unwrapping of the iris annulus, `RADIAL_RES` rows (pupil to
/// limbus) by `ANGULAR_RES` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarIris {
    pub values: Vec<f32>,
    pub valid: Vec<bool>,
}

impl PolarIris {
    pub fn new(values: Vec<f32>, valid: Vec<bool>) -> Self {
        assert_eq!(values.len(), RADIAL_RES * ANGULAR_RES);
        assert_eq!(valid.len(), RADIAL_RES * ANGULAR_RES);
        Self { values, valid }
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f32 {
        self.values[row * ANGULAR_RES + col]
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[row * ANGULAR_RES + col]
    }

    /// Circularly shifts every row by `cols` columns: `out[c] = in[c - cols]`.
    pub fn rotated(&self, cols: i64) -> Self {
        let mut values = vec![0.0; self.values.len()];
        let mut valid = vec![false; self.valid.len()];
        for r in 0..RADIAL_RES {
            for c in 0..ANGULAR_RES {
                let src = (c as i64 - cols).rem_euclid(ANGULAR_RES as i64) as usize;
                values[r * ANGULAR_RES + c] = self.values[r * ANGULAR_RES + src];
                valid[r * ANGULAR_RES + c] = self.valid[r * ANGULAR_RES + src];
            }
        }
        Self { values, valid }
    }

    pub fn valid_fraction(&self) -> f64 {
        self.valid.iter().filter(|&&v| v).count() as f64 / self.valid.len() as f64
    }
}

/// Samples row `i` at normalized radius `(i + 0.5) / RADIAL_RES` between the
/// pupil and iris boundaries and column `j` at angle `2 pi j / ANGULAR_RES`.
/// Off-frame and specular (> 250) samples are marked invalid.
pub fn normalize(img: &GrayImage, geom: &IrisGeometry) -> Result<PolarIris> {
    geom.validate()?;
    let mut values = vec![0f32; RADIAL_RES * ANGULAR_RES];
    let mut valid = vec![false; RADIAL_RES * ANGULAR_RES];
    let dirs: Vec<_> = (0..ANGULAR_RES)
        .map(|j| geom.boundary_points(TAU * j as f64 / ANGULAR_RES as f64))
        .collect();
    for i in 0..RADIAL_RES {
        let rho = (i as f64 + 0.5) / RADIAL_RES as f64;
        for (j, &((px, py), (ix, iy))) in dirs.iter().enumerate() {
            let x = px + rho * (ix - px);
            let y = py + rho * (iy - py);
            if let Some(v) = img.sample_bilinear(x, y) {
                let k = i * ANGULAR_RES + j;
                values[k] = v as f32;
                valid[k] = v <= SPECULAR;
            }
        }
    }
    Ok(PolarIris { values, valid })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_gradient_gives_constant_rows() {
        let (cx, cy) = (200.0, 180.0);
        let img = GrayImage::from_fn(400, 360, |x, y| {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            d.min(255.0) as u8
        });
        let geom = IrisGeometry::concentric(cx, cy, 40.0, 140.0).unwrap();
        let p = normalize(&img, &geom).unwrap();
        for r in 0..RADIAL_RES {
            let row: Vec<f32> = (0..ANGULAR_RES).map(|c| p.value(r, c)).collect();
            let lo = row.iter().cloned().fold(f32::INFINITY, f32::min);
            let hi = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
            assert!(hi - lo <= 2.0, "row {r} spread {}", hi - lo);
            let expected = 40.0 + (r as f32 + 0.5) / RADIAL_RES as f32 * 100.0;
            assert!((row[0] - expected).abs() <= 1.0, "row {r}: {} vs {expected}", row[0]);
        }
        assert!(p.valid.iter().all(|&v| v));
    }

    #[test]
    fn off_frame_angular_range_is_invalid() {
        // Iris centre 50 px from the left edge: a ray at angle theta leaves
        // the frame (x < 0) once 50 + r cos(theta) < 0.
        let img = GrayImage::filled(300, 300, 100);
        let geom = IrisGeometry::concentric(50.0, 150.0, 30.0, 100.0).unwrap();
        let p = normalize(&img, &geom).unwrap();
        for r in 0..RADIAL_RES {
            let rho = (r as f64 + 0.5) / RADIAL_RES as f64;
            let radius = 30.0 + rho * 70.0;
            for c in 0..ANGULAR_RES {
                let th = TAU * c as f64 / ANGULAR_RES as f64;
                let x = 50.0 + radius * th.cos();
                // Skip samples within rounding distance of the border.
                if x.abs() < 1e-6 {
                    continue;
                }
                assert_eq!(p.is_valid(r, c), x >= 0.0, "row {r} col {c} x {x}");
            }
        }
    }

    #[test]
    fn specular_pixels_are_invalid() {
        let img = GrayImage::from_fn(300, 300, |x, _| if x > 150 { 255 } else { 100 });
        let geom = IrisGeometry::concentric(150.0, 150.0, 30.0, 100.0).unwrap();
        let p = normalize(&img, &geom).unwrap();
        assert!(!p.is_valid(10, 0));
        assert!(p.is_valid(10, ANGULAR_RES / 2));
    }

    #[test]
    fn deterministic() {
        let img = GrayImage::from_fn(300, 300, |x, y| ((x * y) % 200) as u8);
        let geom = IrisGeometry::concentric(150.0, 150.0, 30.0, 100.0).unwrap();
        assert_eq!(normalize(&img, &geom).unwrap(), normalize(&img, &geom).unwrap());
    }
}
