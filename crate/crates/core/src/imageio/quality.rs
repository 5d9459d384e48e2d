//! Simplified overall iris image quality on a 0-100 scale.
//!
//! Three components, each in `[0, 1]`:
//! * sharpness: mean Tenengrad (squared Sobel magnitude) over the iris
//!   annulus, mapped through `g / (g + TENENGRAD_HALF)`;
//! * contrast: inter-quartile intensity range over the annulus divided by
//!   `IQR_FULL`, capped at 1;
//! * usable area: fraction of the annulus that is in frame and not specular
//!   (> 250), gated by `min(1, IQR / IQR_TEXTURE_GATE)` so a featureless
//!   annulus counts as unusable.

use super::{GrayImage, IrisGeometry};
use crate::error::Result;

pub const QUALITY_WEIGHTS: [f64; 3] = [0.4, 0.3, 0.3];
const TENENGRAD_HALF: f64 = 2000.0;
const IQR_FULL: f64 = 48.0;
const IQR_TEXTURE_GATE: f64 = 8.0;
const SPECULAR: u8 = 250;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityComponents {
    pub sharpness: f64,
    pub contrast: f64,
    pub usable_area: f64,
    pub score: f64,
}

pub fn overall_quality(img: &GrayImage, geom: &IrisGeometry) -> Result<f64> {
    Ok(quality_components(img, geom)?.score)
}

pub fn quality_components(img: &GrayImage, geom: &IrisGeometry) -> Result<QualityComponents> {
    geom.validate()?;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x0 = (geom.iris.cx - geom.iris.r).floor() as i64;
    let x1 = (geom.iris.cx + geom.iris.r).ceil() as i64;
    let y0 = (geom.iris.cy - geom.iris.r).floor() as i64;
    let y1 = (geom.iris.cy + geom.iris.r).ceil() as i64;

    let mut total = 0usize;
    let mut usable = 0usize;
    let mut tenengrad = 0.0f64;
    let mut grad_n = 0usize;
    let mut values = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (fx, fy) = (x as f64, y as f64);
            if !geom.iris.contains(fx, fy) || geom.pupil.contains(fx, fy) {
                continue;
            }
            total += 1;
            if x < 0 || y < 0 || x >= w || y >= h {
                continue;
            }
            let (ux, uy) = (x as usize, y as usize);
            let v = img.get(ux, uy);
            values.push(v);
            if v <= SPECULAR {
                usable += 1;
            }
            if x > 0 && y > 0 && x < w - 1 && y < h - 1 {
                let p = |dx: i64, dy: i64| f64::from(img.get((x + dx) as usize, (y + dy) as usize));
                let gx = p(1, -1) + 2.0 * p(1, 0) + p(1, 1) - p(-1, -1) - 2.0 * p(-1, 0) - p(-1, 1);
                let gy = p(-1, 1) + 2.0 * p(0, 1) + p(1, 1) - p(-1, -1) - 2.0 * p(0, -1) - p(1, -1);
                tenengrad += gx * gx + gy * gy;
                grad_n += 1;
            }
        }
    }
    let iqr = if values.is_empty() {
        0.0
    } else {
        values.sort_unstable();
        let q = |f: f64| f64::from(values[((values.len() - 1) as f64 * f).round() as usize]);
        q(0.75) - q(0.25)
    };
    let g = if grad_n == 0 { 0.0 } else { tenengrad / grad_n as f64 };
    let sharpness = g / (g + TENENGRAD_HALF);
    let contrast = (iqr / IQR_FULL).min(1.0);
    let area = if total == 0 { 0.0 } else { usable as f64 / total as f64 };
    let usable_area = area * (iqr / IQR_TEXTURE_GATE).min(1.0);
    let [w1, w2, w3] = QUALITY_WEIGHTS;
    let score = (100.0 * (w1 * sharpness + w2 * contrast + w3 * usable_area)).clamp(0.0, 100.0);
    Ok(QualityComponents {
        sharpness,
        contrast,
        usable_area,
        score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::{gaussian_blur, FloatImage};
    use crate::seed;
    use rand::Rng;

    fn geom() -> IrisGeometry {
        IrisGeometry::concentric(128.0, 128.0, 35.0, 100.0).unwrap()
    }

    fn noisy(seed_v: u64) -> GrayImage {
        let mut rng = seed::rng(seed_v);
        GrayImage::from_fn(256, 256, |_, _| rng.random_range(60..200))
    }

    #[test]
    fn constant_image_scores_at_most_five() {
        for v in [0u8, 90, 200] {
            let s = overall_quality(&GrayImage::filled(256, 256, v), &geom()).unwrap();
            assert!(s <= 5.0, "constant {v} scored {s}");
        }
    }

    #[test]
    fn blur_strictly_lowers_score() {
        let img = noisy(3);
        let blurred = gaussian_blur(&FloatImage::from_gray(&img), 4.0).to_gray();
        let a = overall_quality(&img, &geom()).unwrap();
        let b = overall_quality(&blurred, &geom()).unwrap();
        assert!(b < a, "{b} !< {a}");
    }

    #[test]
    fn degenerate_geometry_errors() {
        let g = IrisGeometry {
            pupil: crate::imageio::Circle::new(10.0, 10.0, 0.0),
            iris: crate::imageio::Circle::new(10.0, 10.0, 5.0),
        };
        assert!(overall_quality(&GrayImage::filled(20, 20, 3), &g).is_err());
    }

    #[test]
    fn score_is_in_range() {
        let s = overall_quality(&noisy(11), &geom()).unwrap();
        assert!((0.0..=100.0).contains(&s));
    }
}
