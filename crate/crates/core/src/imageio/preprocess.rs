use super::{GrayImage, IrisGeometry};
use crate::error::{Error, Result};

/// Crop half-side as a multiple of the iris radius.
pub const CROP_MARGIN: f64 = 1.1;

/// Square crop window `(left, top, side)` in source pixel coordinates.
pub fn crop_window(geom: &IrisGeometry) -> (f64, f64, f64) {
    let side = 2.0 * geom.iris.r * CROP_MARGIN;
    (geom.iris.cx - side / 2.0, geom.iris.cy - side / 2.0, side)
}

/// Crops the square of side `2 * 1.1 * r_iris` centred on the iris and
/// resamples it bilinearly to `out_side` x `out_side`. Output pixels whose
/// sample point falls outside the source frame are zero.
///
/// Output pixel `u` maps to source `left + (u + 0.5) * side / out_side - 0.5`,
/// so a window that matches `out_side` at integer offset copies pixels
/// exactly.
pub fn center_crop_resize(img: &GrayImage, geom: &IrisGeometry, out_side: usize) -> Result<GrayImage> {
    if geom.iris.r <= 0.0 || !geom.iris.r.is_finite() {
        return Err(Error::DegenerateGeometry(format!("iris radius {}", geom.iris.r)));
    }
    if out_side == 0 {
        return Err(Error::InvalidImage("output side must be positive".into()));
    }
    let (left, top, side) = crop_window(geom);
    let scale = side / out_side as f64;
    let xs: Vec<f64> = (0..out_side).map(|u| left + (u as f64 + 0.5) * scale - 0.5).collect();
    let ys: Vec<f64> = (0..out_side).map(|v| top + (v as f64 + 0.5) * scale - 0.5).collect();
    let snap = |v: f64, max: f64| {
        if (-1e-6..0.0).contains(&v) {
            0.0
        } else if v > max && v - max < 1e-6 {
            max
        } else {
            v
        }
    };
    let maxx = (img.width() - 1) as f64;
    let maxy = (img.height() - 1) as f64;
    let xs: Vec<f64> = xs.into_iter().map(|x| snap(x, maxx)).collect();
    let ys: Vec<f64> = ys.into_iter().map(|y| snap(y, maxy)).collect();
    Ok(GrayImage::from_fn(out_side, out_side, |u, v| {
        img.sample_bilinear(xs[u], ys[v])
            .map_or(0, |p| p.round().clamp(0.0, 255.0) as u8)
    }))
}

/// Plain bilinear resize with pixel-centre alignment and edge clamping.
pub fn resize_bilinear(img: &GrayImage, width: usize, height: usize) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage("resize target must be positive".into()));
    }
    let sx = img.width() as f64 / width as f64;
    let sy = img.height() as f64 / height as f64;
    let maxx = (img.width() - 1) as f64;
    let maxy = (img.height() - 1) as f64;
    Ok(GrayImage::from_fn(width, height, |u, v| {
        let x = ((u as f64 + 0.5) * sx - 0.5).clamp(0.0, maxx);
        let y = ((v as f64 + 0.5) * sy - 0.5).clamp(0.0, maxy);
        img.sample_bilinear(x, y)
            .expect("clamped into frame")
            .round()
            .clamp(0.0, 255.0) as u8
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::Circle;

    fn textured(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| (1 + (x * 31 + y * 17) % 250) as u8)
    }

    #[test]
    fn centered_crop_center_pixel_matches_nearest_neighbour_reference() {
        // Smooth image so interpolation stays within +-1 of the source.
        let img = GrayImage::from_fn(640, 480, |x, y| ((x / 3 + y / 2) % 256) as u8);
        let geom = IrisGeometry::concentric(320.0, 240.0, 40.0, 100.0).unwrap();
        let out = center_crop_resize(&img, &geom, 256).unwrap();
        assert_eq!((out.width(), out.height()), (256, 256));
        // Reference nearest-neighbour crop: output (128,128) samples source
        // 210 + 128.5 * 220/256 - 0.5 = 319.93 -> nearest pixel 320.
        let (left, top, side) = crop_window(&geom);
        let sx = left + 128.5 * side / 256.0 - 0.5;
        let sy = top + 128.5 * side / 256.0 - 0.5;
        let nn = img.get(sx.round() as usize, sy.round() as usize);
        assert!((i32::from(out.get(128, 128)) - i32::from(nn)).abs() <= 1);
        assert!((i32::from(out.get(128, 128)) - i32::from(img.get(320, 240))).abs() <= 1);
    }

    #[test]
    fn unit_scale_crop_is_identity() {
        let img = textured(640, 480);
        // side = 2 * 1.1 * 100 = 220, left = 210, top = 130.
        let geom = IrisGeometry::concentric(320.0, 240.0, 40.0, 100.0).unwrap();
        let out = center_crop_resize(&img, &geom, 220).unwrap();
        for v in 0..220 {
            for u in 0..220 {
                assert_eq!(out.get(u, v), img.get(210 + u, 130 + v));
            }
        }
    }

    #[test]
    fn corner_iris_pads_exactly_the_off_frame_region() {
        let img = textured(640, 480);
        // side 220, left = -70, top = -90: 70 columns and 90 rows off-frame.
        let geom = IrisGeometry::concentric(40.0, 20.0, 30.0, 100.0).unwrap();
        let out = center_crop_resize(&img, &geom, 220).unwrap();
        let mut padded = 0;
        for v in 0..220 {
            for u in 0..220 {
                let off = u < 70 || v < 90;
                assert_eq!(out.get(u, v) == 0, off, "pixel ({u},{v})");
                padded += usize::from(off);
            }
        }
        assert_eq!(padded, 220 * 220 - 150 * 130);
    }

    #[test]
    fn idempotent_on_own_output_with_full_frame_geometry() {
        let img = textured(512, 512);
        let geom = IrisGeometry::new(Circle::new(250.3, 261.7, 45.0), Circle::new(251.0, 260.0, 117.4)).unwrap();
        let once = center_crop_resize(&img, &geom, 256).unwrap();
        let twice = center_crop_resize(&once, &IrisGeometry::full_frame(256), 256).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn degenerate_radius_is_rejected() {
        let img = textured(64, 64);
        let g = IrisGeometry {
            pupil: Circle::new(32.0, 32.0, 5.0),
            iris: Circle::new(32.0, 32.0, 0.0),
        };
        assert!(matches!(center_crop_resize(&img, &g, 32), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn resize_identity_and_constant() {
        let img = textured(50, 40);
        assert_eq!(resize_bilinear(&img, 50, 40).unwrap(), img);
        let c = GrayImage::filled(512, 512, 90);
        let r = resize_bilinear(&c, 640, 480).unwrap();
        assert!(r.pixels().iter().all(|&p| p == 90));
    }
}
