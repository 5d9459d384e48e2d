//! Images, iris geometry, manifests and preprocessing.

mod filter;
mod manifest;
mod pngio;
mod preprocess;
mod quality;

pub use filter::{gaussian_blur, FloatImage};
pub use manifest::{read_manifest, relative_path, write_manifest, Label, Manifest, SampleRecord, Source};
pub use pngio::{load_image, save_image};
pub use preprocess::{center_crop_resize, crop_window, resize_bilinear, CROP_MARGIN};
pub use quality::{overall_quality, quality_components, QualityComponents, QUALITY_WEIGHTS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical full-frame size (ISO/IEC 19794-6 style).
pub const FULL_FRAME: (usize, usize) = (640, 480);
/// Generator-native square size.
pub const GENERATOR_SIDE: usize = 512;
/// PAD model input side.
pub const PAD_INPUT_SIDE: usize = 256;

/// 8-bit grayscale image, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero dimension {width}x{height}")));
        }
        if width * height != pixels.len() {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} image with {} pixels",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "zero-sized image");
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "zero-sized image");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Bilinear sample at real pixel coordinates (pixel centers at integers).
    /// `None` outside `[0, w-1] x [0, h-1]`.
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let maxx = (self.width - 1) as f64;
        let maxy = (self.height - 1) as f64;
        if !(0.0..=maxx).contains(&x) || !(0.0..=maxy).contains(&y) {
            return None;
        }
        let x0 = (x.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (y.floor() as usize).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let p00 = f64::from(self.get(x0, y0));
        let p10 = f64::from(self.get(x1, y0));
        let p01 = f64::from(self.get(x0, y1));
        let p11 = f64::from(self.get(x1, y1));
        let top = p00 + (p10 - p00) * fx;
        let bottom = p01 + (p11 - p01) * fx;
        Some(top + (bottom - top) * fy)
    }

    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| self.get(self.width - 1 - x, y))
    }

    pub fn rotate_180(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| {
            self.get(self.width - 1 - x, self.height - 1 - y)
        })
    }

    /// Adds `delta` to every pixel with saturation.
    pub fn offset(&self, delta: i32) -> Self {
        let pixels = self
            .pixels
            .iter()
            .map(|&p| (i32::from(p) + delta).clamp(0, 255) as u8)
            .collect();
        Self {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    pub fn new(cx: f64, cy: f64, r: f64) -> Self {
        Self { cx, cy, r }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.cx;
        let dy = y - self.cy;
        dx * dx + dy * dy <= self.r * self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrisGeometry {
    pub pupil: Circle,
    pub iris: Circle,
}

impl IrisGeometry {
    pub fn new(pupil: Circle, iris: Circle) -> Result<Self> {
        let g = Self { pupil, iris };
        g.validate()?;
        Ok(g)
    }

    pub fn concentric(cx: f64, cy: f64, pupil_r: f64, iris_r: f64) -> Result<Self> {
        Self::new(Circle::new(cx, cy, pupil_r), Circle::new(cx, cy, iris_r))
    }

    /// Geometry whose crop window (at [`CROP_MARGIN`]) is exactly a
    /// `side`x`side` frame.
    pub fn full_frame(side: usize) -> Self {
        let c = side as f64 / 2.0;
        let r = side as f64 / (2.0 * CROP_MARGIN);
        Self {
            pupil: Circle::new(c, c, r * 0.4),
            iris: Circle::new(c, c, r),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.pupil.cx,
            self.pupil.cy,
            self.pupil.r,
            self.iris.cx,
            self.iris.cy,
            self.iris.r,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::DegenerateGeometry("non-finite circle parameter".into()));
        }
        if self.pupil.r <= 0.0 || self.iris.r <= 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "non-positive radius (pupil {}, iris {})",
                self.pupil.r, self.iris.r
            )));
        }
        if self.pupil.r >= self.iris.r {
            return Err(Error::DegenerateGeometry(format!(
                "pupil radius {} not smaller than iris radius {}",
                self.pupil.r, self.iris.r
            )));
        }
        if !self.iris.contains(self.pupil.cx, self.pupil.cy) {
            return Err(Error::DegenerateGeometry("pupil center outside iris".into()));
        }
        Ok(())
    }

    /// Boundary point pair at angle `theta`: (pupil point, iris point).
    #[inline]
    pub fn boundary_points(&self, theta: f64) -> ((f64, f64), (f64, f64)) {
        let (s, c) = theta.sin_cos();
        (
            (self.pupil.cx + self.pupil.r * c, self.pupil.cy + self.pupil.r * s),
            (self.iris.cx + self.iris.r * c, self.iris.cy + self.iris.r * s),
        )
    }

    /// Rubber-sheet point at normalized radius `rho` (0 = pupil, 1 = limbus).
    #[inline]
    pub fn rubber_sheet_point(&self, rho: f64, theta: f64) -> (f64, f64) {
        let ((px, py), (ix, iy)) = self.boundary_points(theta);
        (px + rho * (ix - px), py + rho * (iy - py))
    }

    /// Inverse of [`Self::rubber_sheet_point`]: `(rho, theta)` for an image
    /// point, exact for non-concentric circles. `theta` in `[0, 2pi)`.
    pub fn to_rubber_sheet(&self, x: f64, y: f64) -> (f64, f64) {
        // |q - rho*d| = rp + rho*dr with q = p - cp, d = ci - cp.
        let qx = x - self.pupil.cx;
        let qy = y - self.pupil.cy;
        let dx = self.iris.cx - self.pupil.cx;
        let dy = self.iris.cy - self.pupil.cy;
        let rp = self.pupil.r;
        let dr = self.iris.r - rp;
        let a = dx * dx + dy * dy - dr * dr;
        let b = qx * dx + qy * dy + rp * dr;
        let c = qx * qx + qy * qy - rp * rp;
        let rho = if a.abs() < 1e-12 {
            c / (2.0 * b)
        } else {
            // a < 0 because the pupil lies inside the iris; take the root
            // that is continuous through rho = 0.
            let disc = (b * b - a * c).max(0.0);
            c / (b + disc.sqrt())
        };
        let cx = self.pupil.cx + rho * dx;
        let cy = self.pupil.cy + rho * dy;
        let theta = (y - cy).atan2(x - cx).rem_euclid(std::f64::consts::TAU);
        (rho, theta)
    }

    pub fn scaled(&self, sx: f64, sy: f64) -> Self {
        let s = (sx * sy).sqrt();
        Self {
            pupil: Circle::new(self.pupil.cx * sx, self.pupil.cy * sy, self.pupil.r * s),
            iris: Circle::new(self.iris.cx * sx, self.iris.cy * sy, self.iris.r * s),
        }
    }
}
