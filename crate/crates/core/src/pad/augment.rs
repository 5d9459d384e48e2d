use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::{gaussian_blur, FloatImage, GrayImage};
use crate::seed;

/// Randomized training-time distortions. Every range is `(lo, hi)` and is
/// sampled uniformly; a zero-width range at the identity value disables the
/// corresponding step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationPolicy {
    pub flip_prob: f64,
    pub rotation_deg: (f64, f64),
    pub noise_sigma: (f64, f64),
    pub blur_sigma: (f64, f64),
    /// Unsharp-mask gain.
    pub sharpen: (f64, f64),
    /// Multiplicative intensity factor.
    pub brightness: (f64, f64),
    /// Gain about the image mean.
    pub contrast: (f64, f64),
    pub seed: u64,
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        Self {
            flip_prob: 0.5,
            rotation_deg: (-15.0, 15.0),
            noise_sigma: (0.0, 8.0),
            blur_sigma: (0.0, 2.0),
            sharpen: (0.0, 1.0),
            brightness: (0.7, 1.3),
            contrast: (0.8, 1.2),
            seed: 0,
        }
    }
}

impl AugmentationPolicy {
    pub fn identity() -> Self {
        Self {
            flip_prob: 0.0,
            rotation_deg: (0.0, 0.0),
            noise_sigma: (0.0, 0.0),
            blur_sigma: (0.0, 0.0),
            sharpen: (0.0, 0.0),
            brightness: (1.0, 1.0),
            contrast: (1.0, 1.0),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::Config(format!("flip_prob {} outside [0, 1]", self.flip_prob)));
        }
        let ranges = [
            ("rotation_deg", self.rotation_deg, f64::NEG_INFINITY),
            ("noise_sigma", self.noise_sigma, 0.0),
            ("blur_sigma", self.blur_sigma, 0.0),
            ("sharpen", self.sharpen, 0.0),
            ("brightness", self.brightness, 0.0),
            ("contrast", self.contrast, 0.0),
        ];
        for (name, (lo, hi), min) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= min) {
                return Err(Error::Config(format!("augmentation range {name} = ({lo}, {hi}) is invalid")));
            }
        }
        Ok(())
    }
}

fn draw(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn rotate(img: &FloatImage, degrees: f64) -> FloatImage {
    let (s, c) = degrees.to_radians().sin_cos();
    let (s, c) = (s as f32, c as f32);
    let cx = (img.width as f32 - 1.0) / 2.0;
    let cy = (img.height as f32 - 1.0) / 2.0;
    let mut out = FloatImage::filled(img.width, img.height, 0.0);
    for y in 0..img.height {
        for x in 0..img.width {
            let dx = x as f32 - cx;
            let dy = y as f32 - cy;
            // Inverse mapping: output pixel looks up the source position.
            let sx = c * dx + s * dy + cx;
            let sy = -s * dx + c * dy + cy;
            out.data[y * img.width + x] = img.sample_clamped(sx, sy);
        }
    }
    out
}

/// Applies flip, rotation, brightness/contrast, blur, sharpening and additive
/// noise, in that order. Parameters come from `(policy.seed, draw_seed)`, so
/// the output is a pure function of its arguments.
pub fn augment(img: &GrayImage, policy: &AugmentationPolicy, draw_seed: u64) -> GrayImage {
    let mut rng = seed::rng(seed::derive(policy.seed, draw_seed));
    let flip = rng.random_bool(policy.flip_prob.clamp(0.0, 1.0));
    let angle = draw(&mut rng, policy.rotation_deg);
    let brightness = draw(&mut rng, policy.brightness);
    let contrast = draw(&mut rng, policy.contrast);
    let blur = draw(&mut rng, policy.blur_sigma);
    let sharpen = draw(&mut rng, policy.sharpen);
    let noise = draw(&mut rng, policy.noise_sigma);

    let base = if flip { img.flip_horizontal() } else { img.clone() };
    let identity = angle == 0.0 && brightness == 1.0 && contrast == 1.0 && blur <= 0.0 && sharpen <= 0.0 && noise <= 0.0;
    if identity {
        return base;
    }

    let mut f = FloatImage::from_gray(&base);
    if angle != 0.0 {
        f = rotate(&f, angle);
    }
    if brightness != 1.0 || contrast != 1.0 {
        let mean = f.data.iter().map(|&v| f64::from(v)).sum::<f64>() / f.data.len() as f64;
        let (b, c, m) = (brightness as f32, contrast as f32, mean as f32);
        f.data.iter_mut().for_each(|v| *v = ((*v - m) * c + m) * b);
    }
    if blur > 0.0 {
        f = gaussian_blur(&f, blur as f32);
    }
    if sharpen > 0.0 {
        let soft = gaussian_blur(&f, 1.0);
        let k = sharpen as f32;
        f.data.iter_mut().zip(&soft.data).for_each(|(v, s)| *v += k * (*v - s));
    }
    if noise > 0.0 {
        let n = Normal::new(0.0f32, noise as f32).expect("positive sigma");
        f.data.iter_mut().for_each(|v| *v += n.sample(&mut rng));
    }
    f.to_gray()
}
