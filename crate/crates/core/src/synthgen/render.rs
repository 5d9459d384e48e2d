use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{AppearanceJitter, Brand, IdentitySeed, IrisTexture, LensPattern};
use crate::imageio::{gaussian_blur, Circle, FloatImage, GrayImage, IrisGeometry, GENERATOR_SIDE};
use crate::seed;

const PUPIL_LEVEL: f64 = 18.0;
const SPECULAR_LEVEL: f32 = 255.0;

/// Identity-keyed albedo parameters.
#[derive(Debug, Clone, Copy)]
struct IdentityLook {
    texture: IrisTexture,
    base: f64,
    amplitude: f64,
    collarette: f64,
}

impl IdentityLook {
    fn new(identity: IdentitySeed) -> Self {
        let mut rng = seed::rng(seed::derive_named(identity.0, "look"));
        Self {
            texture: IrisTexture::new(identity.0),
            base: rng.random_range(90.0..120.0),
            amplitude: rng.random_range(75.0..95.0),
            collarette: rng.random_range(0.25..0.45),
        }
    }

    fn albedo(&self, rho: f64, theta: f64) -> f64 {
        let tex = self.texture.value(rho, theta);
        let ridge = 14.0 * (-((rho - self.collarette) / 0.06).powi(2)).exp();
        let limbal = -28.0 * smoothstep(0.82, 1.0, rho);
        self.base + self.amplitude * tex + ridge + limbal
    }
}

#[inline]
fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Capture conditions drawn from an appearance seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Appearance {
    pub geometry: IrisGeometry,
    /// Eye torsion in radians; rotates the texture, not the circles.
    pub torsion: f64,
    pub brightness: f64,
    pub contrast: f64,
    pub blur: f64,
    pub noise: f64,
    /// Centre angle of a saturating glare band, when present.
    pub glare: Option<f64>,
    background: f64,
    gradient: (f64, f64),
    specular: (f64, f64, f64),
    noise_seed: u64,
}

fn draw_range(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

impl Appearance {
    pub fn draw(appearance_seed: u64, jitter: &AppearanceJitter) -> Self {
        let mut rng = seed::rng(seed::derive_named(appearance_seed, "appearance"));
        let side = GENERATOR_SIDE as f64;
        let icx = side / 2.0 + rng.random_range(-10.0..10.0);
        let icy = side / 2.0 + rng.random_range(-10.0..10.0);
        let ir = rng.random_range(105.0..125.0);
        let pr = ir * rng.random_range(0.28..0.5);
        let pcx = icx + rng.random_range(-3.0..3.0);
        let pcy = icy + rng.random_range(-3.0..3.0);
        let geometry = IrisGeometry {
            pupil: Circle::new(pcx, pcy, pr),
            iris: Circle::new(icx, icy, ir),
        };
        let torsion = if jitter.rotation_deg > 0.0 {
            rng.random_range(-jitter.rotation_deg..jitter.rotation_deg).to_radians()
        } else {
            0.0
        };
        let brightness = draw_range(&mut rng, jitter.brightness);
        let contrast = draw_range(&mut rng, jitter.contrast);
        let blur = draw_range(&mut rng, jitter.blur);
        let noise = draw_range(&mut rng, jitter.noise);
        let glare_draw: f64 = rng.random();
        let glare_angle = rng.random_range(0.0..TAU);
        let glare = (glare_draw < jitter.glare_prob).then_some(glare_angle);
        let background = rng.random_range(150.0..185.0);
        let gradient = (rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
        let sa = rng.random_range(0.0..TAU);
        let sr = rng.random_range(5.0..8.0);
        let sd = (pr - sr * 0.5).max(0.0);
        let specular = (pcx + sd * sa.cos(), pcy + sd * sa.sin(), sr);
        Self {
            geometry,
            torsion,
            brightness,
            contrast,
            blur,
            noise,
            glare,
            background,
            gradient,
            specular,
            noise_seed: rng.random(),
        }
    }
}

/// Unconditional synthesis: a clean iris.
pub fn synthesize_notcl(
    identity: IdentitySeed,
    appearance_seed: u64,
    jitter: &AppearanceJitter,
) -> (GrayImage, IrisGeometry) {
    synthesize(identity, appearance_seed, jitter, None)
}

/// Brand-conditioned synthesis: the clean iris composited with the brand's
/// printed lens pattern.
pub fn synthesize_tcl(
    brand: Brand,
    identity: IdentitySeed,
    appearance_seed: u64,
    jitter: &AppearanceJitter,
) -> (GrayImage, IrisGeometry) {
    synthesize(identity, appearance_seed, jitter, Some(brand))
}

pub fn synthesize(
    identity: IdentitySeed,
    appearance_seed: u64,
    jitter: &AppearanceJitter,
    brand: Option<Brand>,
) -> (GrayImage, IrisGeometry) {
    let look = IdentityLook::new(identity);
    let app = Appearance::draw(appearance_seed, jitter);
    let lens = brand.map(|b| LensPattern::new(b, appearance_seed));
    let g = app.geometry;
    let side = GENERATOR_SIDE;
    let mut img = FloatImage::filled(side, side, 0.0);
    let half = side as f64 / 2.0;

    for y in 0..side {
        for x in 0..side {
            let (fx, fy) = (x as f64, y as f64);
            let albedo = if !g.iris.contains(fx, fy) {
                app.background + 6.0 * ((fy - half) / half)
            } else if g.pupil.contains(fx, fy) {
                PUPIL_LEVEL
            } else {
                let (rho, theta) = g.to_rubber_sheet(fx, fy);
                let iris = look.albedo(rho, theta - app.torsion);
                match &lens {
                    Some(l) => {
                        let dx = fx - g.iris.cx;
                        let dy = fy - g.iris.cy;
                        let s = (dx * dx + dy * dy).sqrt() / g.iris.r;
                        match l.sample(s, dy.atan2(dx)) {
                            Some(p) => iris + l.alpha() * (p - iris),
                            None => iris,
                        }
                    }
                    None => iris,
                }
            };
            let lit = app.contrast * (albedo - 128.0)
                + 128.0
                + app.brightness
                + app.gradient.0 * (fx - half) / half
                + app.gradient.1 * (fy - half) / half;
            img.data[y * side + x] = lit as f32;
        }
    }

    let (sx, sy, sr) = app.specular;
    paint_disk(&mut img, sx, sy, sr, SPECULAR_LEVEL);
    if let Some(angle) = app.glare {
        paint_glare(&mut img, &g, angle);
    }

    let mut img = gaussian_blur(&img, app.blur as f32);
    if app.noise > 0.0 {
        let mut rng = seed::rng(app.noise_seed);
        let normal = Normal::new(0.0f32, app.noise as f32).expect("finite sigma");
        for v in &mut img.data {
            *v += normal.sample(&mut rng);
        }
    }
    (img.to_gray(), g)
}

fn paint_disk(img: &mut FloatImage, cx: f64, cy: f64, r: f64, v: f32) {
    let x0 = (cx - r).floor().max(0.0) as usize;
    let x1 = ((cx + r).ceil() as usize).min(img.width - 1);
    let y0 = (cy - r).floor().max(0.0) as usize;
    let y1 = ((cy + r).ceil() as usize).min(img.height - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= r * r {
                img.data[y * img.width + x] = v;
            }
        }
    }
}

/// Saturates a wide angular sector of the iris annulus (three quarters of
/// the circle), enough to push the valid-bit fraction under any sane
/// enrollment threshold.
fn paint_glare(img: &mut FloatImage, g: &IrisGeometry, centre: f64) {
    let w = img.width;
    for y in 0..img.height {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            if !g.iris.contains(fx, fy) || g.pupil.contains(fx, fy) {
                continue;
            }
            let a = (fy - g.iris.cy).atan2(fx - g.iris.cx);
            let d = (a - centre + PI).rem_euclid(TAU) - PI;
            if d.abs() < 0.75 * PI {
                img.data[y * w + x] = SPECULAR_LEVEL + 40.0;
            }
        }
    }
}
