//! Seeded procedural iris synthesizer.
//!
//! Stands in for a trained generative model with the same contract: an
//! unconditional generator of clean irises and a brand-conditioned generator
//! of irises wearing textured contact lenses. The iris texture depends only
//! on the [`IdentitySeed`]; pupil size, placement, illumination and sensor
//! effects depend on a separate appearance seed. Reusing gallery identities
//! (see [`SynthesisConfig::gallery_reuse_prob`]) plants controlled identity
//! leaks for the leakage filter to catch.

mod batch;
mod lens;
mod render;
mod texture;

pub use batch::{generate_batch, plan_batch, render_planned, write_planned, PlannedSample};
pub use lens::LensPattern;
pub use render::{synthesize, synthesize_notcl, synthesize_tcl, Appearance};
pub use texture::IrisTexture;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Textured contact lens manufacturers. The discriminant is the stable
/// conditioning code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Brand {
    BauschLomb = 0,
    FreshLook = 1,
    CooperVision = 2,
    CibaVision = 3,
    UnitedContactLens = 4,
    JohnsonJohnson = 5,
    ClearLab = 6,
}

impl Brand {
    pub const ALL: [Brand; 7] = [
        Brand::BauschLomb,
        Brand::FreshLook,
        Brand::CooperVision,
        Brand::CibaVision,
        Brand::UnitedContactLens,
        Brand::JohnsonJohnson,
        Brand::ClearLab,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Brand> {
        Self::ALL.get(code).copied()
    }
}

/// Seed of the identity-bearing iris texture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IdentitySeed(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SynthesisMode {
    #[serde(rename = "noTCL")]
    NoTcl,
    #[serde(rename = "TCL")]
    Tcl,
}

/// Ranges from which per-sample appearance is drawn. Ranges are `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppearanceJitter {
    /// Additive brightness offset in intensity levels.
    pub brightness: (f64, f64),
    /// Multiplicative contrast gain about mid-grey.
    pub contrast: (f64, f64),
    /// Gaussian blur sigma in pixels.
    pub blur: (f64, f64),
    /// Sensor noise sigma in intensity levels.
    pub noise: (f64, f64),
    /// Maximum absolute eye torsion in degrees.
    pub rotation_deg: f64,
    /// Probability of a saturating glare that makes the sample unenrollable.
    pub glare_prob: f64,
}

impl Default for AppearanceJitter {
    fn default() -> Self {
        Self {
            brightness: (-12.0, 12.0),
            contrast: (0.9, 1.1),
            blur: (0.0, 0.8),
            noise: (1.5, 3.5),
            rotation_deg: 4.0,
            glare_prob: 0.02,
        }
    }
}

impl AppearanceJitter {
    /// Darker, softer and noisier captures, used for held-out evaluation.
    pub fn shifted() -> Self {
        Self {
            brightness: (-35.0, 5.0),
            contrast: (0.75, 1.0),
            blur: (0.4, 1.6),
            noise: (2.5, 6.0),
            rotation_deg: 6.0,
            glare_prob: 0.0,
        }
    }

    /// No appearance variation beyond geometry.
    pub fn none() -> Self {
        Self {
            brightness: (0.0, 0.0),
            contrast: (1.0, 1.0),
            blur: (0.0, 0.0),
            noise: (0.0, 0.0),
            rotation_deg: 0.0,
            glare_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !(ordered(self.brightness) && ordered(self.contrast) && ordered(self.blur) && ordered(self.noise)) {
            return Err(Error::Config("appearance jitter ranges must be finite and ordered".into()));
        }
        if self.blur.0 < 0.0 || self.noise.0 < 0.0 || self.contrast.0 <= 0.0 || self.rotation_deg < 0.0 {
            return Err(Error::Config("blur, noise, rotation must be nonnegative and contrast positive".into()));
        }
        if !(0.0..=1.0).contains(&self.glare_prob) {
            return Err(Error::Config("glare_prob must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub count: usize,
    pub seed: u64,
    pub mode: SynthesisMode,
    /// Per-brand counts in [`Brand`] code order; required for TCL.
    #[serde(default)]
    pub brand_mix: Option<Vec<usize>>,
    #[serde(default = "default_reuse")]
    pub gallery_reuse_prob: f64,
    #[serde(default)]
    pub gallery: Vec<IdentitySeed>,
    #[serde(default)]
    pub appearance_jitter: AppearanceJitter,
    #[serde(default = "default_prefix")]
    pub id_prefix: String,
}

fn default_reuse() -> f64 {
    0.05
}

fn default_prefix() -> String {
    "s".into()
}

impl SynthesisConfig {
    pub fn notcl(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            mode: SynthesisMode::NoTcl,
            brand_mix: None,
            gallery_reuse_prob: default_reuse(),
            gallery: Vec::new(),
            appearance_jitter: AppearanceJitter::default(),
            id_prefix: "notcl_".into(),
        }
    }

    pub fn tcl(brand_mix: [usize; 7], seed: u64) -> Self {
        Self {
            count: brand_mix.iter().sum(),
            seed,
            mode: SynthesisMode::Tcl,
            brand_mix: Some(brand_mix.to_vec()),
            gallery_reuse_prob: default_reuse(),
            gallery: Vec::new(),
            appearance_jitter: AppearanceJitter::default(),
            id_prefix: "tcl_".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("synthesis count must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gallery_reuse_prob) {
            return Err(Error::Config("gallery_reuse_prob must lie in [0, 1]".into()));
        }
        match (self.mode, &self.brand_mix) {
            (SynthesisMode::Tcl, None) => Err(Error::Config("TCL synthesis requires brand_mix".into())),
            (SynthesisMode::NoTcl, Some(_)) => Err(Error::Config("brand_mix given for noTCL synthesis".into())),
            (SynthesisMode::Tcl, Some(mix)) if mix.len() != Brand::ALL.len() => {
                Err(Error::Config(format!("brand_mix needs {} entries, got {}", Brand::ALL.len(), mix.len())))
            }
            (SynthesisMode::Tcl, Some(mix)) if mix.iter().sum::<usize>() != self.count => Err(Error::Config(format!(
                "brand_mix sums to {}, count is {}",
                mix.iter().sum::<usize>(),
                self.count
            ))),
            _ => Ok(()),
        }?;
        self.appearance_jitter.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brand_codes_are_stable() {
        for (i, b) in Brand::ALL.iter().enumerate() {
            assert_eq!(b.code(), i);
            assert_eq!(Brand::from_code(i), Some(*b));
        }
        assert_eq!(Brand::from_code(7), None);
    }

    #[test]
    fn config_validation() {
        assert!(SynthesisConfig::notcl(10, 1).validate().is_ok());
        assert!(SynthesisConfig::tcl([1; 7], 1).validate().is_ok());
        let mut bad = SynthesisConfig::tcl([1; 7], 1);
        bad.count = 8;
        assert!(bad.validate().is_err());
        let mut bad = SynthesisConfig::notcl(10, 1);
        bad.brand_mix = Some(vec![10]);
        assert!(bad.validate().is_err());
        let mut bad = SynthesisConfig::notcl(10, 1);
        bad.gallery_reuse_prob = 1.5;
        assert!(bad.validate().is_err());
    }
}
