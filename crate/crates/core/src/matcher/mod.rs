//! Open iris-code matcher: rubber-sheet normalization, 1-D log-Gabor phase
//! encoding and masked fractional Hamming distance with rotation search.

mod batch;
mod encode;
mod normalize;
mod template;

pub use batch::{best_matches, enroll_and_match_sets, enroll_image, enroll_manifest, BestMatch, EnrolledSample, ProbeOutcome};
pub use encode::encode;
pub use normalize::{normalize, PolarIris, ANGULAR_RES, RADIAL_RES};
pub use template::{match_templates, read_template, write_template, IrisTemplate, MatchResult, RotationSet, CODE_COLS, CODE_ROWS, TEMPLATE_BITS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Matcher operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    /// Pairs with fractional HD strictly below this are matches.
    pub match_threshold: f64,
    /// Minimum valid-bit fraction for a template to enroll.
    pub enroll_min_valid: f64,
    /// Rotation search range in code columns, each side.
    pub max_shift: i32,
    /// Pairs sharing fewer valid bits than this at every shift are not
    /// comparable.
    pub min_common_bits: usize,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            match_threshold: 0.32,
            enroll_min_valid: 0.40,
            max_shift: 8,
            min_common_bits: 100,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.match_threshold) || !(0.0..=1.0).contains(&self.enroll_min_valid) {
            return Err(Error::Config("matcher threshold and enroll_min_valid must lie in [0, 1]".into()));
        }
        if self.max_shift < 0 || self.max_shift as usize >= CODE_COLS / 2 {
            return Err(Error::Config(format!("max_shift must lie in [0, {})", CODE_COLS / 2)));
        }
        Ok(())
    }
}
