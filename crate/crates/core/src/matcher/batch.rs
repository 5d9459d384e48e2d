use serde::Serialize;

use super::{encode, normalize, IrisTemplate, MatchResult, MatcherConfig, RotationSet};
use crate::error::{Error, Result};
use crate::imageio::{load_image, GrayImage, IrisGeometry, Manifest};
use crate::par;

#[derive(Debug, Clone)]
pub struct EnrolledSample {
    pub id: String,
    pub template: IrisTemplate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestMatch {
    pub gallery_id: String,
    pub result: MatchResult,
}

/// Best gallery match for one probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOutcome {
    pub probe_id: String,
    pub enrolled: bool,
    /// Lowest-HD comparable gallery entry; `None` when the probe did not
    /// enroll, the gallery is empty or no pair had enough common bits.
    pub best: Option<BestMatch>,
}

pub fn enroll_image(img: &GrayImage, geom: &IrisGeometry, cfg: &MatcherConfig) -> Result<IrisTemplate> {
    Ok(encode(&normalize(img, geom)?, cfg))
}

/// Loads every image in `manifest` and encodes it. Records must carry
/// geometry.
pub fn enroll_manifest(manifest: &Manifest, cfg: &MatcherConfig) -> Result<Vec<EnrolledSample>> {
    par::try_map(&manifest.records, |r| {
        let geom = r
            .geometry
            .ok_or_else(|| Error::InvariantViolation(format!("record `{}` has no iris geometry", r.id)))?;
        let img = load_image(manifest.resolve(r))?;
        Ok(EnrolledSample {
            id: r.id.clone(),
            template: enroll_image(&img, &geom, cfg)?,
        })
    })
}

/// All-vs-all search: for each probe, the lowest-HD enrolled gallery entry.
/// Output follows probe order; ties keep the earlier gallery entry.
pub fn best_matches(probes: &[EnrolledSample], gallery: &[EnrolledSample], cfg: &MatcherConfig) -> Vec<ProbeOutcome> {
    let prepared: Vec<(&str, RotationSet)> = gallery
        .iter()
        .filter(|g| g.template.enrolled())
        .map(|g| (g.id.as_str(), RotationSet::new(&g.template, cfg.max_shift)))
        .collect();
    par::map(probes, |p| {
        let enrolled = p.template.enrolled();
        let mut best: Option<BestMatch> = None;
        if enrolled {
            for (gid, set) in &prepared {
                // InsufficientOverlap pairs cannot be compared and are skipped.
                if let Ok(result) = set.match_probe(&p.template, cfg) {
                    if best.as_ref().is_none_or(|b| result.hd < b.result.hd) {
                        best = Some(BestMatch {
                            gallery_id: (*gid).to_string(),
                            result,
                        });
                    }
                }
            }
        }
        ProbeOutcome {
            probe_id: p.id.clone(),
            enrolled,
            best,
        }
    })
}

pub fn enroll_and_match_sets(probes: &Manifest, gallery: &Manifest, cfg: &MatcherConfig) -> Result<Vec<ProbeOutcome>> {
    let p = enroll_manifest(probes, cfg)?;
    let g = enroll_manifest(gallery, cfg)?;
    Ok(best_matches(&p, &g, cfg))
}
