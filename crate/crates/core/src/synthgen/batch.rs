use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{synthesize, AppearanceJitter, Brand, IdentitySeed, SynthesisConfig, SynthesisMode};
use crate::error::{Error, Result};
use crate::imageio::{save_image, write_manifest, GrayImage, IrisGeometry, Label, Manifest, SampleRecord, Source};
use crate::{par, seed};

/// Everything needed to render one sample, fixed before any pixel work.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedSample {
    pub index: usize,
    pub id: String,
    pub identity: IdentitySeed,
    pub appearance_seed: u64,
    pub brand: Option<Brand>,
    /// Identity was drawn from the gallery (a planted leak).
    pub planted: bool,
}

/// Draws identities, appearance seeds and brands for every sample. Sample
/// `i` uses only `derive(cfg.seed, i)`, so plans are independent of
/// execution order.
pub fn plan_batch(cfg: &SynthesisConfig) -> Result<Vec<PlannedSample>> {
    cfg.validate()?;
    let brands: Vec<Option<Brand>> = match (cfg.mode, &cfg.brand_mix) {
        (SynthesisMode::Tcl, Some(mix)) => {
            let mut v: Vec<Option<Brand>> = mix
                .iter()
                .enumerate()
                .flat_map(|(code, &n)| std::iter::repeat_n(Brand::from_code(code), n))
                .collect();
            v.shuffle(&mut seed::rng(seed::derive_named(cfg.seed, "brands")));
            v
        }
        _ => vec![None; cfg.count],
    };
    let width = cfg.count.saturating_sub(1).to_string().len().max(6);
    Ok((0..cfg.count)
        .map(|i| {
            let mut rng = seed::rng(seed::derive(cfg.seed, i as u64));
            let reuse: f64 = rng.random();
            let planted = !cfg.gallery.is_empty() && reuse < cfg.gallery_reuse_prob;
            let identity = if planted {
                cfg.gallery[rng.random_range(0..cfg.gallery.len())]
            } else {
                IdentitySeed(rng.random())
            };
            PlannedSample {
                index: i,
                id: format!("{}{:0width$}", cfg.id_prefix, i),
                identity,
                appearance_seed: rng.random(),
                brand: brands[i],
                planted,
            }
        })
        .collect())
}

pub fn render_planned(cfg: &SynthesisConfig, p: &PlannedSample) -> (GrayImage, IrisGeometry) {
    synthesize(p.identity, p.appearance_seed, &cfg.appearance_jitter, p.brand)
}

/// Renders `cfg.count` samples into `out_dir/images/<id>.png` and writes
/// `out_dir/manifest.jsonl` in index order.
pub fn generate_batch(cfg: &SynthesisConfig, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    let plan = plan_batch(cfg)?;
    write_planned(&plan, &cfg.appearance_jitter, out_dir)
}

/// Renders an explicit plan (for example one sample per gallery identity)
/// with the same layout as [`generate_batch`].
pub fn write_planned(plan: &[PlannedSample], jitter: &AppearanceJitter, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    let out_dir = out_dir.as_ref();
    let images = out_dir.join("images");
    fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let records = par::try_map(plan, |p| -> Result<SampleRecord> {
        let (img, geometry) = synthesize(p.identity, p.appearance_seed, jitter, p.brand);
        let rel = format!("images/{}.png", p.id);
        save_image(&img, out_dir.join(&rel))?;
        Ok(SampleRecord {
            id: p.id.clone(),
            path: rel,
            label: if p.brand.is_some() { Label::PA } else { Label::BF },
            brand: p.brand,
            source: Source::Synthetic,
            identity_tag: Some(p.identity.0.to_string()),
            geometry: Some(geometry),
        })
    })?;
    write_manifest(&records, out_dir.join("manifest.jsonl"))?;
    Ok(Manifest::new(records, out_dir))
}
