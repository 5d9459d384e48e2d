use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::MatcherConfig;
use crate::metrics::ExperimentId;
use crate::pad::{AugmentationPolicy, TrainConfig};
use crate::synthgen::AppearanceJitter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSettings {
    /// Identities in the generator's training gallery (one image each).
    pub gallery_count: usize,
    pub notcl_count: usize,
    /// TCL candidates per brand, in brand code order.
    pub tcl_brand_mix: [usize; 7],
    pub gallery_reuse_prob: f64,
    pub jitter: AppearanceJitter,
    /// Gallery captures; glare-free by default so every gallery identity
    /// enrolls and can be matched against.
    pub gallery_jitter: AppearanceJitter,
    /// Held-out test samples per class.
    pub test_per_class: usize,
    pub test_jitter: AppearanceJitter,
}

impl Default for SynthesisSettings {
    fn default() -> Self {
        Self {
            gallery_count: 200,
            notcl_count: 10_000,
            tcl_brand_mix: [640; 7],
            gallery_reuse_prob: 0.05,
            jitter: AppearanceJitter::default(),
            gallery_jitter: AppearanceJitter {
                glare_prob: 0.0,
                ..AppearanceJitter::default()
            },
            test_per_class: 500,
            test_jitter: AppearanceJitter::shifted(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeakageSettings {
    /// noTCL samples to retain; `None` keeps every survivor.
    pub notcl_k_target: Option<usize>,
    /// Also filter TCL candidates against the gallery (all survivors kept).
    pub filter_tcl: bool,
}

impl Default for LeakageSettings {
    fn default() -> Self {
        Self {
            notcl_k_target: Some(4167),
            filter_tcl: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationSettings {
    /// Samples per class; defaults to the number of retained noTCL samples.
    pub k: Option<usize>,
    pub train_fraction: f64,
    /// Externally prepared manifest used instead of synthetic data (E2).
    pub authentic_manifest: Option<PathBuf>,
}

impl Default for CurationSettings {
    fn default() -> Self {
        Self {
            k: None,
            train_fraction: 0.8,
            authentic_manifest: None,
        }
    }
}

/// Scores produced elsewhere (for example by a deep PAD model), one CSV per
/// training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalVariant {
    pub name: String,
    pub experiment: ExperimentId,
    pub score_csvs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Column name of the model trained by this pipeline.
    pub variant_name: String,
    /// Test manifests; empty means the held-out synthetic test sets.
    pub test_manifests: Vec<PathBuf>,
    pub external: Vec<ExternalVariant>,
    pub alpha: f64,
    /// Evaluation outputs merged by `report`; empty means this run's.
    pub report_inputs: Vec<PathBuf>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            variant_name: "lbp-linear".into(),
            test_manifests: Vec::new(),
            external: Vec::new(),
            alpha: 0.05,
            report_inputs: Vec::new(),
        }
    }
}

/// The single JSON document driving every stage. Relative paths inside it
/// resolve against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub work_dir: PathBuf,
    pub master_seed: u64,
    pub experiment: ExperimentId,
    pub synthesis: SynthesisSettings,
    pub matcher: MatcherConfig,
    pub leakage: LeakageSettings,
    pub curation: CurationSettings,
    pub train: TrainConfig,
    /// Independent training runs, each with its own derived seed.
    pub train_seeds: usize,
    pub augmentation: AugmentationPolicy,
    pub eval: EvalSettings,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            work_dir: PathBuf::from("work"),
            master_seed: 0,
            experiment: ExperimentId::E1,
            synthesis: SynthesisSettings::default(),
            matcher: MatcherConfig::default(),
            leakage: LeakageSettings::default(),
            curation: CurationSettings::default(),
            train: TrainConfig::default(),
            train_seeds: 5,
            augmentation: AugmentationPolicy::default(),
            eval: EvalSettings::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, if base.as_os_str().is_empty() { PathBuf::from(".") } else { base })
    }

    /// Resolves a config-relative path.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn work_dir(&self) -> PathBuf {
        self.resolve(&self.work_dir)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.synthesis;
        if s.gallery_count == 0 || s.notcl_count == 0 || s.test_per_class == 0 {
            return Err(Error::Config("gallery, noTCL and test counts must be positive".into()));
        }
        if s.tcl_brand_mix.contains(&0) {
            return Err(Error::Config("every brand needs at least one TCL candidate".into()));
        }
        if !(0.0..=1.0).contains(&s.gallery_reuse_prob) {
            return Err(Error::Config("gallery_reuse_prob must lie in [0, 1]".into()));
        }
        s.jitter.validate()?;
        s.gallery_jitter.validate()?;
        s.test_jitter.validate()?;
        self.matcher.validate()?;
        if let Some(k) = self.leakage.notcl_k_target {
            if k == 0 || k > s.notcl_count {
                return Err(Error::Config(format!("k_target {k} must lie in [1, {}]", s.notcl_count)));
            }
        }
        if let (Some(k), Some(kt)) = (self.curation.k, self.leakage.notcl_k_target) {
            if k > kt {
                return Err(Error::Config(format!("curation k {k} exceeds leakage k_target {kt}")));
            }
        }
        if self.curation.k == Some(0) {
            return Err(Error::Config("curation k must be positive".into()));
        }
        if !(self.curation.train_fraction > 0.0 && self.curation.train_fraction < 1.0) {
            return Err(Error::Config("curation train_fraction must lie in (0, 1)".into()));
        }
        self.train.validate()?;
        self.augmentation.validate()?;
        if self.train_seeds == 0 {
            return Err(Error::Config("train_seeds must be positive".into()));
        }
        if !(self.eval.alpha > 0.0 && self.eval.alpha < 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1)".into()));
        }
        Ok(())
    }
}
