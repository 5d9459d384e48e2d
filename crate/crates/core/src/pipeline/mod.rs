//! Stage orchestration behind a single JSON configuration.
//!
//! Work-directory layout, one subdirectory per stage:
//!
//! ```text
//! synth/{gallery,notcl,tcl,test_notcl,test_tcl}/{images/,manifest.jsonl}
//! enroll/{gallery,notcl,tcl}/<id>.irtpl
//! filter/{notcl,tcl}_retained.jsonl, {notcl,tcl}_audit.csv
//! curate/images/, train.jsonl, val.jsonl
//! train/model_seed<k>.txt, epochs.csv
//! eval/report.json, table.txt, scores/<variant>_seed<k>.csv, det/<variant>_seed<k>.csv
//! report/table.txt, t_tests.json
//! digests/<stage>.sha256
//! ```
//!
//! Each stage reads only files written by earlier stages and rewrites its
//! own directory from scratch, so any stage can be rerun in isolation.

mod config;
mod stages;
mod workdir;

pub use config::{CurationSettings, EvalSettings, ExternalVariant, LeakageSettings, PipelineConfig, SynthesisSettings};
pub use stages::{
    brand_allocation, model_file, run_all, run_stage, EvalOutput, ManifestAggregate, Stage, StageReport, TTestEntry, VariantResult,
};
pub use workdir::{digest_dir, digest_file, WorkDirLock};
