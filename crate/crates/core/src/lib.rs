//! Privacy-safe iris presentation-attack detection (PAD) pipeline.
//!
//! The crate covers the four stages of a synthetic-data PAD workflow:
//!
//! 1. [`synthgen`] renders iris images with and without textured contact
//!    lenses from a seeded procedural model.
//! 2. [`matcher`] and [`leakage`] encode every candidate as an iris code and
//!    drop samples that match the generator's training gallery or fail to
//!    enroll.
//! 3. [`pad`] extracts LBP texture features and trains a linear softmax PAD
//!    model with SGD.
//! 4. [`metrics`] evaluates scores with APCER/BPCER, DET curves, AUROC,
//!    decidability and paired t-tests across training seeds.
//!
//! [`pipeline`] strings the stages together behind a single JSON config and
//! is what the `padforge` binary drives.

pub mod error;
pub mod imageio;
pub mod leakage;
pub mod matcher;
pub mod metrics;
pub mod pad;
pub mod par;
pub mod pipeline;
pub mod seed;
pub mod synthgen;

pub use error::{Error, Result};
pub use imageio::{Circle, GrayImage, IrisGeometry, Label, Manifest, SampleRecord, Source};
pub use synthgen::Brand;
