use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AugmentationPolicy, TrainConfig};
use crate::error::{Error, Result};

/// Multinomial logistic regression on standardized features:
/// `logits = W · ((x − mean) / scale) + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSoftmax {
    pub classes: usize,
    pub dim: usize,
    /// Row-major `classes × dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Gradient of the training objective with respect to weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearSoftmax {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            classes,
            dim,
            weights: vec![0.0; classes * dim],
            bias: vec![0.0; classes],
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    fn logits_std(&self, z: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                let row = &self.weights[c * self.dim..(c + 1) * self.dim];
                self.bias[c] + row.iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.logits_std(&self.standardize(x))
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn predict_class(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }

    /// Mean cross-entropy over the batch plus `weight_decay / 2 · ‖θ‖²`
    /// (weights and bias), with its analytic gradient. The decay term's
    /// gradient `weight_decay · θ` is the coupled L2 penalty of classic SGD.
    pub fn loss_and_gradient(&self, xs: &[&[f64]], ys: &[usize], weight_decay: f64) -> (f64, Gradient) {
        let mut g = Gradient {
            weights: vec![0.0; self.weights.len()],
            bias: vec![0.0; self.classes],
        };
        let n = xs.len() as f64;
        let mut loss = 0.0;
        // Fixed summation order: samples in batch order.
        for (x, &y) in xs.iter().zip(ys) {
            let z = self.standardize(x);
            let p = softmax(&self.logits_std(&z));
            loss -= p[y].max(f64::MIN_POSITIVE).ln();
            for c in 0..self.classes {
                let d = (p[c] - f64::from(u8::from(c == y))) / n;
                g.bias[c] += d;
                let row = &mut g.weights[c * self.dim..(c + 1) * self.dim];
                row.iter_mut().zip(&z).for_each(|(gw, v)| *gw += d * v);
            }
        }
        loss /= n;
        let sq: f64 = self.weights.iter().chain(&self.bias).map(|w| w * w).sum();
        loss += 0.5 * weight_decay * sq;
        g.weights.iter_mut().zip(&self.weights).for_each(|(gw, w)| *gw += weight_decay * w);
        g.bias.iter_mut().zip(&self.bias).for_each(|(gb, b)| *gb += weight_decay * b);
        (loss, g)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub final_val_acc: f64,
    pub train_config: TrainConfig,
    pub augmentation: AugmentationPolicy,
}

/// A trained PAD classifier. Class 0 is bona fide, class 1 is attack.
#[derive(Debug, Clone, PartialEq)]
pub struct PadModel {
    pub classifier: LinearSoftmax,
    pub metadata: TrainingMetadata,
}

const MAGIC: &str = "padforge-model v1";

impl PadModel {
    /// Plain-text layout, one item per line:
    ///
    /// ```text
    /// padforge-model v1
    /// classes <C>
    /// dim <D>
    /// meta <single-line JSON TrainingMetadata>
    /// mean <D floats>
    /// scale <D floats>
    /// bias <C floats>
    /// weights <D floats>        (C lines, one per class)
    /// ```
    ///
    /// Floats use the shortest representation that round-trips exactly.
    pub fn to_text(&self) -> String {
        let c = &self.classifier;
        let mut s = String::new();
        let row = |name: &str, v: &[f64]| {
            let mut line = name.to_string();
            for x in v {
                let _ = write!(line, " {x:?}");
            }
            line.push('\n');
            line
        };
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "classes {}", c.classes);
        let _ = writeln!(s, "dim {}", c.dim);
        let _ = writeln!(s, "meta {}", serde_json::to_string(&self.metadata).expect("metadata serializes"));
        s += &row("mean", &c.mean);
        s += &row("scale", &c.scale);
        s += &row("bias", &c.bias);
        for k in 0..c.classes {
            s += &row("weights", &c.weights[k * c.dim..(k + 1) * c.dim]);
        }
        s
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err("missing model header".into());
        }
        let mut field = |name: &str| -> std::result::Result<String, String> {
            let line = lines.next().ok_or_else(|| format!("missing `{name}` line"))?;
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix(' ').or(if r.is_empty() { Some("") } else { None }))
                .map(str::to_string)
                .ok_or_else(|| format!("expected `{name}`, found `{}`", line.chars().take(40).collect::<String>()))
        };
        let floats = |s: String, n: usize| -> std::result::Result<Vec<f64>, String> {
            let v = s
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if v.len() != n || v.iter().any(|x| !x.is_finite()) {
                return Err(format!("expected {n} finite values, got {}", v.len()));
            }
            Ok(v)
        };
        let classes: usize = field("classes")?.parse().map_err(|e| format!("classes: {e}"))?;
        let dim: usize = field("dim")?.parse().map_err(|e| format!("dim: {e}"))?;
        let metadata: TrainingMetadata = serde_json::from_str(&field("meta")?).map_err(|e| format!("meta: {e}"))?;
        let mean = floats(field("mean")?, dim)?;
        let scale = floats(field("scale")?, dim)?;
        let bias = floats(field("bias")?, classes)?;
        let mut weights = Vec::with_capacity(classes * dim);
        for _ in 0..classes {
            weights.extend(floats(field("weights")?, dim)?);
        }
        if !(0.0..=1.0).contains(&metadata.best_val_acc) {
            return Err("best_val_acc outside [0, 1]".into());
        }
        Ok(Self {
            classifier: LinearSoftmax {
                classes,
                dim,
                weights,
                bias,
                mean,
                scale,
            },
            metadata,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|message| Error::Format {
            kind: "model",
            path: path.to_path_buf(),
            message,
        })
    }
}
