use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{argmax, LinearSoftmax, PadModel, TrainingMetadata};
use super::{augment, extract_features, AugmentationPolicy, FeatureVector};
use crate::error::{Error, Result};
use crate::imageio::{center_crop_resize, load_image, GrayImage, Label, Manifest, SampleRecord, PAD_INPUT_SIDE};
use crate::metrics::{ScoreRecord, ScoreSet};
use crate::{par, seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub momentum: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Fraction of each class assigned to training by [`stratified_split`].
    pub train_fraction: f64,
    pub seed: u64,
    /// Number of distinct augmented copies drawn per training image; epoch
    /// `e` uses copy `e mod n`. `None` draws a fresh copy every epoch.
    pub augmentation_views: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            momentum: 0.9,
            learning_rate: 0.005,
            weight_decay: 1e-6,
            max_epochs: 50,
            train_fraction: 0.8,
            seed: 0,
            augmentation_views: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.batch_size > 0
            && self.max_epochs > 0
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.momentum)
            && self.weight_decay >= 0.0
            && self.train_fraction > 0.0
            && self.train_fraction < 1.0
            && self.augmentation_views != Some(0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training configuration {self:?}")))
        }
    }

    fn views(&self) -> usize {
        self.augmentation_views.unwrap_or(self.max_epochs).min(self.max_epochs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn best_val_acc(&self) -> f64 {
        self.epochs[self.best_epoch - 1].val_acc
    }

    pub fn final_val_acc(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.val_acc)
    }
}

/// Per-class split: each class is shuffled with `seed` and its first
/// `⌊fraction · n_class⌋` members go to training, the rest to validation.
/// Both index lists are returned in ascending order.
pub fn stratified_split(labels: &[usize], fraction: f64, seed_v: u64) -> (Vec<usize>, Vec<usize>) {
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut rng = seed::rng(seed::derive_named(seed_v, "split"));
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        let k = (fraction * idx.len() as f64).floor() as usize;
        train.extend_from_slice(&idx[..k]);
        val.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn accuracy(model: &LinearSoftmax, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
    let correct = xs.iter().zip(ys).filter(|(x, &y)| argmax(&model.logits(x)) == y).count();
    correct as f64 / xs.len() as f64
}

/// Minibatch SGD with momentum on softmax cross-entropy.
///
/// `train_views[v][i]` is the feature vector of training sample `i` in
/// augmentation view `v`; epoch `e` (0-based) reads view `e mod views`.
/// Features are standardized with statistics pooled over all views. The
/// returned classifier holds the weights of the epoch with the highest
/// validation accuracy (earliest on ties).
pub fn fit(
    classes: usize,
    train_views: &[Vec<Vec<f64>>],
    train_y: &[usize],
    val_x: &[Vec<f64>],
    val_y: &[usize],
    cfg: &TrainConfig,
) -> Result<(LinearSoftmax, TrainLog)> {
    cfg.validate()?;
    let n = train_y.len();
    if n == 0 || val_y.is_empty() || train_views.is_empty() {
        return Err(Error::InsufficientData("training needs non-empty train and validation sets".into()));
    }
    let present = (0..classes).filter(|c| train_y.contains(c)).count();
    if present < 2 {
        return Err(Error::InsufficientData(format!("training set holds {present} class(es), need 2")));
    }
    let dim = train_views[0][0].len();

    let mut model = LinearSoftmax::zeros(classes, dim);
    let total = (train_views.len() * n) as f64;
    for view in train_views {
        for x in view {
            model.mean.iter_mut().zip(x).for_each(|(m, v)| *m += v / total);
        }
    }
    let mut var = vec![0.0; dim];
    for view in train_views {
        for x in view {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&model.mean) {
                *s += (v - m) * (v - m) / total;
            }
        }
    }
    model.scale = var.iter().map(|v| if *v > 1e-18 { v.sqrt() } else { 1.0 }).collect();

    let mut init = seed::rng(seed::derive_named(cfg.seed, "init"));
    let bound = 1.0 / (dim as f64).sqrt();
    model.weights.iter_mut().for_each(|w| *w = init.random_range(-bound..bound));
    model.bias.iter_mut().for_each(|b| *b = init.random_range(-bound..bound));

    let mut buf_w = vec![0.0; model.weights.len()];
    let mut buf_b = vec![0.0; classes];
    let mut order: Vec<usize> = (0..n).collect();
    let shuffle_seed = seed::derive_named(cfg.seed, "shuffle");
    let mut log = TrainLog::default();
    let mut best: Option<(f64, LinearSoftmax)> = None;

    for epoch in 0..cfg.max_epochs {
        let xs = &train_views[epoch % train_views.len()];
        order.shuffle(&mut seed::rng(seed::derive(shuffle_seed, epoch as u64)));
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<usize> = batch.iter().map(|&i| train_y[i]).collect();
            let (loss, g) = model.loss_and_gradient(&bx, &by, cfg.weight_decay);
            loss_sum += loss;
            batches += 1;
            for ((w, b), gw) in model.weights.iter_mut().zip(buf_w.iter_mut()).zip(&g.weights) {
                *b = cfg.momentum * *b + gw;
                *w -= cfg.learning_rate * *b;
            }
            for ((w, b), gb) in model.bias.iter_mut().zip(buf_b.iter_mut()).zip(&g.bias) {
                *b = cfg.momentum * *b + gb;
                *w -= cfg.learning_rate * *b;
            }
        }
        let val_acc = accuracy(&model, val_x, val_y);
        log.epochs.push(EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / batches as f64,
            val_acc,
        });
        if best.as_ref().is_none_or(|(acc, _)| val_acc > *acc) {
            best = Some((val_acc, model.clone()));
            log.best_epoch = epoch + 1;
        }
    }
    let (_, best_model) = best.expect("at least one epoch");
    Ok((best_model, log))
}

/// Loads a record's image at PAD input size, cropping around the iris when the
/// stored image is larger and carries geometry.
pub fn load_pad_input(manifest: &Manifest, record: &SampleRecord) -> Result<GrayImage> {
    let img = load_image(manifest.resolve(record))?;
    if img.width() == PAD_INPUT_SIDE && img.height() == PAD_INPUT_SIDE {
        return Ok(img);
    }
    match &record.geometry {
        Some(g) => center_crop_resize(&img, g, PAD_INPUT_SIDE),
        None => Err(Error::WrongInputSize {
            expected: format!("{PAD_INPUT_SIDE}x{PAD_INPUT_SIDE} or recorded geometry"),
            actual: format!("{}x{} for `{}`", img.width(), img.height(), record.id),
        }),
    }
}

fn label_class(l: Label) -> usize {
    match l {
        Label::BF => 0,
        Label::PA => 1,
    }
}

fn build_model(classifier: LinearSoftmax, log: &TrainLog, cfg: &TrainConfig, policy: &AugmentationPolicy) -> PadModel {
    PadModel {
        classifier,
        metadata: TrainingMetadata {
            seed: cfg.seed,
            epochs_run: log.epochs.len(),
            best_epoch: log.best_epoch,
            best_val_acc: log.best_val_acc(),
            final_val_acc: log.final_val_acc(),
            train_config: cfg.clone(),
            augmentation: policy.clone(),
        },
    }
}

/// Trains a BF-vs-PA model on pre-split manifests.
pub fn train_on_split(train: &Manifest, val: &Manifest, cfg: &TrainConfig, policy: &AugmentationPolicy) -> Result<(PadModel, TrainLog)> {
    cfg.validate()?;
    policy.validate()?;
    let train_imgs = par::try_map(&train.records, |r| load_pad_input(train, r))?;
    let val_imgs = par::try_map(&val.records, |r| load_pad_input(val, r))?;
    let train_y: Vec<usize> = train.records.iter().map(|r| label_class(r.label)).collect();
    let val_y: Vec<usize> = val.records.iter().map(|r| label_class(r.label)).collect();

    let n = train_imgs.len() as u64;
    let aug_seed = seed::derive_named(cfg.seed, "augment");
    let mut views = Vec::with_capacity(cfg.views());
    for v in 0..cfg.views() as u64 {
        let idx: Vec<u64> = (0..n).collect();
        let view = par::try_map(&idx, |&i| {
            let img = augment(&train_imgs[i as usize], policy, seed::derive(aug_seed, v * n + i));
            extract_features(&img).map(|f| f.values)
        })?;
        views.push(view);
    }
    let val_x = par::try_map(&val_imgs, |img| extract_features(img).map(|f| f.values))?;
    let (classifier, log) = fit(2, &views, &train_y, &val_x, &val_y, cfg)?;
    Ok((build_model(classifier, &log, cfg, policy), log))
}

/// Trains on one manifest, splitting it 80/20 per label with `cfg.seed`.
pub fn train(manifest: &Manifest, cfg: &TrainConfig, policy: &AugmentationPolicy) -> Result<(PadModel, TrainLog)> {
    if manifest.is_empty() {
        return Err(Error::InsufficientData("empty training manifest".into()));
    }
    let labels: Vec<usize> = manifest.records.iter().map(|r| label_class(r.label)).collect();
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::InsufficientData("training manifest holds a single label".into()));
    }
    let (ti, vi) = stratified_split(&labels, cfg.train_fraction, cfg.seed);
    let pick = |idx: &[usize]| Manifest::new(idx.iter().map(|&i| manifest.records[i].clone()).collect(), manifest.base_dir.clone());
    train_on_split(&pick(&ti), &pick(&vi), cfg, policy)
}

/// Bona fide probability on the 0–100 scale.
pub fn predict_features(model: &PadModel, f: &FeatureVector) -> f64 {
    (100.0 * model.classifier.probabilities(&f.values)[0]).clamp(0.0, 100.0)
}

/// PAD score of a 256×256 image: `100 · P(bona fide)`. Scores at or above 50
/// classify the sample as bona fide.
pub fn predict(model: &PadModel, img: &GrayImage) -> Result<f64> {
    Ok(predict_features(model, &extract_features(img)?))
}

/// One score per record, in manifest order.
pub fn score_dataset(model: &PadModel, manifest: &Manifest) -> Result<ScoreSet> {
    let records = par::try_map(&manifest.records, |r| {
        let img = load_pad_input(manifest, r)?;
        Ok::<_, Error>(ScoreRecord {
            sample_id: r.id.clone(),
            label: r.label,
            score: predict(model, &img)?,
        })
    })?;
    ScoreSet::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, dim: usize, sep: f64, seed_v: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = seed::rng(seed_v);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let y = i % 2;
            let shift = if y == 0 { sep / 2.0 } else { -sep / 2.0 };
            xs.push((0..dim).map(|d| noise.sample(&mut rng) + if d < 2 { shift } else { 0.0 }).collect());
            ys.push(y);
        }
        (xs, ys)
    }

    fn split_fit(xs: &[Vec<f64>], ys: &[usize], cfg: &TrainConfig) -> (LinearSoftmax, TrainLog, Vec<Vec<f64>>, Vec<usize>) {
        let (ti, vi) = stratified_split(ys, cfg.train_fraction, cfg.seed);
        let tx: Vec<_> = ti.iter().map(|&i| xs[i].clone()).collect();
        let ty: Vec<_> = ti.iter().map(|&i| ys[i]).collect();
        let vx: Vec<_> = vi.iter().map(|&i| xs[i].clone()).collect();
        let vy: Vec<_> = vi.iter().map(|&i| ys[i]).collect();
        let (m, log) = fit(2, &[tx], &ty, &vx, &vy, cfg).unwrap();
        (m, log, vx, vy)
    }

    #[test]
    fn stratified_split_counts() {
        let labels: Vec<usize> = (0..8334).map(|i| usize::from(i >= 4167)).collect();
        let (t, v) = stratified_split(&labels, 0.8, 1);
        assert_eq!((t.len(), v.len()), (6666, 1668));
        assert_eq!(t.iter().filter(|&&i| labels[i] == 0).count(), 3333);
        assert_eq!(stratified_split(&labels, 0.8, 1), (t.clone(), v));
        assert_ne!(stratified_split(&labels, 0.8, 2).0, t);
    }

    #[test]
    fn separable_blobs_are_learned() {
        let (xs, ys) = blobs(400, 8, 8.0, 3);
        let cfg = TrainConfig::default();
        let (m, log, _, _) = split_fit(&xs, &ys, &cfg);
        assert!(log.best_val_acc() >= 0.99, "{}", log.best_val_acc());
        assert!(log.epochs.len() <= 50);
        let bf: Vec<f64> = xs.iter().zip(&ys).filter(|(_, &y)| y == 0).map(|(x, _)| 100.0 * m.probabilities(x)[0]).collect();
        let pa: Vec<f64> = xs.iter().zip(&ys).filter(|(_, &y)| y == 1).map(|(x, _)| 100.0 * m.probabilities(x)[0]).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&bf) - mean(&pa) > 50.0);
    }

    #[test]
    fn permuted_labels_stay_near_chance() {
        let (xs, _) = blobs(1000, 8, 8.0, 4);
        let mut rng = seed::rng(99);
        let ys: Vec<usize> = (0..1000).map(|_| rng.random_range(0..2)).collect();
        let (_, log, _, _) = split_fit(&xs, &ys, &TrainConfig::default());
        let acc = log.best_val_acc();
        assert!((0.4..=0.6).contains(&acc), "{acc}");
    }

    #[test]
    fn best_epoch_dominates_final_epoch_and_is_deterministic() {
        let (xs, ys) = blobs(300, 6, 1.5, 8);
        let cfg = TrainConfig {
            max_epochs: 12,
            seed: 5,
            ..Default::default()
        };
        let (m1, log1, vx, vy) = split_fit(&xs, &ys, &cfg);
        assert!(log1.best_val_acc() >= log1.final_val_acc());
        assert_eq!(accuracy(&m1, &vx, &vy), log1.best_val_acc());
        let (m2, log2, _, _) = split_fit(&xs, &ys, &cfg);
        assert_eq!((m1, log1), (m2, log2));
    }

    #[test]
    fn single_class_rejected() {
        let xs = vec![vec![0.0; 3]; 10];
        let ys = vec![0; 10];
        assert!(fit(2, std::slice::from_ref(&xs), &ys, &xs, &ys, &TrainConfig::default()).is_err());
    }

    #[test]
    fn zero_model_scores_fifty() {
        let m = PadModel {
            classifier: LinearSoftmax::zeros(2, super::super::FEATURE_DIM),
            metadata: TrainingMetadata {
                seed: 0,
                epochs_run: 0,
                best_epoch: 0,
                best_val_acc: 0.0,
                final_val_acc: 0.0,
                train_config: TrainConfig::default(),
                augmentation: AugmentationPolicy::default(),
            },
        };
        let mut rng = seed::rng(1);
        let img = GrayImage::from_fn(256, 256, |_, _| rng.random());
        assert_eq!(predict(&m, &img).unwrap(), 50.0);
        assert!(predict(&m, &GrayImage::filled(128, 128, 0)).is_err());
    }
}
