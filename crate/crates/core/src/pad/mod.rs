//! PAD model: augmentation, LBP texture features and a linear softmax
//! classifier trained with minibatch SGD.

mod augment;
mod lbp;
mod model;
mod train;

pub use augment::{augment, AugmentationPolicy};
pub use lbp::{bin_table, extract_features, lbp_code, FeatureVector, CELL_SIDE, FEATURE_DIM, GRID, LBP_BINS};
pub use model::{softmax, Gradient, LinearSoftmax, PadModel, TrainingMetadata};
pub use train::{
    fit, load_pad_input, predict, predict_features, score_dataset, stratified_split, train, train_on_split, EpochRecord, TrainConfig, TrainLog,
};
