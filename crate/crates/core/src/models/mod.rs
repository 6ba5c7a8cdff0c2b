//! Per-indicator deep pipelines.

mod bilinear;
mod indicator;
mod network;
mod train;

pub use bilinear::{
    bilinear_pool, bilinear_pool_backward, l2_normalize, l2_normalize_backward, signed_sqrt, signed_sqrt_backward,
    BilinearFeatures,
};
pub use indicator::{
    image_input, predict_indicator, score_target, train_indicator_model, train_temporal_model, FeatureScaler,
    ImageSample, IndicatorModel, Level1Config, ModelInput, SequenceSample,
};
pub use network::{
    build_bilinear_classifier, build_dense_head, build_vgg_backbone, build_vgg_head, Architecture, OutputKind,
    SpatialConfig, SpatialNet, VggBlock, VggConfig,
};
pub use train::{evaluate, fit, EpochRecord, LossKind, TrainConfig, TrainingCurve};
