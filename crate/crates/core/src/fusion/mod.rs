//! Per-modality encoders, early and late fusion classifiers, and the
//! NASA-TLX transfer regressor.
//!
//! Encoders are trained standalone first. Fusion heads and the regressor
//! only ever read encoder outputs in inference mode, so encoder parameters are
//! never modified after unimodal training.

mod encoder;
mod model;
mod tlx;

pub use encoder::{
    build_encoder, classify_at, train_unimodal, Encoder, EncoderSpec, UnimodalOutcome,
    DEFAULT_DROPOUT,
};
pub use model::{
    assemble_and_train_early, assemble_and_train_late, fusion_input_dim, FusionMode, FusionModel,
    FusionOutcome, HeadSpec, Prediction, DEFAULT_THRESHOLD,
};
pub use tlx::{
    train_tlx_regressor, TargetScale, TlxOutcome, TlxRegressor, TlxReport, REGRESSOR_DROPOUT,
    REGRESSOR_LEARNING_RATE, TLX_MAX,
};
