//! Multimodal stress detection toolkit.
//!
//! Per-modality dense networks (posture, facial expression, keystroke
//! dynamics) are trained from scratch, fused with raw physiology features by
//! early (feature-level) or late (probability-level) fusion, and reused with
//! frozen weights to regress NASA-TLX workload scores. Predictions over time
//! become stress timelines with persistence-filtered alerts.

pub mod data;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod nn;
pub mod seed;
pub mod synth;
pub mod timeline;
pub mod workflow;

pub use error::{Error, Result};
