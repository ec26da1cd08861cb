//! Versioned JSON weight files.
//!
//! Parameters are written as JSON numbers using the shortest decimal form that
//! parses back to the identical `f64`, so a save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::matrix::Matrix;
use super::network::{DenseLayer, DenseNet};
use crate::error::{Error, Result};

pub const WEIGHTS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct LayerRecord {
    input_dim: usize,
    output_dim: usize,
    activation: Activation,
    dropout_rate: f64,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightFile {
    format_version: u32,
    input_dim: usize,
    layers: Vec<LayerRecord>,
}

pub fn to_json(net: &DenseNet) -> String {
    let file = WeightFile {
        format_version: WEIGHTS_FORMAT_VERSION,
        input_dim: net.input_dim(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerRecord {
                input_dim: l.input_dim(),
                output_dim: l.output_dim(),
                activation: l.activation,
                dropout_rate: l.dropout_rate,
                weights: l.weights.as_slice().to_vec(),
                biases: l.biases.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("weight file serializes")
}

pub fn from_json(text: &str, path: &Path) -> Result<DenseNet> {
    // Peek at the version first so an unknown layout reports a version error
    // rather than a parse error.
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::corrupt(path, e))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::corrupt(path, "missing format_version"))?;
    if version != u64::from(WEIGHTS_FORMAT_VERSION) {
        return Err(Error::VersionMismatch {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: WEIGHTS_FORMAT_VERSION,
        });
    }
    let file: WeightFile = serde_json::from_value(value).map_err(|e| Error::corrupt(path, e))?;

    let mut layers = Vec::with_capacity(file.layers.len());
    let mut expected_in = file.input_dim;
    for rec in file.layers {
        if rec.input_dim != expected_in {
            return Err(Error::DimensionMismatch {
                context: "declared layer input",
                expected: expected_in,
                actual: rec.input_dim,
            });
        }
        if rec.weights.len() != rec.input_dim * rec.output_dim {
            return Err(Error::DimensionMismatch {
                context: "declared weight count",
                expected: rec.input_dim * rec.output_dim,
                actual: rec.weights.len(),
            });
        }
        if rec.biases.len() != rec.output_dim {
            return Err(Error::DimensionMismatch {
                context: "declared bias count",
                expected: rec.output_dim,
                actual: rec.biases.len(),
            });
        }
        expected_in = rec.output_dim;
        let weights = Matrix::from_vec(rec.output_dim, rec.input_dim, rec.weights)?;
        layers.push(DenseLayer::new(
            weights,
            rec.biases,
            rec.activation,
            rec.dropout_rate,
        )?);
    }
    DenseNet::from_layers(file.input_dim, layers)
}

pub fn save_weights(net: &DenseNet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(net)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<DenseNet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text, path)
}
