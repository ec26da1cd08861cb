use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AlignedDataset, Modality};
use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
}

/// Per-modality z-score parameters, fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub columns: BTreeMap<Modality, ColumnStats>,
}

fn is_degenerate(std: f64, mean: f64) -> bool {
    // a constant column can show rounding-level spread after averaging
    std <= 1e-12 * mean.abs().max(1.0)
}

impl ColumnStats {
    fn fit(block: &Matrix, rows: &[usize]) -> Self {
        let n = rows.len() as f64;
        let cols = block.cols();
        let mut mean = vec![0.0; cols];
        for &r in rows {
            for (m, v) in mean.iter_mut().zip(block.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; cols];
        for &r in rows {
            for ((s, v), m) in var.iter_mut().zip(block.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Self { mean, std }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (&m, &s))| {
                if is_degenerate(s, m) {
                    0.0
                } else {
                    (v - m) / s
                }
            })
            .collect()
    }

    fn apply(&self, block: &Matrix) -> Matrix {
        let mut out = Vec::with_capacity(block.as_slice().len());
        for row in block.row_iter() {
            out.extend(self.apply_row(row));
        }
        Matrix::from_vec(block.rows(), block.cols(), out).expect("normalized block is finite")
    }
}

impl NormalizationStats {
    pub fn fit(dataset: &AlignedDataset, fit_rows: &[usize]) -> Result<Self> {
        if fit_rows.is_empty() {
            return Err(Error::InvalidConfig(
                "normalization needs at least one fit row".into(),
            ));
        }
        if let Some(&bad) = fit_rows.iter().find(|&&r| r >= dataset.len()) {
            return Err(Error::InvalidConfig(format!("fit row {bad} out of range")));
        }
        Ok(Self {
            columns: dataset
                .blocks()
                .iter()
                .map(|(&m, b)| (m, ColumnStats::fit(b, fit_rows)))
                .collect(),
        })
    }

    /// Applies stored statistics to every row of `dataset`.
    pub fn apply(&self, dataset: &AlignedDataset) -> Result<AlignedDataset> {
        let mut blocks = BTreeMap::new();
        for (&m, b) in dataset.blocks() {
            let stats = self.columns.get(&m).ok_or(Error::MissingModality(m))?;
            if stats.mean.len() != b.cols() {
                return Err(Error::DimensionMismatch {
                    context: "normalization width",
                    expected: stats.mean.len(),
                    actual: b.cols(),
                });
            }
            blocks.insert(m, stats.apply(b));
        }
        Ok(dataset.with_blocks(blocks, self.clone()))
    }

    pub fn apply_block(&self, modality: Modality, row: &[f64]) -> Result<Vec<f64>> {
        let stats = self
            .columns
            .get(&modality)
            .ok_or(Error::MissingModality(modality))?;
        if stats.mean.len() != row.len() {
            return Err(Error::DimensionMismatch {
                context: "normalization width",
                expected: stats.mean.len(),
                actual: row.len(),
            });
        }
        Ok(stats.apply_row(row))
    }
}

/// Z-scores every feature column using mean and standard deviation computed
/// on `fit_rows` only. Zero-variance columns become 0.
pub fn normalize(dataset: &AlignedDataset, fit_rows: &[usize]) -> Result<AlignedDataset> {
    NormalizationStats::fit(dataset, fit_rows)?.apply(dataset)
}
