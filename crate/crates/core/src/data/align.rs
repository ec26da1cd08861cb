use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Modality, ModalityFrame, NormalizationStats, PHYSIO_DIM};
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Which frames supply the stress label and the NASA-TLX target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelSources {
    pub labels: Modality,
    pub tlx: Option<Modality>,
}

impl LabelSources {
    /// Picks the first frame whose schema declares a label column (and likewise for tlx).
    pub fn infer(frames: &[ModalityFrame]) -> Result<Self> {
        let labels = frames
            .iter()
            .find(|f| f.labels.is_some())
            .map(ModalityFrame::modality)
            .ok_or_else(|| Error::Schema("no modality declares a label column".into()))?;
        let tlx = frames
            .iter()
            .find(|f| f.tlx.is_some())
            .map(ModalityFrame::modality);
        Ok(Self { labels, tlx })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentReport {
    /// Rows per modality before the join.
    pub rows_in: BTreeMap<Modality, usize>,
    /// Rows per modality that found no partner in some other modality.
    pub excluded: BTreeMap<Modality, usize>,
    pub aligned: usize,
}

/// One aligned row, one feature vector per modality.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record {
    blocks: BTreeMap<Modality, Vec<f64>>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, modality: Modality, features: Vec<f64>) -> Self {
        self.blocks.insert(modality, features);
        self
    }

    pub fn insert(&mut self, modality: Modality, features: Vec<f64>) {
        self.blocks.insert(modality, features);
    }

    pub fn remove(&mut self, modality: Modality) -> Option<Vec<f64>> {
        self.blocks.remove(&modality)
    }

    pub fn block(&self, modality: Modality) -> Result<&[f64]> {
        self.blocks
            .get(&modality)
            .map(Vec::as_slice)
            .ok_or(Error::MissingModality(modality))
    }
}

/// Inner join of modality frames on their key column.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset {
    keys: Vec<String>,
    blocks: BTreeMap<Modality, Matrix>,
    feature_names: BTreeMap<Modality, Vec<String>>,
    labels: Vec<u8>,
    tlx: Option<Vec<f64>>,
    normalization: Option<NormalizationStats>,
}

impl AlignedDataset {
    pub fn new(
        keys: Vec<String>,
        blocks: BTreeMap<Modality, Matrix>,
        feature_names: BTreeMap<Modality, Vec<String>>,
        labels: Vec<u8>,
        tlx: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = keys.len();
        for (m, b) in &blocks {
            if b.rows() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: b.rows(),
                });
            }
            if !b.is_finite() {
                return Err(Error::NonFinite { index: 0 });
            }
            if feature_names.get(m).map(Vec::len) != Some(b.cols()) {
                return Err(Error::Schema(format!(
                    "{m}: feature names do not match block width"
                )));
            }
        }
        if let Some(p) = blocks.get(&Modality::Physiology) {
            if p.cols() != PHYSIO_DIM {
                return Err(Error::DimensionMismatch {
                    context: "physiology block width",
                    expected: PHYSIO_DIM,
                    actual: p.cols(),
                });
            }
        }
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::NonBinary(f64::from(bad)));
        }
        if let Some(t) = &tlx {
            if t.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: t.len(),
                });
            }
            if t.iter().any(|v| !(0.0..=100.0).contains(v)) {
                return Err(Error::Schema("tlx target outside [0, 100]".into()));
            }
        }
        Ok(Self {
            keys,
            blocks,
            feature_names,
            labels,
            tlx,
            normalization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| f64::from(l)).collect()
    }

    pub fn tlx(&self) -> Option<&[f64]> {
        self.tlx.as_deref()
    }

    pub fn modalities(&self) -> impl Iterator<Item = Modality> + '_ {
        self.blocks.keys().copied()
    }

    pub fn block(&self, modality: Modality) -> Result<&Matrix> {
        self.blocks
            .get(&modality)
            .ok_or(Error::MissingModality(modality))
    }

    pub fn feature_names(&self, modality: Modality) -> Option<&[String]> {
        self.feature_names.get(&modality).map(Vec::as_slice)
    }

    pub fn normalization(&self) -> Option<&NormalizationStats> {
        self.normalization.as_ref()
    }

    pub(crate) fn blocks(&self) -> &BTreeMap<Modality, Matrix> {
        &self.blocks
    }

    pub(crate) fn with_blocks(
        &self,
        blocks: BTreeMap<Modality, Matrix>,
        stats: NormalizationStats,
    ) -> Self {
        Self {
            blocks,
            normalization: Some(stats),
            ..self.clone()
        }
    }

    pub fn record(&self, row: usize) -> Record {
        Record {
            blocks: self
                .blocks
                .iter()
                .map(|(&m, b)| (m, b.row(row).to_vec()))
                .collect(),
        }
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            keys: indices.iter().map(|&i| self.keys[i].clone()).collect(),
            blocks: self
                .blocks
                .iter()
                .map(|(&m, b)| (m, b.select_rows(indices)))
                .collect(),
            feature_names: self.feature_names.clone(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            tlx: self
                .tlx
                .as_ref()
                .map(|t| indices.iter().map(|&i| t[i]).collect()),
            normalization: self.normalization.clone(),
        }
    }
}

/// Keeps only keys that every frame reports, in the order of the first frame.
pub fn align(
    frames: &[ModalityFrame],
    sources: LabelSources,
) -> Result<(AlignedDataset, AlignmentReport)> {
    if frames.len() < 2 {
        return Err(Error::InvalidConfig(
            "alignment needs at least two frames".into(),
        ));
    }
    let lookups: Vec<HashMap<&str, usize>> = frames
        .iter()
        .map(|f| {
            f.keys
                .iter()
                .enumerate()
                .map(|(i, k)| (k.as_str(), i))
                .collect()
        })
        .collect();

    let find = |m: Modality| frames.iter().position(|f| f.modality() == m);
    let label_frame = find(sources.labels)
        .filter(|&i| frames[i].labels.is_some())
        .ok_or_else(|| Error::Schema(format!("{} frame carries no labels", sources.labels)))?;
    let tlx_frame = match sources.tlx {
        Some(m) => Some(
            find(m)
                .filter(|&i| frames[i].tlx.is_some())
                .ok_or_else(|| Error::Schema(format!("{m} frame carries no tlx scores")))?,
        ),
        None => None,
    };

    // row index into each frame for every surviving key
    let mut rows: Vec<Vec<usize>> = Vec::new();
    let mut keys = Vec::new();
    for key in &frames[0].keys {
        let hit: Option<Vec<usize>> = lookups
            .iter()
            .map(|l| l.get(key.as_str()).copied())
            .collect();
        if let Some(hit) = hit {
            keys.push(key.clone());
            rows.push(hit);
        }
    }
    if keys.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let mut blocks = BTreeMap::new();
    let mut feature_names = BTreeMap::new();
    let mut rows_in = BTreeMap::new();
    let mut excluded = BTreeMap::new();
    for (fi, frame) in frames.iter().enumerate() {
        let m = frame.modality();
        if blocks.contains_key(&m) {
            return Err(Error::Schema(format!("modality {m} supplied twice")));
        }
        let picked: Vec<usize> = rows.iter().map(|r| r[fi]).collect();
        blocks.insert(m, frame.features.select_rows(&picked));
        feature_names.insert(m, frame.schema.feature_columns.clone());
        rows_in.insert(m, frame.len());
        excluded.insert(m, frame.len() - keys.len());
    }
    let label_col = frames[label_frame].labels.as_ref().expect("checked above");
    let labels = rows.iter().map(|r| label_col[r[label_frame]]).collect();
    let tlx = tlx_frame.map(|ti| {
        let col = frames[ti].tlx.as_ref().expect("checked above");
        rows.iter().map(|r| col[r[ti]]).collect()
    });

    let aligned = keys.len();
    let dataset = AlignedDataset::new(keys, blocks, feature_names, labels, tlx)?;
    Ok((
        dataset,
        AlignmentReport {
            rows_in,
            excluded,
            aligned,
        },
    ))
}
