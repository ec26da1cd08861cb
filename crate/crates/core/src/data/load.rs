use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Modality, ModalitySchema};
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Rows of one modality that survived parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityFrame {
    pub schema: ModalitySchema,
    pub keys: Vec<String>,
    pub features: Matrix,
    /// Present iff the schema declares a label column.
    pub labels: Option<Vec<u8>>,
    /// Present iff the schema declares a tlx column.
    pub tlx: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub modality: Modality,
    pub source: PathBuf,
    pub rows_read: usize,
    pub dropped: usize,
    pub kept: usize,
}

impl ModalityFrame {
    pub fn new(
        schema: ModalitySchema,
        keys: Vec<String>,
        features: Matrix,
        labels: Option<Vec<u8>>,
        tlx: Option<Vec<f64>>,
    ) -> Result<Self> {
        schema.validate()?;
        if features.cols() != schema.feature_columns.len() {
            return Err(Error::DimensionMismatch {
                context: "frame feature width",
                expected: schema.feature_columns.len(),
                actual: features.cols(),
            });
        }
        if features.rows() != keys.len() {
            return Err(Error::LengthMismatch {
                left: keys.len(),
                right: features.rows(),
            });
        }
        if labels.is_some() != schema.label_column.is_some()
            || tlx.is_some() != schema.tlx_column.is_some()
        {
            return Err(Error::Schema(format!(
                "{}: label/tlx data does not match schema",
                schema.modality
            )));
        }
        for col in labels.iter().map(Vec::len).chain(tlx.iter().map(Vec::len)) {
            if col != keys.len() {
                return Err(Error::LengthMismatch {
                    left: keys.len(),
                    right: col,
                });
            }
        }
        if let Some(&bad) = labels.iter().flatten().find(|&&l| l > 1) {
            return Err(Error::NonBinary(f64::from(bad)));
        }
        let mut seen = HashSet::with_capacity(keys.len());
        for k in &keys {
            if !seen.insert(k.as_str()) {
                return Err(Error::DuplicateKey {
                    modality: schema.modality,
                    key: k.clone(),
                });
            }
        }
        Ok(Self {
            schema,
            keys,
            features,
            labels,
            tlx,
        })
    }

    pub fn modality(&self) -> Modality {
        self.schema.modality
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Writes the frame as comma-delimited text with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = vec![self.schema.key_column.as_str()];
        header.extend(self.schema.feature_columns.iter().map(String::as_str));
        header.extend(self.schema.label_column.as_deref());
        header.extend(self.schema.tlx_column.as_deref());
        w.write_record(&header)?;
        for (i, key) in self.keys.iter().enumerate() {
            let mut rec: Vec<String> = Vec::with_capacity(header.len());
            rec.push(key.clone());
            rec.extend(self.features.row(i).iter().map(|v| v.to_string()));
            if let Some(l) = &self.labels {
                rec.push(l[i].to_string());
            }
            if let Some(t) = &self.tlx {
                rec.push(t[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_finite(cell: Option<&str>) -> Option<f64> {
    let v: f64 = cell?.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

/// Parses delimited text against `schema`. Rows with a blank key, a missing or
/// unparsable feature cell, a label outside {0,1} or a tlx score outside
/// [0,100] are dropped and counted.
pub fn parse_modality<R: Read>(
    reader: R,
    schema: &ModalitySchema,
    source: &Path,
) -> Result<(ModalityFrame, LoadReport)> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::csv(source, e))?.clone();
    let column = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Schema(format!(
                "{}: column `{name}` missing from {}",
                schema.modality,
                source.display()
            ))
        })
    };
    let key_idx = column(&schema.key_column)?;
    let feature_idx = schema
        .feature_columns
        .iter()
        .map(|c| column(c))
        .collect::<Result<Vec<_>>>()?;
    let label_idx = schema.label_column.as_deref().map(column).transpose()?;
    let tlx_idx = schema.tlx_column.as_deref().map(column).transpose()?;

    let mut keys = Vec::new();
    let mut data = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    let mut tlx = tlx_idx.map(|_| Vec::new());
    let mut rows_read = 0;
    let mut dropped = 0;

    for record in rdr.records() {
        let record = record.map_err(|e| Error::csv(source, e))?;
        rows_read += 1;

        let key = record.get(key_idx).unwrap_or("");
        let features: Option<Vec<f64>> = feature_idx
            .iter()
            .map(|&i| parse_finite(record.get(i)))
            .collect();
        let label = match label_idx {
            Some(i) => match parse_finite(record.get(i)) {
                Some(0.0) => Some(Some(0u8)),
                Some(1.0) => Some(Some(1u8)),
                _ => None,
            },
            None => Some(None),
        };
        let score = match tlx_idx {
            Some(i) => match parse_finite(record.get(i)) {
                Some(v) if (0.0..=100.0).contains(&v) => Some(Some(v)),
                _ => None,
            },
            None => Some(None),
        };

        match (key.is_empty(), features, label, score) {
            (false, Some(f), Some(l), Some(s)) => {
                keys.push(key.to_string());
                data.extend(f);
                if let (Some(ls), Some(l)) = (labels.as_mut(), l) {
                    ls.push(l);
                }
                if let (Some(ts), Some(s)) = (tlx.as_mut(), s) {
                    ts.push(s);
                }
            }
            _ => dropped += 1,
        }
    }

    if keys.is_empty() {
        return Err(Error::EmptyResult(format!(
            "{} ({})",
            source.display(),
            schema.modality
        )));
    }
    let features = Matrix::from_vec(keys.len(), schema.feature_columns.len(), data)?;
    let kept = keys.len();
    let frame = ModalityFrame::new(schema.clone(), keys, features, labels, tlx)?;
    let report = LoadReport {
        modality: schema.modality,
        source: source.to_path_buf(),
        rows_read,
        dropped,
        kept,
    };
    Ok((frame, report))
}

pub fn load_modality(
    path: impl AsRef<Path>,
    schema: &ModalitySchema,
) -> Result<(ModalityFrame, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_modality(file, schema, path)
}
