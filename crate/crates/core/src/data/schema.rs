use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Modality;
use crate::error::{Error, Result};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

/// Column layout of one modality file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalitySchema {
    pub modality: Modality,
    pub key_column: String,
    pub feature_columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tlx_column: Option<String>,
}

impl ModalitySchema {
    pub fn new(
        modality: Modality,
        key_column: impl Into<String>,
        feature_columns: Vec<String>,
    ) -> Self {
        Self {
            modality,
            key_column: key_column.into(),
            feature_columns,
            label_column: None,
            tlx_column: None,
        }
    }

    pub fn with_label(mut self, column: impl Into<String>) -> Self {
        self.label_column = Some(column.into());
        self
    }

    pub fn with_tlx(mut self, column: impl Into<String>) -> Self {
        self.tlx_column = Some(column.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::Schema(format!(
                "{}: no feature columns",
                self.modality
            )));
        }
        let mut seen = HashSet::new();
        for c in &self.feature_columns {
            if !seen.insert(c.as_str()) {
                return Err(Error::Schema(format!(
                    "{}: duplicate feature column `{c}`",
                    self.modality
                )));
            }
        }
        let reserved = std::iter::once(&self.key_column)
            .chain(self.label_column.as_ref())
            .chain(self.tlx_column.as_ref());
        for r in reserved {
            if seen.contains(r.as_str()) {
                return Err(Error::Schema(format!(
                    "{}: column `{r}` is both a feature and a key/label/tlx column",
                    self.modality
                )));
            }
        }
        if self.label_column.is_some() && self.label_column == self.tlx_column {
            return Err(Error::Schema(format!(
                "{}: label and tlx share a column",
                self.modality
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Data file, relative to the manifest's directory unless absolute.
    pub path: PathBuf,
    #[serde(flatten)]
    pub schema: ModalitySchema,
}

/// Declares which file feeds each modality and how its columns are used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaManifest {
    pub format_version: u32,
    pub modalities: Vec<ManifestEntry>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl SchemaManifest {
    pub fn new(modalities: Vec<ManifestEntry>) -> Self {
        Self {
            format_version: MANIFEST_FORMAT_VERSION,
            modalities,
            base_dir: PathBuf::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: SchemaManifest =
            serde_json::from_str(&text).map_err(|e| Error::corrupt(path, e))?;
        if manifest.format_version != MANIFEST_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: manifest.format_version,
                expected: MANIFEST_FORMAT_VERSION,
            });
        }
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.modalities {
            e.schema.validate()?;
            if !seen.insert(e.schema.modality) {
                return Err(Error::Schema(format!(
                    "modality {} listed twice",
                    e.schema.modality
                )));
            }
        }
        Ok(())
    }

    pub fn entry(&self, modality: Modality) -> Option<&ManifestEntry> {
        self.modalities
            .iter()
            .find(|e| e.schema.modality == modality)
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }
}
