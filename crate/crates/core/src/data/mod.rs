//! Ingestion, key alignment, normalization, splitting and folding of
//! per-modality tabular streams.

mod align;
mod load;
mod normalize;
mod schema;
mod split;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use align::{align, AlignedDataset, AlignmentReport, LabelSources, Record};
pub use load::{load_modality, parse_modality, LoadReport, ModalityFrame};
pub use normalize::{normalize, ColumnStats, NormalizationStats};
pub use schema::{ManifestEntry, ModalitySchema, SchemaManifest, MANIFEST_FORMAT_VERSION};
pub use split::{kfold, split, split_indices, Fold, SplitSpec};

/// Width of the physiology block (heart-rate variability plus skin conductance).
pub const PHYSIO_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Posture,
    Facial,
    Keystroke,
    Physiology,
}

impl Modality {
    pub const ALL: [Modality; 4] = [
        Modality::Posture,
        Modality::Facial,
        Modality::Keystroke,
        Modality::Physiology,
    ];

    /// Modalities that get their own encoder network.
    pub const ENCODED: [Modality; 3] = [Modality::Posture, Modality::Facial, Modality::Keystroke];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Posture => "posture",
            Modality::Facial => "facial",
            Modality::Keystroke => "keystroke",
            Modality::Physiology => "physiology",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Modality {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Modality::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| crate::Error::Schema(format!("unknown modality `{s}`")))
    }
}
