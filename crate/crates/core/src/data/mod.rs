//! Labeled embedding datasets: validation, file formats and splitting.
//!
//! Every model in this crate indexes into an [`EmbeddingDataset`] by row
//! position. Row ids are the stable external identifiers carried through to
//! explanations and attribution output.

mod split;
mod text;
pub mod wbx;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WrapError};

pub use split::{stratified_split, SplitSpec};

/// Dense f32 feature matrix with class labels and stable row ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    features: Vec<f32>,
    n_dims: usize,
    labels: Vec<u32>,
    row_ids: Vec<u64>,
    n_classes: u32,
    texts: Option<Vec<String>>,
}

/// On-disk dataset encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Wbx,
    Csv,
}

impl DataFormat {
    /// Guesses the format from a file extension, defaulting to WBX.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Wbx,
        }
    }
}

impl EmbeddingDataset {
    /// Builds a dataset from row-major features, checking every invariant.
    pub fn new(
        features: Vec<f32>,
        n_dims: usize,
        labels: Vec<u32>,
        row_ids: Vec<u64>,
        n_classes: u32,
        texts: Option<Vec<String>>,
    ) -> Result<Self> {
        let n_rows = labels.len();
        if row_ids.len() != n_rows {
            return Err(WrapError::DimensionMismatch {
                expected: n_rows,
                got: row_ids.len(),
            });
        }
        if features.len() != n_rows * n_dims {
            return Err(WrapError::DimensionMismatch {
                expected: n_rows * n_dims,
                got: features.len(),
            });
        }
        if let Some(texts) = &texts {
            if texts.len() != n_rows {
                return Err(WrapError::DimensionMismatch {
                    expected: n_rows,
                    got: texts.len(),
                });
            }
        }
        if n_rows > 0 && n_classes == 0 {
            return Err(WrapError::InvalidHyperparameter(
                "n_classes must be positive".into(),
            ));
        }
        for (row, &label) in labels.iter().enumerate() {
            if label >= n_classes {
                return Err(WrapError::LabelOutOfRange {
                    row,
                    label,
                    n_classes,
                });
            }
        }
        if n_dims > 0 {
            for (row, values) in features.chunks_exact(n_dims).enumerate() {
                if let Some(column) = values.iter().position(|v| !v.is_finite()) {
                    return Err(WrapError::NonFinite {
                        row,
                        column,
                        value: values[column],
                    });
                }
            }
        }
        let mut seen = HashSet::with_capacity(n_rows);
        for (row, &id) in row_ids.iter().enumerate() {
            if !seen.insert(id) {
                return Err(WrapError::DuplicateRowId { id, row });
            }
        }
        Ok(Self {
            features,
            n_dims,
            labels,
            row_ids,
            n_classes,
            texts,
        })
    }

    /// Convenience constructor with sequential row ids and no texts.
    pub fn from_rows(rows: &[Vec<f32>], labels: Vec<u32>, n_classes: u32) -> Result<Self> {
        let n_dims = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * n_dims);
        for row in rows {
            if row.len() != n_dims {
                return Err(WrapError::DimensionMismatch {
                    expected: n_dims,
                    got: row.len(),
                });
            }
            features.extend_from_slice(row);
        }
        let row_ids = (0..labels.len() as u64).collect();
        Self::new(features, n_dims, labels, row_ids, n_classes, None)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature vector of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.n_dims..(i + 1) * self.n_dims]
    }

    #[inline]
    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn row_id(&self, i: usize) -> u64 {
        self.row_ids[i]
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn texts(&self) -> Option<&[String]> {
        self.texts.as_deref()
    }

    pub fn text(&self, i: usize) -> Option<&str> {
        self.texts.as_ref().map(|t| t[i].as_str())
    }

    /// Row counts per class id.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes as usize];
        for &label in &self.labels {
            counts[label as usize] += 1;
        }
        counts
    }

    /// Checks that a query vector has the dataset's dimensionality.
    pub fn check_dims(&self, x: &[f32]) -> Result<()> {
        if x.len() != self.n_dims {
            return Err(WrapError::DimensionMismatch {
                expected: self.n_dims,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// New dataset with replaced features and the same labels, ids and texts.
    pub fn with_features(&self, features: Vec<f32>, n_dims: usize) -> Result<Self> {
        Self::new(
            features,
            n_dims,
            self.labels.clone(),
            self.row_ids.clone(),
            self.n_classes,
            self.texts.clone(),
        )
    }

    /// Reads a dataset in the given format.
    pub fn load(path: impl AsRef<Path>, format: DataFormat) -> Result<Self> {
        let path = path.as_ref();
        match format {
            DataFormat::Wbx => {
                let bytes = std::fs::read(path).map_err(|e| WrapError::io(path, e))?;
                wbx::decode(&bytes)
            }
            DataFormat::Csv => {
                let file = std::fs::File::open(path).map_err(|e| WrapError::io(path, e))?;
                text::read_csv(file)
            }
        }
    }

    /// Writes a dataset; rejects empty datasets.
    pub fn write(&self, path: impl AsRef<Path>, format: DataFormat) -> Result<()> {
        let path = path.as_ref();
        if self.is_empty() {
            return Err(WrapError::EmptyDataset);
        }
        let bytes = match format {
            DataFormat::Wbx => wbx::encode(self),
            DataFormat::Csv => text::write_csv(self)?,
        };
        std::fs::write(path, bytes).map_err(|e| WrapError::io(path, e))
    }
}

/// Loads a dataset, choosing the format from the file extension.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<EmbeddingDataset> {
    let path = path.as_ref();
    EmbeddingDataset::load(path, DataFormat::from_path(path))
}

/// Writes a dataset in WBX1 or CSV depending on the file extension.
pub fn write_dataset(ds: &EmbeddingDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ds.write(path, DataFormat::from_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_label() {
        let err = EmbeddingDataset::from_rows(&[vec![0.0], vec![1.0]], vec![0, 2], 2).unwrap_err();
        assert!(matches!(err, WrapError::LabelOutOfRange { row: 1, label: 2, .. }));
    }

    #[test]
    fn rejects_non_finite() {
        let err =
            EmbeddingDataset::from_rows(&[vec![0.0, 1.0], vec![f32::NAN, 1.0]], vec![0, 1], 2)
                .unwrap_err();
        assert!(matches!(err, WrapError::NonFinite { row: 1, column: 0, .. }));
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = EmbeddingDataset::new(vec![0.0, 1.0], 1, vec![0, 0], vec![7, 7], 1, None)
            .unwrap_err();
        assert!(matches!(err, WrapError::DuplicateRowId { id: 7, row: 1 }));
    }

    #[test]
    fn histogram_counts_every_class() {
        let ds = EmbeddingDataset::from_rows(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 0, 2, 2],
            3,
        )
        .unwrap();
        assert_eq!(ds.class_histogram(), vec![2, 0, 2]);
    }

    #[test]
    fn empty_dataset_is_valid_but_not_writable() {
        let ds = EmbeddingDataset::new(vec![], 3, vec![], vec![], 2, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = write_dataset(&ds, dir.path().join("e.wbx")).unwrap_err();
        assert_eq!(err.to_string(), "empty dataset not writable");
    }
}
