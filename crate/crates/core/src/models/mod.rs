//! Classic classifiers fitted on embedding datasets.
//!
//! kNN, decision tree and L-means are the wrapper boxes: each prediction
//! carries the training rows it was derived from (the support set), and the
//! predicted label is always the majority label of that support. Logistic
//! regression is the linear baseline and the source of the logit transform.

mod kdtree;
mod knn;
mod lmeans;
mod logreg;
mod tree;

use serde::{Deserialize, Serialize};

use crate::data::EmbeddingDataset;
use crate::error::{Result, WrapError};

pub use kdtree::{Hit, KdTree};
pub use knn::{fit_knn, KnnModel};
pub use lmeans::{fit_lmeans, LMeansModel, LMeansParams};
pub use logreg::{fit_logreg, logit_transform, LogRegModel, LogRegParams, Objective};
pub use tree::{fit_tree, Child, Leaf, SplitNode, TreeModel};

/// Squared Euclidean distance, accumulated in f64 in dimension order.
///
/// Every ranking in the crate goes through this one function so that the
/// kd-tree, brute-force oracles and attribution rankings agree bit for bit.
#[inline]
pub fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum()
}

/// Most frequent label; ties go to the lowest class id.
pub fn majority_vote(labels: impl IntoIterator<Item = u32>, n_classes: u32) -> u32 {
    let mut counts = vec![0usize; n_classes as usize];
    for l in labels {
        counts[l as usize] += 1;
    }
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best as u32
}

/// One supporting training row with its distance to the reference point
/// (the query for kNN and trees, the centroid for L-means).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub row: usize,
    pub distance: f64,
}

/// A label plus the training rows that determined it.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: u32,
    pub support: Vec<Support>,
    /// Leaf id for trees, cluster id for L-means.
    pub group: Option<usize>,
}

impl Prediction {
    pub fn support_rows(&self) -> Vec<usize> {
        self.support.iter().map(|s| s.row).collect()
    }
}

fn default_k() -> usize {
    5
}

fn default_max_depth() -> usize {
    3
}

fn default_min_samples_leaf() -> usize {
    20
}

/// Which classifier to fit, with its hyperparameters. Omitted
/// hyperparameters take their defaults when read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    Tree {
        #[serde(default = "default_max_depth")]
        max_depth: usize,
        #[serde(default = "default_min_samples_leaf")]
        min_samples_leaf: usize,
    },
    Lmeans(LMeansParams),
    Logreg(LogRegParams),
}

impl ModelSpec {
    pub fn knn() -> Self {
        ModelSpec::Knn { k: default_k() }
    }

    pub fn tree() -> Self {
        ModelSpec::Tree {
            max_depth: default_max_depth(),
            min_samples_leaf: default_min_samples_leaf(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::Tree { .. } => "tree",
            ModelSpec::Lmeans(_) => "lmeans",
            ModelSpec::Logreg(_) => "logreg",
        }
    }

    /// Fits on the rows `train` of `ds`.
    pub fn fit(&self, ds: &EmbeddingDataset, train: &[usize]) -> Result<WrapperModel> {
        Ok(match self {
            ModelSpec::Knn { k } => WrapperModel::Knn(fit_knn(ds, train, *k)?),
            ModelSpec::Tree {
                max_depth,
                min_samples_leaf,
            } => WrapperModel::Tree(fit_tree(ds, train, *max_depth, *min_samples_leaf)?),
            ModelSpec::Lmeans(p) => WrapperModel::Lmeans(fit_lmeans(ds, train, p)?),
            ModelSpec::Logreg(p) => WrapperModel::Logreg(fit_logreg(ds, train, p)?),
        })
    }
}

#[derive(Debug, Clone)]
pub enum WrapperModel {
    Knn(KnnModel),
    Tree(TreeModel),
    Lmeans(LMeansModel),
    Logreg(LogRegModel),
}

impl WrapperModel {
    pub fn kind(&self) -> &'static str {
        match self {
            WrapperModel::Knn(_) => "knn",
            WrapperModel::Tree(_) => "tree",
            WrapperModel::Lmeans(_) => "lmeans",
            WrapperModel::Logreg(_) => "logreg",
        }
    }

    pub fn n_dims(&self) -> usize {
        match self {
            WrapperModel::Knn(m) => m.n_dims(),
            WrapperModel::Tree(m) => m.n_dims,
            WrapperModel::Lmeans(m) => m.n_dims,
            WrapperModel::Logreg(m) => m.n_dims,
        }
    }

    /// Predicts `x`. Logistic regression returns an empty support.
    pub fn predict(&self, ds: &EmbeddingDataset, x: &[f32]) -> Result<Prediction> {
        match self {
            WrapperModel::Knn(m) => m.predict(x),
            WrapperModel::Tree(m) => m.predict(ds, x),
            WrapperModel::Lmeans(m) => m.predict(x),
            WrapperModel::Logreg(m) => Ok(Prediction {
                label: m.predict(x)?,
                support: Vec::new(),
                group: None,
            }),
        }
    }

    /// Serializable form; kNN stores only its training rows.
    pub fn to_saved(&self) -> SavedModel {
        match self {
            WrapperModel::Knn(m) => SavedModel::Knn {
                k: m.k(),
                n_classes: m.n_classes(),
                train_ref: m.train_ref().to_vec(),
            },
            WrapperModel::Tree(m) => SavedModel::Tree(m.clone()),
            WrapperModel::Lmeans(m) => SavedModel::Lmeans(m.clone()),
            WrapperModel::Logreg(m) => SavedModel::Logreg(m.clone()),
        }
    }

    /// Rebuilds a model saved with [`WrapperModel::to_saved`] against its dataset.
    pub fn from_saved(saved: SavedModel, ds: &EmbeddingDataset) -> Result<Self> {
        let model = match saved {
            SavedModel::Knn { k, train_ref, .. } => {
                if let Some(&bad) = train_ref.iter().find(|&&i| i >= ds.n_rows()) {
                    return Err(WrapError::ModelMismatch(format!(
                        "training row {bad} beyond dataset of {} rows",
                        ds.n_rows()
                    )));
                }
                WrapperModel::Knn(fit_knn(ds, &train_ref, k)?)
            }
            SavedModel::Tree(m) => WrapperModel::Tree(m),
            SavedModel::Lmeans(m) => WrapperModel::Lmeans(m),
            SavedModel::Logreg(m) => WrapperModel::Logreg(m),
        };
        if model.n_dims() != ds.n_dims() {
            return Err(WrapError::ModelMismatch(format!(
                "model has {} dims, dataset {}",
                model.n_dims(),
                ds.n_dims()
            )));
        }
        Ok(model)
    }
}

/// JSON schema for fitted models: a `kind` tag plus parameters and the
/// training-row index lists needed for explanations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SavedModel {
    Knn {
        k: usize,
        n_classes: u32,
        train_ref: Vec<usize>,
    },
    Tree(TreeModel),
    Lmeans(LMeansModel),
    Logreg(LogRegModel),
}

pub(crate) fn check_train(ds: &EmbeddingDataset, train: &[usize]) -> Result<()> {
    if train.is_empty() {
        return Err(WrapError::EmptyTrainingSet);
    }
    if let Some(&bad) = train.iter().find(|&&i| i >= ds.n_rows()) {
        return Err(WrapError::InvalidSplit(format!(
            "training index {bad} out of range for {} rows",
            ds.n_rows()
        )));
    }
    Ok(())
}

/// Rows sorted by ascending distance to `x`, ties by row index.
pub(crate) fn rank_by_distance(ds: &EmbeddingDataset, rows: &[usize], x: &[f32]) -> Vec<Support> {
    let mut ranked: Vec<(f64, usize)> = rows.iter().map(|&r| (sq_dist(x, ds.row(r)), r)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked
        .into_iter()
        .map(|(d2, row)| Support {
            row,
            distance: d2.sqrt(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vote_ties_go_to_lowest_class() {
        assert_eq!(majority_vote([1, 0], 2), 0);
        assert_eq!(majority_vote([2, 1, 2, 1], 3), 1);
        assert_eq!(majority_vote([2, 2, 1], 3), 2);
        assert_eq!(majority_vote([], 3), 0);
    }

    #[test]
    fn spec_json_is_tagged() {
        let json = serde_json::to_string(&ModelSpec::knn()).unwrap();
        assert_eq!(json, r#"{"kind":"knn","k":5}"#);
        let back: ModelSpec = serde_json::from_str(r#"{"kind":"tree","max_depth":2,"min_samples_leaf":1}"#).unwrap();
        assert_eq!(
            back,
            ModelSpec::Tree {
                max_depth: 2,
                min_samples_leaf: 1
            }
        );
    }
}
