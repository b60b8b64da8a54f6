//! Training-data attribution: which training rows, if removed, flip a prediction?
//!
//! Two selectors share one result type:
//!
//! - [`find_subset_greedy`] works for any wrapper box. Candidates are the
//!   prediction's ranked support universe (all training rows by proximity
//!   for kNN, the leaf for trees, the cluster for L-means), filtered to rows
//!   labeled with the prediction. Growing prefixes of that list are removed
//!   in `bins` chunks with a full refit per chunk. The first flipping prefix
//!   is then refined, one row at a time below `phi` rows and in chunks
//!   above, until it stops shrinking.
//! - [`find_subset_knn`] exploits unweighted kNN having no training step:
//!   with every neighbor ranked once, removing the nearest same-label row and
//!   re-reading the first `k` remaining rows gives the refitted prediction
//!   without refitting anything.
//!
//! Refits always reuse the original hyperparameters and seed, so any flip is
//! due to the removed data alone. Subsets are neither guaranteed minimal nor
//! unique.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::EmbeddingDataset;
use crate::error::{Result, WrapError};
use crate::models::{fit_knn, majority_vote, rank_by_distance, ModelSpec, WrapperModel};

/// Chunking parameters for the greedy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributionConfig {
    /// Number of cumulative removal bins.
    pub bins: usize,
    /// Below this subset size, refinement removes one row at a time.
    pub phi: usize,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self { bins: 10, phi: 100 }
    }
}

impl AttributionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || self.phi == 0 {
            return Err(WrapError::InvalidHyperparameter(format!(
                "bins and phi must be at least 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    /// Chunked removal with refits; any model with a support set.
    Greedy,
    /// Retrain-free window scan; kNN only.
    Knn,
}

/// A test input: its id for reporting and its feature vector.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub id: u64,
    pub x: &'a [f32],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub test_row: u64,
    pub original_prediction: u32,
    /// Removed training rows (dataset positions), in candidate order.
    pub subset: Vec<usize>,
    pub subset_row_ids: Vec<u64>,
    pub found: bool,
    pub verified: bool,
    pub retrain_count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
    /// Greedy only: subset size after the first search and after each
    /// refinement pass.
    #[serde(skip)]
    pub size_trace: Vec<usize>,
}

impl SubsetResult {
    fn new(
        ds: &EmbeddingDataset,
        query: Query<'_>,
        prediction: u32,
        subset: Vec<usize>,
        retrain_count: usize,
        started: Instant,
        diagnostic: Option<String>,
    ) -> Self {
        Self {
            test_row: query.id,
            original_prediction: prediction,
            subset_row_ids: subset.iter().map(|&r| ds.row_id(r)).collect(),
            found: !subset.is_empty(),
            subset,
            verified: false,
            retrain_count,
            wall_time: Some(started.elapsed().as_secs_f64()),
            diagnostic,
            size_trace: Vec::new(),
        }
    }
}

fn without(train: &[usize], removed: &[usize], n_rows: usize) -> Vec<usize> {
    let mut gone = vec![false; n_rows];
    for &r in removed {
        gone[r] = true;
    }
    train.iter().copied().filter(|&r| !gone[r]).collect()
}

/// Refits on `train \ removed` and predicts `x`.
fn refit_predict(
    ds: &EmbeddingDataset,
    train: &[usize],
    spec: &ModelSpec,
    removed: &[usize],
    x: &[f32],
) -> Result<u32> {
    let rest = without(train, removed, ds.n_rows());
    Ok(spec.fit(ds, &rest)?.predict(ds, x)?.label)
}

/// Ranked candidate rows for a fitted model's prediction at `x`.
fn candidates(
    model: &WrapperModel,
    ds: &EmbeddingDataset,
    train: &[usize],
    x: &[f32],
) -> Result<(u32, Vec<usize>)> {
    let p = model.predict(ds, x)?;
    let ranked = match model {
        WrapperModel::Knn(_) => rank_by_distance(ds, train, x).into_iter().map(|s| s.row).collect(),
        WrapperModel::Tree(_) | WrapperModel::Lmeans(_) => p.support_rows(),
        WrapperModel::Logreg(_) => return Err(WrapError::NoSupport { model: "logreg" }),
    };
    Ok((p.label, ranked))
}

struct Greedy<'a> {
    ds: &'a EmbeddingDataset,
    train: &'a [usize],
    spec: &'a ModelSpec,
    x: &'a [f32],
    prediction: u32,
    refits: usize,
    diagnostic: Option<String>,
}

impl Greedy<'_> {
    fn flips(&mut self, removed: &[usize]) -> bool {
        self.refits += 1;
        match refit_predict(self.ds, self.train, self.spec, removed, self.x) {
            Ok(label) => label != self.prediction,
            Err(e) => {
                self.diagnostic = Some(format!("refit after removing {} rows failed: {e}", removed.len()));
                false
            }
        }
    }

    /// First flipping prefix of the label-matching candidates, tried in
    /// `bins` cumulative chunks of `ceil(|L| / bins)` rows.
    fn find_subset(&mut self, candidates: &[usize], bins: usize) -> Vec<usize> {
        let matching: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&r| self.ds.label(r) == self.prediction)
            .collect();
        if matching.is_empty() {
            return Vec::new();
        }
        let bin_size = matching.len().div_ceil(bins);
        for i in 1..=bins {
            let end = (i * bin_size).min(matching.len());
            if self.flips(&matching[..end]) {
                return matching[..end].to_vec();
            }
            if end == matching.len() {
                break;
            }
        }
        Vec::new()
    }
}

/// Greedy chunked search with refinement, for any model with a support set.
pub fn find_subset_greedy(
    ds: &EmbeddingDataset,
    train: &[usize],
    spec: &ModelSpec,
    query: Query<'_>,
    config: &AttributionConfig,
) -> Result<SubsetResult> {
    config.validate()?;
    let started = Instant::now();
    let model = spec.fit(ds, train)?;
    let (prediction, ranked) = candidates(&model, ds, train, query.x)?;
    let mut search = Greedy {
        ds,
        train,
        spec,
        x: query.x,
        prediction,
        refits: 0,
        diagnostic: None,
    };
    let mut subset = search.find_subset(&ranked, config.bins);
    let mut trace = vec![subset.len()];
    let mut previous = 0;
    while !subset.is_empty() && subset.len() != previous {
        previous = subset.len();
        let bins = if subset.len() < config.phi {
            subset.len()
        } else {
            config.bins
        };
        subset = search.find_subset(&subset, bins);
        trace.push(subset.len());
    }
    let diagnostic = if subset.is_empty() { search.diagnostic } else { None };
    let mut result = SubsetResult::new(ds, query, prediction, subset, search.refits, started, diagnostic);
    result.size_trace = trace;
    Ok(result)
}

/// Retrain-free selector for unweighted kNN.
///
/// Ranks every training row by distance once. Same-label rows are dropped
/// nearest first; after each drop the majority of the first `k` surviving
/// rows is exactly what a refitted model would predict.
pub fn find_subset_knn(
    ds: &EmbeddingDataset,
    train: &[usize],
    k: usize,
    query: Query<'_>,
) -> Result<SubsetResult> {
    let started = Instant::now();
    let model = fit_knn(ds, train, k)?;
    let prediction = model.predict(query.x)?.label;
    let ranking: Vec<usize> = rank_by_distance(ds, train, query.x)
        .into_iter()
        .map(|s| s.row)
        .collect();
    let matching: Vec<usize> = (0..ranking.len())
        .filter(|&i| ds.label(ranking[i]) == prediction)
        .collect();
    let mut removed = vec![false; ranking.len()];
    let mut window = Vec::with_capacity(k);
    let mut subset = Vec::new();
    let mut diagnostic = None;
    for (i, &pos) in matching.iter().enumerate() {
        removed[pos] = true;
        window.clear();
        window.extend(
            ranking
                .iter()
                .zip(&removed)
                .filter(|(_, &gone)| !gone)
                .map(|(&r, _)| ds.label(r))
                .take(k),
        );
        if window.len() < k {
            diagnostic = Some(format!(
                "only {} training rows remain, fewer than k = {k}",
                window.len()
            ));
            break;
        }
        if majority_vote(window.iter().copied(), ds.n_classes()) != prediction {
            subset = matching[..=i].iter().map(|&p| ranking[p]).collect();
            break;
        }
    }
    if matching.len() == ranking.len() {
        diagnostic = Some("every training row carries the predicted label".into());
    }
    Ok(SubsetResult::new(ds, query, prediction, subset, 0, started, diagnostic))
}

/// Refits on `train \ subset` with the same hyperparameters and reports
/// whether the prediction for `x` moved away from `original`. Refit failures
/// count as no flip.
pub fn verify_flip(
    ds: &EmbeddingDataset,
    train: &[usize],
    spec: &ModelSpec,
    subset: &[usize],
    x: &[f32],
    original: u32,
) -> bool {
    if subset.is_empty() {
        return false;
    }
    matches!(refit_predict(ds, train, spec, subset, x), Ok(label) if label != original)
}

/// Runs a selector and, if asked, verifies the subset by refitting.
pub fn attribute_one(
    ds: &EmbeddingDataset,
    train: &[usize],
    spec: &ModelSpec,
    selector: Selector,
    query: Query<'_>,
    config: &AttributionConfig,
    verify: bool,
) -> Result<SubsetResult> {
    let mut result = match (selector, spec) {
        (Selector::Knn, ModelSpec::Knn { k }) => find_subset_knn(ds, train, *k, query)?,
        (Selector::Knn, other) => {
            return Err(WrapError::Config(format!(
                "the knn selector needs a knn model, not {}",
                other.kind()
            )))
        }
        (Selector::Greedy, _) => find_subset_greedy(ds, train, spec, query, config)?,
    };
    if verify && result.found {
        result.verified = verify_flip(
            ds,
            train,
            spec,
            &result.subset,
            query.x,
            result.original_prediction,
        );
        if !result.verified {
            result.diagnostic = Some("removal did not flip the refitted prediction".into());
        }
    }
    Ok(result)
}

/// Attributes every query independently, in parallel; output keeps query order.
pub fn attribute_many(
    ds: &EmbeddingDataset,
    train: &[usize],
    spec: &ModelSpec,
    selector: Selector,
    queries: &[Query<'_>],
    config: &AttributionConfig,
    verify: bool,
) -> Result<Vec<SubsetResult>> {
    queries
        .par_iter()
        .map(|q| attribute_one(ds, train, spec, selector, *q, config, verify))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionSummary {
    pub n: usize,
    /// Percent of inputs with a proposed subset.
    pub coverage: f64,
    /// Percent of inputs whose subset verifiably flips the prediction.
    pub correctness: f64,
    /// Median size of verified subsets; absent when none verified.
    pub median_size: Option<f64>,
}

pub fn attribution_metrics(results: &[SubsetResult]) -> Result<AttributionSummary> {
    if results.is_empty() {
        return Err(WrapError::Config("no attribution results to summarize".into()));
    }
    let n = results.len();
    let found = results.iter().filter(|r| r.found).count();
    let mut sizes: Vec<usize> = results
        .iter()
        .filter(|r| r.verified)
        .map(|r| r.subset.len())
        .collect();
    sizes.sort_unstable();
    let median_size = match sizes.len() {
        0 => None,
        m if m % 2 == 1 => Some(sizes[m / 2] as f64),
        m => Some((sizes[m / 2 - 1] + sizes[m / 2]) as f64 / 2.0),
    };
    Ok(AttributionSummary {
        n,
        coverage: 100.0 * found as f64 / n as f64,
        correctness: 100.0 * sizes.len() as f64 / n as f64,
        median_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> EmbeddingDataset {
        EmbeddingDataset::from_rows(
            &[vec![0.0], vec![1.0], vec![10.0], vec![11.0]],
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap()
    }

    fn q(x: &[f32]) -> Query<'_> {
        Query { id: 0, x }
    }

    #[test]
    fn knn_window_traces() {
        let ds = line();
        let all = [0, 1, 2, 3];
        let r = find_subset_knn(&ds, &all, 3, q(&[0.5])).unwrap();
        assert_eq!(r.original_prediction, 0);
        assert_eq!(r.subset, vec![0]);
        assert_eq!(r.retrain_count, 0);
        let r = find_subset_knn(&ds, &all, 3, q(&[10.5])).unwrap();
        assert_eq!(r.original_prediction, 1);
        assert_eq!(r.subset, vec![2]);
        let spec = ModelSpec::Knn { k: 3 };
        assert!(verify_flip(&ds, &all, &spec, &r.subset, &[10.5], 1));
    }

    #[test]
    fn knn_k1_removes_the_same_label_prefix() {
        let xs = [0.0f32, 1.0, 2.0, 3.0, 4.0, 5.0];
        let rows: Vec<Vec<f32>> = xs.iter().map(|&x| vec![x]).collect();
        let ds = EmbeddingDataset::from_rows(&rows, vec![0, 0, 1, 0, 1, 1], 2).unwrap();
        let r = find_subset_knn(&ds, &[0, 1, 2, 3, 4, 5], 1, q(&[-1.0])).unwrap();
        // nearest-first: rows 0, 1 (label 0) precede row 2 (label 1)
        assert_eq!(r.subset, vec![0, 1]);
    }

    #[test]
    fn single_class_training_is_not_found() {
        let ds = EmbeddingDataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], vec![1, 1, 1], 2).unwrap();
        let r = find_subset_knn(&ds, &[0, 1, 2], 1, q(&[0.0])).unwrap();
        assert!(!r.found);
        assert!(r.diagnostic.is_some());
    }

    #[test]
    fn depth_zero_tree_needs_three_removals() {
        // [0,0,0,0,1,1]: after 2 removals the vote ties 2-2 and stays 0
        let rows: Vec<Vec<f32>> = (0..6).map(|i| vec![i as f32]).collect();
        let ds = EmbeddingDataset::from_rows(&rows, vec![0, 0, 0, 0, 1, 1], 2).unwrap();
        let train: Vec<usize> = (0..6).collect();
        // oracle: majority after removing the first i label-0 rows
        let needed = (1..=4)
            .find(|&i| {
                let rest = 4 - i;
                majority_vote(
                    std::iter::repeat_n(0, rest).chain([1, 1]),
                    2,
                ) != 0
            })
            .unwrap();
        assert_eq!(needed, 3);
        let spec = ModelSpec::Tree { max_depth: 0, min_samples_leaf: 1 };
        let cfg = AttributionConfig { bins: 6, phi: 100 };
        let r = find_subset_greedy(&ds, &train, &spec, q(&[0.0]), &cfg).unwrap();
        assert_eq!(r.subset.len(), 3);
        assert!(r.subset.iter().all(|&row| ds.label(row) == 0));
        assert!(verify_flip(&ds, &train, &spec, &r.subset, &[0.0], 0));
        let minus_one = &r.subset[..2];
        assert!(!verify_flip(&ds, &train, &spec, minus_one, &[0.0], 0));
    }

    #[test]
    fn one_bin_removes_everything_matching() {
        let rows: Vec<Vec<f32>> = (0..6).map(|i| vec![i as f32]).collect();
        let ds = EmbeddingDataset::from_rows(&rows, vec![0, 0, 0, 0, 1, 1], 2).unwrap();
        let train: Vec<usize> = (0..6).collect();
        let spec = ModelSpec::Tree { max_depth: 0, min_samples_leaf: 1 };
        let cfg = AttributionConfig { bins: 1, phi: 1 };
        let mut search = Greedy {
            ds: &ds,
            train: &train,
            spec: &spec,
            x: &[0.0],
            prediction: 0,
            refits: 0,
            diagnostic: None,
        };
        assert_eq!(search.find_subset(&train, cfg.bins), vec![0, 1, 2, 3]);
        assert_eq!(search.refits, 1);
    }

    #[test]
    fn no_other_class_among_candidates() {
        // 2 far-apart pure clusters; the tree isolates each one in its own leaf
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            rows.push(vec![i as f32]);
            labels.push(0);
            rows.push(vec![100.0 + i as f32]);
            labels.push(1);
        }
        let ds = EmbeddingDataset::from_rows(&rows, labels, 2).unwrap();
        let train: Vec<usize> = (0..20).collect();
        // removing the nearest label-0 row (x = 3) leaves 9 on the left, below min_samples_leaf,
        // so the refit is a single root leaf voting 10 to 9 for label 1
        let spec = ModelSpec::Tree { max_depth: 1, min_samples_leaf: 10 };
        let r = find_subset_greedy(&ds, &train, &spec, q(&[3.0]), &AttributionConfig::default()).unwrap();
        assert_eq!(r.subset, vec![6]);
        assert_eq!(r.retrain_count, 2);
        // single-class training: every refit fails (fewer rows than a leaf needs)
        let ones: Vec<usize> = (0..20).filter(|&i| ds.label(i) == 1).collect();
        let r = find_subset_greedy(&ds, &ones, &spec, q(&[3.0]), &AttributionConfig::default()).unwrap();
        assert!(!r.found);
        assert_eq!(r.original_prediction, 1);
        assert!(r.diagnostic.is_some());
    }

    #[test]
    fn summary_arithmetic() {
        let mk = |found: bool, verified: bool, size: usize| SubsetResult {
            test_row: 0,
            original_prediction: 0,
            subset: vec![0; size],
            subset_row_ids: vec![],
            found,
            verified,
            retrain_count: 0,
            wall_time: None,
            diagnostic: None,
            size_trace: vec![],
        };
        let mut results: Vec<SubsetResult> =
            [1, 2, 2, 3, 5, 8, 9].iter().map(|&s| mk(true, true, s)).collect();
        results.push(mk(true, false, 4));
        results.push(mk(false, false, 0));
        results.push(mk(false, false, 0));
        let s = attribution_metrics(&results).unwrap();
        assert_eq!((s.coverage, s.correctness, s.median_size), (80.0, 70.0, Some(3.0)));

        let none = attribution_metrics(&[mk(false, false, 0)]).unwrap();
        assert_eq!((none.coverage, none.correctness, none.median_size), (0.0, 0.0, None));
        assert!(attribution_metrics(&[]).is_err());

        let even = attribution_metrics(&[mk(true, true, 70), mk(true, true, 85)]).unwrap();
        assert_eq!(even.median_size, Some(77.5));
    }

    #[test]
    fn wrong_selector_is_rejected() {
        let ds = line();
        let spec = ModelSpec::tree();
        assert!(attribute_one(&ds, &[0, 1, 2, 3], &spec, Selector::Knn, q(&[0.0]), &AttributionConfig::default(), true).is_err());
    }
}
