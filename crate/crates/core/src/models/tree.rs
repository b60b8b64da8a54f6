//! CART classification tree with Gini impurity.
//!
//! Split search is exhaustive: every feature, every midpoint between
//! consecutive distinct values, subject to `min_samples_leaf` on both sides.
//! The largest impurity decrease wins; equal decreases keep the earlier
//! candidate, i.e. the lower feature index and then the lower threshold.
//! Rows with `x[feature] >= threshold` go right.

use serde::{Deserialize, Serialize};

use super::{check_train, majority_vote, rank_by_distance, Prediction};
use crate::data::EmbeddingDataset;
use crate::error::{Result, WrapError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Child {
    Split(usize),
    Leaf(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitNode {
    pub feature: usize,
    pub threshold: f64,
    pub left: Child,
    pub right: Child,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    /// Training rows that reached this leaf, ascending.
    pub members: Vec<usize>,
    pub majority_label: u32,
    pub gini: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub n_classes: u32,
    pub n_dims: usize,
    pub root: Child,
    pub nodes: Vec<SplitNode>,
    pub leaves: Vec<Leaf>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

struct Builder<'a> {
    ds: &'a EmbeddingDataset,
    max_depth: usize,
    min_samples_leaf: usize,
    nodes: Vec<SplitNode>,
    leaves: Vec<Leaf>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.ds.n_classes() as usize];
        for &r in rows {
            counts[self.ds.label(r) as usize] += 1;
        }
        counts
    }

    fn grow(&mut self, mut rows: Vec<usize>, depth: usize) -> Child {
        let counts = self.class_counts(&rows);
        let impurity = gini(&counts, rows.len());
        let split = if depth < self.max_depth && impurity > 0.0 {
            self.best_split(&rows, impurity)
        } else {
            None
        };
        match split {
            Some(best) => {
                let (left, right): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&r| f64::from(self.ds.row(r)[best.feature]) < best.threshold);
                let id = self.nodes.len();
                self.nodes.push(SplitNode {
                    feature: best.feature,
                    threshold: best.threshold,
                    left: Child::Leaf(usize::MAX),
                    right: Child::Leaf(usize::MAX),
                });
                let l = self.grow(left, depth + 1);
                let r = self.grow(right, depth + 1);
                self.nodes[id].left = l;
                self.nodes[id].right = r;
                Child::Split(id)
            }
            None => {
                rows.sort_unstable();
                let majority_label = majority_vote(
                    rows.iter().map(|&r| self.ds.label(r)),
                    self.ds.n_classes(),
                );
                self.leaves.push(Leaf {
                    members: rows,
                    majority_label,
                    gini: impurity,
                });
                Child::Leaf(self.leaves.len() - 1)
            }
        }
    }

    fn best_split(&self, rows: &[usize], parent_gini: f64) -> Option<BestSplit> {
        let n = rows.len();
        let min_leaf = self.min_samples_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        let total = self.class_counts(rows);
        let mut best: Option<BestSplit> = None;
        let mut sorted: Vec<(f32, u32)> = Vec::with_capacity(n);
        for feature in 0..self.ds.n_dims() {
            sorted.clear();
            sorted.extend(
                rows.iter()
                    .map(|&r| (self.ds.row(r)[feature], self.ds.label(r))),
            );
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0usize; total.len()];
            for i in 0..n - 1 {
                left[sorted[i].1 as usize] += 1;
                let n_left = i + 1;
                if sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                if n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let weighted = (n_left as f64 * gini(&left, n_left)
                    + (n - n_left) as f64 * gini(&right, n - n_left))
                    / n as f64;
                let gain = parent_gini - weighted;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let lo = f64::from(sorted[i].0);
                    let hi = f64::from(sorted[i + 1].0);
                    best = Some(BestSplit {
                        feature,
                        threshold: lo + (hi - lo) / 2.0,
                        gain,
                    });
                }
            }
        }
        best
    }
}

/// Grows a CART tree on the training rows.
pub fn fit_tree(
    ds: &EmbeddingDataset,
    train: &[usize],
    max_depth: usize,
    min_samples_leaf: usize,
) -> Result<TreeModel> {
    check_train(ds, train)?;
    if min_samples_leaf > train.len() {
        return Err(WrapError::TooFewRows {
            what: "min_samples_leaf",
            value: min_samples_leaf,
            available: train.len(),
        });
    }
    let mut builder = Builder {
        ds,
        max_depth,
        min_samples_leaf,
        nodes: Vec::new(),
        leaves: Vec::new(),
    };
    let root = builder.grow(train.to_vec(), 0);
    Ok(TreeModel {
        max_depth,
        min_samples_leaf,
        n_classes: ds.n_classes(),
        n_dims: ds.n_dims(),
        root,
        nodes: builder.nodes,
        leaves: builder.leaves,
    })
}

impl TreeModel {
    /// Leaf reached by `x`.
    pub fn leaf_of(&self, x: &[f32]) -> Result<usize> {
        if x.len() != self.n_dims {
            return Err(WrapError::DimensionMismatch {
                expected: self.n_dims,
                got: x.len(),
            });
        }
        let mut at = self.root;
        loop {
            match at {
                Child::Leaf(id) => return Ok(id),
                Child::Split(id) => {
                    let node = &self.nodes[id];
                    at = if f64::from(x[node.feature]) >= node.threshold {
                        node.right
                    } else {
                        node.left
                    };
                }
            }
        }
    }

    /// Leaf majority label; support is the leaf's members ranked by distance to `x`.
    pub fn predict(&self, ds: &EmbeddingDataset, x: &[f32]) -> Result<Prediction> {
        let leaf_id = self.leaf_of(x)?;
        let leaf = &self.leaves[leaf_id];
        Ok(Prediction {
            label: leaf.majority_label,
            support: rank_by_distance(ds, &leaf.members, x),
            group: Some(leaf_id),
        })
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &TreeModel, c: Child) -> usize {
            match c {
                Child::Leaf(_) => 0,
                Child::Split(id) => 1 + walk(t, t.nodes[id].left).max(walk(t, t.nodes[id].right)),
            }
        }
        walk(self, self.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn separable() -> EmbeddingDataset {
        // labels 0 for x < 5, 1 for x > 5
        let xs = [0.0f32, 1.0, 2.0, 3.0, 4.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        let rows: Vec<Vec<f32>> = xs.iter().map(|&x| vec![x]).collect();
        let labels = xs.iter().map(|&x| u32::from(x > 5.0)).collect();
        EmbeddingDataset::from_rows(&rows, labels, 2).unwrap()
    }

    /// Independent oracle: try every threshold between sorted values and
    /// return the (threshold, errors) pair with the fewest misclassifications.
    fn best_stump(xs: &[f32], ys: &[u32]) -> (f64, usize) {
        let mut vals: Vec<f32> = xs.to_vec();
        vals.sort_by(f32::total_cmp);
        vals.dedup();
        let mut best = (f64::NAN, usize::MAX);
        for w in vals.windows(2) {
            let t = (f64::from(w[0]) + f64::from(w[1])) / 2.0;
            let errs = xs
                .iter()
                .zip(ys)
                .filter(|(&x, &y)| u32::from(f64::from(x) >= t) != y)
                .count();
            if errs < best.1 {
                best = (t, errs);
            }
        }
        best
    }

    #[test]
    fn depth_one_finds_the_separating_threshold() {
        let ds = separable();
        let train: Vec<usize> = (0..10).collect();
        let (oracle_t, oracle_errs) = best_stump(
            &(0..10).map(|i| ds.row(i)[0]).collect::<Vec<_>>(),
            ds.labels(),
        );
        assert_eq!(oracle_errs, 0);
        let tree = fit_tree(&ds, &train, 1, 1).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        let t = tree.nodes[0].threshold;
        assert!(t > 4.0 && t < 6.0);
        assert_eq!(t, oracle_t);
        for i in 0..10 {
            assert_eq!(tree.predict(&ds, ds.row(i)).unwrap().label, ds.label(i));
        }
        let p = tree.predict(&ds, &[2.0]).unwrap();
        assert_eq!(p.label, 0);
        let mut rows = p.support_rows();
        assert_eq!(rows[..2], [2, 1]);
        rows.sort_unstable();
        assert_eq!(rows, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn threshold_routes_right() {
        let ds = separable();
        let tree = fit_tree(&ds, &(0..10).collect::<Vec<_>>(), 1, 1).unwrap();
        let t = tree.nodes[0].threshold as f32;
        assert_eq!(f64::from(t), tree.nodes[0].threshold);
        assert_eq!(tree.predict(&ds, &[t]).unwrap().label, 1);
    }

    #[test]
    fn depth_zero_is_the_prior() {
        let ds = EmbeddingDataset::from_rows(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec![1, 0, 1, 1, 0],
            2,
        )
        .unwrap();
        let train: Vec<usize> = (0..5).collect();
        let tree = fit_tree(&ds, &train, 0, 1).unwrap();
        assert_eq!(tree.leaves.len(), 1);
        let p = tree.predict(&ds, &[-3.0]).unwrap();
        assert_eq!(p.label, 1);
        assert_eq!(p.support.len(), 5);
    }

    #[test]
    fn pure_node_is_not_split() {
        let ds = EmbeddingDataset::from_rows(
            &[vec![0.0], vec![5.0], vec![9.0]],
            vec![1, 1, 1],
            2,
        )
        .unwrap();
        let tree = fit_tree(&ds, &[0, 1, 2], 3, 1).unwrap();
        assert_eq!(tree.leaves.len(), 1);
        assert_eq!(tree.leaves[0].gini, 0.0);
        assert!(tree.nodes.is_empty());
    }

    #[test]
    fn min_samples_leaf_above_train_is_an_error() {
        let ds = separable();
        assert!(matches!(
            fit_tree(&ds, &[0, 1, 2], 3, 20),
            Err(WrapError::TooFewRows { value: 20, available: 3, .. })
        ));
    }

    #[test]
    fn feature_ties_prefer_lower_index() {
        // both features separate the classes perfectly
        let ds = EmbeddingDataset::from_rows(
            &[vec![0.0, 0.0], vec![1.0, 1.0], vec![5.0, 5.0], vec![6.0, 6.0]],
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        let tree = fit_tree(&ds, &[0, 1, 2, 3], 1, 1).unwrap();
        assert_eq!(tree.nodes[0].feature, 0);
    }

    proptest! {
        #[test]
        fn leaves_partition_training_rows(
            pts in proptest::collection::vec((-5i8..5, -5i8..5, 0u32..3), 1..120),
            depth in 0usize..4,
            min_leaf in 1usize..8,
        ) {
            let rows: Vec<Vec<f32>> = pts.iter().map(|p| vec![p.0 as f32, p.1 as f32]).collect();
            let labels: Vec<u32> = pts.iter().map(|p| p.2).collect();
            let ds = EmbeddingDataset::from_rows(&rows, labels, 3).unwrap();
            let train: Vec<usize> = (0..ds.n_rows()).filter(|i| i % 4 != 3).collect();
            prop_assume!(!train.is_empty() && min_leaf <= train.len());
            let tree = fit_tree(&ds, &train, depth, min_leaf).unwrap();
            prop_assert!(tree.depth() <= depth);
            let mut all: Vec<usize> = tree.leaves.iter().flat_map(|l| l.members.clone()).collect();
            all.sort_unstable();
            prop_assert_eq!(&all, &train);
            for (id, leaf) in tree.leaves.iter().enumerate() {
                prop_assert!(leaf.members.len() >= min_leaf);
                prop_assert_eq!(leaf.majority_label, majority_vote(leaf.members.iter().map(|&r| ds.label(r)), 3));
                for &r in &leaf.members {
                    prop_assert_eq!(tree.leaf_of(ds.row(r)).unwrap(), id);
                }
            }
            for i in 0..ds.n_rows() {
                let p = tree.predict(&ds, ds.row(i)).unwrap();
                prop_assert_eq!(p.label, majority_vote(p.support.iter().map(|s| ds.label(s.row)), 3));
            }
        }
    }
}
