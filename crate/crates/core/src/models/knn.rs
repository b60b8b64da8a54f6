use super::{check_train, majority_vote, KdTree, Prediction, Support};
use crate::data::EmbeddingDataset;
use crate::error::{Result, WrapError};

/// Unweighted k-nearest-neighbor classifier over a kd-tree.
#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    n_classes: u32,
    dims: usize,
    train_ref: Vec<usize>,
    /// Label of every dataset row, indexed by row (only training rows are read).
    labels: Vec<u32>,
    index: KdTree,
}

/// Indexes the training rows of `ds` for k-nearest-neighbor voting.
pub fn fit_knn(ds: &EmbeddingDataset, train: &[usize], k: usize) -> Result<KnnModel> {
    check_train(ds, train)?;
    if k == 0 {
        return Err(WrapError::InvalidHyperparameter("k must be at least 1".into()));
    }
    if k > train.len() {
        return Err(WrapError::TooFewRows {
            what: "k",
            value: k,
            available: train.len(),
        });
    }
    let d = ds.n_dims();
    let mut points = Vec::with_capacity(train.len() * d);
    for &r in train {
        points.extend_from_slice(ds.row(r));
    }
    Ok(KnnModel {
        k,
        n_classes: ds.n_classes(),
        dims: d,
        train_ref: train.to_vec(),
        labels: ds.labels().to_vec(),
        index: KdTree::build(&points, d, train),
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn n_dims(&self) -> usize {
        self.dims
    }

    pub fn train_ref(&self) -> &[usize] {
        &self.train_ref
    }

    /// Majority label of the `k` nearest training rows, with those rows
    /// ranked by ascending distance.
    pub fn predict(&self, x: &[f32]) -> Result<Prediction> {
        self.predict_with_k(x, self.k)
    }

    /// Same as [`predict`](Self::predict) with a different neighbor count.
    pub fn predict_with_k(&self, x: &[f32], k: usize) -> Result<Prediction> {
        if x.len() != self.dims {
            return Err(WrapError::DimensionMismatch {
                expected: self.dims,
                got: x.len(),
            });
        }
        if k == 0 || k > self.train_ref.len() {
            return Err(WrapError::TooFewRows {
                what: "k",
                value: k,
                available: self.train_ref.len(),
            });
        }
        let support: Vec<Support> = self
            .index
            .knn(x, k)
            .into_iter()
            .map(|h| Support {
                row: h.row,
                distance: h.dist2.sqrt(),
            })
            .collect();
        let label = majority_vote(support.iter().map(|s| self.labels[s.row]), self.n_classes);
        Ok(Prediction {
            label,
            support,
            group: None,
        })
    }
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

    #[test]
    fn three_nearest_on_a_line() {
        let ds = line();
        let m = fit_knn(&ds, &[0, 1, 2, 3], 3).unwrap();
        let p = m.predict(&[0.5]).unwrap();
        assert_eq!(p.label, 0);
        // 0 and 1 are both 0.5 away; the row-index tie rule puts row 0 first
        assert_eq!(p.support_rows(), vec![0, 1, 2]);
        assert_eq!(p.support[2].distance, 9.5);
    }

    #[test]
    fn exact_match_with_k1() {
        let ds = line();
        let m = fit_knn(&ds, &[0, 1, 2, 3], 1).unwrap();
        assert_eq!(m.predict(&[10.0]).unwrap().label, 1);
        assert_eq!(m.predict(&[10.0]).unwrap().support_rows(), vec![2]);
    }

    #[test]
    fn two_way_tie_goes_to_class_zero() {
        let ds = line();
        let m = fit_knn(&ds, &[0, 1, 2, 3], 2).unwrap();
        // neighbors of 5.6 are rows 1 (label 0) and 2 (label 1)
        let p = m.predict(&[5.6]).unwrap();
        assert_eq!(p.support_rows(), vec![2, 1]);
        assert_eq!(p.label, 0);
    }

    #[test]
    fn errors() {
        let ds = line();
        assert!(matches!(
            fit_knn(&ds, &[0, 1], 3),
            Err(WrapError::TooFewRows { value: 3, available: 2, .. })
        ));
        let m = fit_knn(&ds, &[0, 1, 2, 3], 3).unwrap();
        assert!(matches!(
            m.predict(&[0.0, 1.0]),
            Err(WrapError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn only_training_rows_are_indexed() {
        let ds = line();
        let m = fit_knn(&ds, &[2, 3, 0], 3).unwrap();
        assert_eq!(m.predict(&[1.0]).unwrap().support_rows(), vec![0, 2, 3]);
    }
}
