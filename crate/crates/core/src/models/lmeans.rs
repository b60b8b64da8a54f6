//! L-means: k-means with L clusters, each labeled by its members' majority.
//!
//! Lloyd iterations from a k-means++ start. A cluster left empty by an
//! assignment step takes the point farthest from its own centroid (ties to
//! the lower row), drawn only from clusters with more than one member. The
//! recorded inertia after every centroid update is non-increasing.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{check_train, majority_vote, sq_dist, Prediction, Support};
use crate::data::EmbeddingDataset;
use crate::error::{Result, WrapError};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LMeansParams {
    /// Number of clusters; `None` means one per class.
    #[serde(default)]
    pub n_clusters: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LMeansParams {
    fn default() -> Self {
        Self {
            n_clusters: None,
            max_iter: 300,
            tol: 1e-6,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LMeansModel {
    pub n_classes: u32,
    pub n_dims: usize,
    /// Row-major `L x n_dims`.
    pub centroids: Vec<f64>,
    /// Training rows in fit order.
    pub train_ref: Vec<usize>,
    /// Cluster of each training row, parallel to `train_ref`.
    pub assignments: Vec<usize>,
    pub cluster_labels: Vec<u32>,
    /// Members of each cluster, nearest to the centroid first.
    pub cluster_members: Vec<Vec<Support>>,
    /// Inertia after each centroid update.
    pub inertia_history: Vec<f64>,
    pub n_iter: usize,
}

fn sq_dist_f64(a: &[f32], c: &[f64]) -> f64 {
    a.iter()
        .zip(c)
        .map(|(&x, &y)| {
            let d = f64::from(x) - y;
            d * d
        })
        .sum()
}

/// Index of the nearest centroid, lowest id on ties.
fn nearest(x: &[f32], centroids: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cent) in centroids.chunks_exact(d.max(1)).enumerate() {
        let dist = sq_dist_f64(x, &cent[..d]);
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}

fn kmeans_plus_plus(ds: &EmbeddingDataset, train: &[usize], l: usize, rng: &mut rng::Rng) -> Vec<f64> {
    let d = ds.n_dims();
    let n = train.len();
    let mut centroids = Vec::with_capacity(l * d);
    let first = rng.random_range(0..n);
    centroids.extend(ds.row(train[first]).iter().map(|&v| f64::from(v)));
    let mut closest: Vec<f64> = train
        .iter()
        .map(|&r| sq_dist(ds.row(r), ds.row(train[first])))
        .collect();
    for _ in 1..l {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in closest.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            // rounding can run off the end; fall back to the last positive weight
            if closest[chosen] == 0.0 {
                chosen = closest.iter().rposition(|&w| w > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let row = ds.row(train[pick]);
        centroids.extend(row.iter().map(|&v| f64::from(v)));
        for (i, &r) in train.iter().enumerate() {
            closest[i] = closest[i].min(sq_dist(ds.row(r), row));
        }
    }
    centroids
}

struct Lloyd<'a> {
    ds: &'a EmbeddingDataset,
    train: &'a [usize],
    l: usize,
    d: usize,
}

impl Lloyd<'_> {
    fn assign(&self, centroids: &[f64]) -> Vec<usize> {
        let mut assign: Vec<usize> = Vec::with_capacity(self.train.len());
        let mut dist = Vec::with_capacity(self.train.len());
        for &r in self.train {
            let (c, d2) = nearest(self.ds.row(r), centroids, self.d);
            assign.push(c);
            dist.push(d2);
        }
        let mut sizes = vec![0usize; self.l];
        for &c in &assign {
            sizes[c] += 1;
        }
        for empty in 0..self.l {
            if sizes[empty] > 0 {
                continue;
            }
            let mut far: Option<usize> = None;
            for i in 0..assign.len() {
                if sizes[assign[i]] > 1 && far.is_none_or(|f| dist[i] > dist[f]) {
                    far = Some(i);
                }
            }
            // l <= n guarantees a donor cluster with two or more members
            let i = far.expect("a cluster with more than one member");
            sizes[assign[i]] -= 1;
            assign[i] = empty;
            sizes[empty] = 1;
            dist[i] = 0.0;
        }
        assign
    }

    fn means(&self, assign: &[usize]) -> Vec<f64> {
        let mut sums = vec![0.0f64; self.l * self.d];
        let mut sizes = vec![0usize; self.l];
        for (&r, &c) in self.train.iter().zip(assign) {
            sizes[c] += 1;
            for (s, &v) in sums[c * self.d..(c + 1) * self.d].iter_mut().zip(self.ds.row(r)) {
                *s += f64::from(v);
            }
        }
        for c in 0..self.l {
            for s in &mut sums[c * self.d..(c + 1) * self.d] {
                *s /= sizes[c] as f64;
            }
        }
        sums
    }

    fn inertia(&self, assign: &[usize], centroids: &[f64]) -> f64 {
        self.train
            .iter()
            .zip(assign)
            .map(|(&r, &c)| sq_dist_f64(self.ds.row(r), &centroids[c * self.d..(c + 1) * self.d]))
            .sum()
    }
}

/// Clusters the training rows and labels every cluster by majority vote.
pub fn fit_lmeans(ds: &EmbeddingDataset, train: &[usize], params: &LMeansParams) -> Result<LMeansModel> {
    check_train(ds, train)?;
    let l = params.n_clusters.unwrap_or(ds.n_classes() as usize);
    if l == 0 {
        return Err(WrapError::InvalidHyperparameter("L must be at least 1".into()));
    }
    if l > train.len() {
        return Err(WrapError::TooFewRows {
            what: "L",
            value: l,
            available: train.len(),
        });
    }
    let d = ds.n_dims();
    let lloyd = Lloyd { ds, train, l, d };
    let mut rng = rng::stream(params.seed, rng::STREAM_KMEANS);

    let initial = kmeans_plus_plus(ds, train, l, &mut rng);
    let mut assign = lloyd.assign(&initial);
    let mut centroids = lloyd.means(&assign);
    let mut history = vec![lloyd.inertia(&assign, &centroids)];
    let mut n_iter = 1;
    while n_iter < params.max_iter {
        let next_assign = lloyd.assign(&centroids);
        if next_assign == assign {
            break;
        }
        let next = lloyd.means(&next_assign);
        let next_inertia = lloyd.inertia(&next_assign, &next);
        // Only rounding can make a reassignment look worse; treat it as converged.
        if next_inertia > *history.last().unwrap() {
            break;
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assign = next_assign;
        centroids = next;
        history.push(next_inertia);
        n_iter += 1;
        if shift < params.tol {
            break;
        }
    }

    let mut cluster_members: Vec<Vec<Support>> = vec![Vec::new(); l];
    for (&r, &c) in train.iter().zip(&assign) {
        cluster_members[c].push(Support {
            row: r,
            distance: sq_dist_f64(ds.row(r), &centroids[c * d..(c + 1) * d]).sqrt(),
        });
    }
    for members in &mut cluster_members {
        members.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.row.cmp(&b.row)));
    }
    let cluster_labels = cluster_members
        .iter()
        .map(|m| majority_vote(m.iter().map(|s| ds.label(s.row)), ds.n_classes()))
        .collect();

    Ok(LMeansModel {
        n_classes: ds.n_classes(),
        n_dims: d,
        centroids,
        train_ref: train.to_vec(),
        assignments: assign,
        cluster_labels,
        cluster_members,
        inertia_history: history,
        n_iter,
    })
}

impl LMeansModel {
    pub fn n_clusters(&self) -> usize {
        self.cluster_labels.len()
    }

    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.n_dims..(c + 1) * self.n_dims]
    }

    /// Nearest centroid (lowest id on ties) and its cluster's label and members.
    pub fn predict(&self, x: &[f32]) -> Result<Prediction> {
        if x.len() != self.n_dims {
            return Err(WrapError::DimensionMismatch {
                expected: self.n_dims,
                got: x.len(),
            });
        }
        let (c, _) = nearest(x, &self.centroids, self.n_dims);
        Ok(Prediction {
            label: self.cluster_labels[c],
            support: self.cluster_members[c].clone(),
            group: Some(c),
        })
    }

    pub fn inertia(&self) -> f64 {
        *self.inertia_history.last().unwrap_or(&0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(l: usize, seed: u64) -> LMeansParams {
        LMeansParams {
            n_clusters: Some(l),
            seed,
            ..LMeansParams::default()
        }
    }

    fn line(xs: &[f32], ys: &[u32]) -> EmbeddingDataset {
        let rows: Vec<Vec<f32>> = xs.iter().map(|&x| vec![x]).collect();
        EmbeddingDataset::from_rows(&rows, ys.to_vec(), 2).unwrap()
    }

    /// Oracle: best contiguous 2-partition of sorted 1-D points.
    fn best_two_partition(xs: &[f64]) -> (f64, f64) {
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let sse = |s: &[f64]| {
            let m = mean(s);
            s.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
        };
        (1..xs.len())
            .map(|cut| (sse(&xs[..cut]) + sse(&xs[cut..]), cut))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, cut)| (mean(&xs[..cut]), mean(&xs[cut..])))
            .unwrap()
    }

    fn sorted_centroids(m: &LMeansModel) -> Vec<f64> {
        let mut c = m.centroids.clone();
        c.sort_by(f64::total_cmp);
        c
    }

    #[test]
    fn two_clusters_on_a_line() {
        let ds = line(&[0.0, 1.0, 9.0, 10.0], &[0, 0, 1, 1]);
        let (a, b) = best_two_partition(&[0.0, 1.0, 9.0, 10.0]);
        assert_eq!((a, b), (0.5, 9.5));
        for seed in 0..20 {
            let m = fit_lmeans(&ds, &[0, 1, 2, 3], &params(2, seed)).unwrap();
            assert_eq!(sorted_centroids(&m), vec![0.5, 9.5]);
            let p = m.predict(&[2.0]).unwrap();
            assert_eq!(m.centroid(p.group.unwrap()), &[0.5]);
            assert_eq!(p.label, 0);
            let mut labels_by_centroid: Vec<(f64, u32)> =
                (0..2).map(|c| (m.centroid(c)[0], m.cluster_labels[c])).collect();
            labels_by_centroid.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert_eq!(labels_by_centroid, vec![(0.5, 0), (9.5, 1)]);
        }
    }

    #[test]
    fn one_cluster_per_point() {
        let ds = line(&[0.0, 1.0, 9.0, 10.0, 4.0], &[0, 0, 1, 1, 0]);
        let m = fit_lmeans(&ds, &[0, 1, 2, 3, 4], &params(5, 3)).unwrap();
        assert_eq!(m.inertia(), 0.0);
        assert_eq!(sorted_centroids(&m), vec![0.0, 1.0, 4.0, 9.0, 10.0]);
    }

    #[test]
    fn duplication_keeps_centroids() {
        let ds = line(
            &[0.0, 1.0, 9.0, 10.0, 0.0, 1.0, 9.0, 10.0],
            &[0, 0, 1, 1, 0, 0, 1, 1],
        );
        let once = fit_lmeans(&ds, &[0, 1, 2, 3], &params(2, 5)).unwrap();
        let twice = fit_lmeans(&ds, &(0..8).collect::<Vec<_>>(), &params(2, 5)).unwrap();
        assert_eq!(sorted_centroids(&once), sorted_centroids(&twice));
    }

    #[test]
    fn equidistant_query_takes_lower_cluster() {
        let ds = line(&[0.0, 1.0, 9.0, 10.0], &[0, 0, 1, 1]);
        let m = fit_lmeans(&ds, &[0, 1, 2, 3], &params(2, 1)).unwrap();
        assert_eq!(m.predict(&[5.0]).unwrap().group, Some(0));
        let c1 = m.centroid(1)[0] as f32;
        assert_eq!(m.predict(&[c1]).unwrap().group, Some(1));
    }

    #[test]
    fn all_identical_points_fill_every_cluster() {
        let ds = line(&[3.0; 6], &[0, 1, 0, 1, 0, 0]);
        let m = fit_lmeans(&ds, &(0..6).collect::<Vec<_>>(), &params(3, 0)).unwrap();
        assert!(m.cluster_members.iter().all(|c| !c.is_empty()));
        assert_eq!(m.inertia(), 0.0);
    }

    #[test]
    fn l_above_train_is_an_error() {
        let ds = line(&[0.0, 1.0], &[0, 1]);
        assert!(matches!(
            fit_lmeans(&ds, &[0, 1], &params(3, 0)),
            Err(WrapError::TooFewRows { value: 3, .. })
        ));
    }

    proptest! {
        #[test]
        fn lloyd_invariants(
            pts in proptest::collection::vec((-20i16..20, -20i16..20, 0u32..2), 4..80),
            l in 1usize..6,
            seed in any::<u64>(),
        ) {
            let rows: Vec<Vec<f32>> = pts.iter().map(|p| vec![p.0 as f32 * 0.3, p.1 as f32]).collect();
            let labels = pts.iter().map(|p| p.2).collect();
            let ds = EmbeddingDataset::from_rows(&rows, labels, 2).unwrap();
            let train: Vec<usize> = (0..ds.n_rows()).collect();
            prop_assume!(l <= train.len());
            let m = fit_lmeans(&ds, &train, &params(l, seed)).unwrap();
            for w in m.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0], "inertia rose: {:?}", m.inertia_history);
            }
            for c in 0..l {
                let members: Vec<usize> = m.cluster_members[c].iter().map(|s| s.row).collect();
                prop_assert!(!members.is_empty());
                for j in 0..2 {
                    let mean = members.iter().map(|&r| f64::from(ds.row(r)[j])).sum::<f64>() / members.len() as f64;
                    let got = m.centroid(c)[j];
                    prop_assert!((got - mean).abs() <= 1e-5 * mean.abs().max(1.0));
                }
            }
            let p = m.predict(&[0.1, -0.2]).unwrap();
            prop_assert_eq!(p.label, majority_vote(p.support.iter().map(|s| ds.label(s.row)), 2));
        }
    }
}
