use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EmbeddingDataset;
use crate::error::{Result, WrapError};
use crate::rng;

/// Disjoint train/validation/test row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_idx: Vec<usize>,
    pub valid_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub stratified: bool,
    pub seed: u64,
}

impl SplitSpec {
    /// Every row in train, nothing held out.
    pub fn all_train(n_rows: usize) -> Self {
        Self {
            train_idx: (0..n_rows).collect(),
            valid_idx: Vec::new(),
            test_idx: Vec::new(),
            stratified: false,
            seed: 0,
        }
    }

    pub fn parts(&self) -> [&[usize]; 3] {
        [&self.train_idx, &self.valid_idx, &self.test_idx]
    }

    /// Checks disjointness and bounds against a dataset of `n_rows`.
    pub fn validate(&self, n_rows: usize) -> Result<()> {
        let mut seen = vec![false; n_rows];
        for part in self.parts() {
            for &i in part {
                if i >= n_rows {
                    return Err(WrapError::InvalidSplit(format!(
                        "index {i} out of range for {n_rows} rows"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(WrapError::InvalidSplit(format!("index {i} appears twice")));
                }
            }
        }
        Ok(())
    }
}

/// Splits rows into train/valid/test with per-class proportions preserved.
///
/// Split sizes are the largest-remainder rounding of `fraction * n`. Each
/// class then receives `n_c * size / n` rows in every split, rounded up or
/// down so that row and column totals both stay exact; the rounded table
/// always exists because the fractional table is a feasible flow. Within a
/// class, rows are shuffled by `seed` before being dealt out.
pub fn stratified_split(
    ds: &EmbeddingDataset,
    fractions: [f64; 3],
    seed: u64,
) -> Result<SplitSpec> {
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(WrapError::InvalidSplit(format!(
            "fractions must be non-negative, got {fractions:?}"
        )));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(WrapError::InvalidSplit(format!(
            "fractions must sum to 1, got {total}"
        )));
    }
    let n = ds.n_rows();
    let n_splits = fractions.iter().filter(|&&f| f > 0.0).count();
    let hist = ds.class_histogram();
    for (class, &rows) in hist.iter().enumerate() {
        if rows > 0 && rows < n_splits {
            return Err(WrapError::ClassTooSmall {
                class: class as u32,
                rows,
                splits: n_splits,
            });
        }
    }

    let sizes = largest_remainder(&fractions, n);
    let counts = round_table(&sizes, &hist, n);

    let mut rng = rng::stream(seed, rng::STREAM_SPLIT);
    let mut parts: [Vec<usize>; 3] = Default::default();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); hist.len()];
    for i in 0..n {
        by_class[ds.label(i) as usize].push(i);
    }
    for (c, rows) in by_class.iter_mut().enumerate() {
        rows.shuffle(&mut rng);
        let mut start = 0;
        for (s, part) in parts.iter_mut().enumerate() {
            let take = counts[s][c];
            part.extend_from_slice(&rows[start..start + take]);
            start += take;
        }
    }
    for part in &mut parts {
        part.sort_unstable();
    }
    let [train_idx, valid_idx, test_idx] = parts;
    Ok(SplitSpec {
        train_idx,
        valid_idx,
        test_idx,
        stratified: true,
        seed,
    })
}

fn largest_remainder(fractions: &[f64; 3], n: usize) -> [usize; 3] {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes = [0usize; 3];
    for (s, e) in exact.iter().enumerate() {
        sizes[s] = e.floor() as usize;
    }
    let mut left = n - sizes.iter().sum::<usize>().min(n);
    let mut order: Vec<usize> = (0..3).filter(|&s| fractions[s] > 0.0).collect();
    // Stable sort keeps earlier splits first among equal remainders.
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra)
    });
    for &s in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[s] += 1;
        left -= 1;
    }
    sizes
}

/// Integer table `counts[split][class]` within one of `n_c * size / n`,
/// preserving every row sum (`sizes`) and column sum (`hist`).
fn round_table(sizes: &[usize; 3], hist: &[usize], n: usize) -> [Vec<usize>; 3] {
    let n_classes = hist.len();
    let mut counts: [Vec<usize>; 3] = Default::default();
    let mut has_frac: [Vec<bool>; 3] = Default::default();
    for s in 0..3 {
        for &nc in hist {
            let cell = nc * sizes[s];
            let (q, r) = (cell.checked_div(n).unwrap_or(0), cell.checked_rem(n).unwrap_or(0));
            counts[s].push(q);
            has_frac[s].push(r > 0);
        }
    }
    let row_need: Vec<usize> = (0..3)
        .map(|s| sizes[s] - counts[s].iter().sum::<usize>())
        .collect();
    let col_need: Vec<usize> = (0..n_classes)
        .map(|c| hist[c] - (0..3).map(|s| counts[s][c]).sum::<usize>())
        .collect();

    // Max flow: source -> split (row_need) -> class (1 where fractional) -> sink (col_need).
    let source = 0;
    let sink = 4 + n_classes;
    let nodes = sink + 1;
    let mut cap = vec![vec![0usize; nodes]; nodes];
    for s in 0..3 {
        cap[source][1 + s] = row_need[s];
        for c in 0..n_classes {
            if has_frac[s][c] {
                cap[1 + s][4 + c] = 1;
            }
        }
    }
    for c in 0..n_classes {
        cap[4 + c][sink] = col_need[c];
    }
    let original = cap.clone();
    loop {
        let mut parent = vec![usize::MAX; nodes];
        parent[source] = source;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            if u == sink {
                break;
            }
            for v in 0..nodes {
                if parent[v] == usize::MAX && cap[u][v] > 0 {
                    parent[v] = u;
                    stack.push(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            break;
        }
        let mut v = sink;
        while v != source {
            let u = parent[v];
            cap[u][v] -= 1;
            cap[v][u] += 1;
            v = u;
        }
    }
    for s in 0..3 {
        for c in 0..n_classes {
            if original[1 + s][4 + c] == 1 && cap[1 + s][4 + c] == 0 {
                counts[s][c] += 1;
            }
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset(hist: &[usize]) -> EmbeddingDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &k) in hist.iter().enumerate() {
            for i in 0..k {
                rows.push(vec![i as f32, c as f32]);
                labels.push(c as u32);
            }
        }
        EmbeddingDataset::from_rows(&rows, labels, hist.len() as u32).unwrap()
    }

    fn check_stratified(ds: &EmbeddingDataset, split: &SplitSpec) {
        split.validate(ds.n_rows()).unwrap();
        let n = ds.n_rows() as f64;
        let hist = ds.class_histogram();
        for part in split.parts() {
            if part.is_empty() {
                continue;
            }
            let size = part.len() as f64;
            for (c, &nc) in hist.iter().enumerate() {
                let in_part = part.iter().filter(|&&i| ds.label(i) == c as u32).count() as f64;
                let diff = (in_part / size - nc as f64 / n).abs();
                assert!(diff <= 1.0 / size + 1e-12, "class {c}: {diff} > 1/{size}");
            }
        }
    }

    #[test]
    fn skewed_seventy_twenty_ten() {
        let ds = dataset(&[300, 100]);
        let split = stratified_split(&ds, [0.7, 0.2, 0.1], 42).unwrap();
        assert_eq!(
            [split.train_idx.len(), split.valid_idx.len(), split.test_idx.len()],
            [280, 80, 40]
        );
        for part in split.parts() {
            let ones = part.iter().filter(|&&i| ds.label(i) == 1).count() as f64;
            let zeros = part.len() as f64 - ones;
            // 3:1 skew within one row per class
            assert!((zeros - 0.75 * part.len() as f64).abs() <= 1.0);
            assert!((ones - 0.25 * part.len() as f64).abs() <= 1.0);
        }
        check_stratified(&ds, &split);
    }

    #[test]
    fn all_train_boundary() {
        let ds = dataset(&[3, 2]);
        let split = stratified_split(&ds, [1.0, 0.0, 0.0], 7).unwrap();
        assert_eq!(split.train_idx, vec![0, 1, 2, 3, 4]);
        assert!(split.valid_idx.is_empty() && split.test_idx.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let ds = dataset(&[50, 30, 20]);
        let a = stratified_split(&ds, [0.7, 0.2, 0.1], 9).unwrap();
        let b = stratified_split(&ds, [0.7, 0.2, 0.1], 9).unwrap();
        let c = stratified_split(&ds, [0.7, 0.2, 0.1], 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn tiny_class_rejected() {
        let ds = dataset(&[10, 2]);
        let err = stratified_split(&ds, [0.7, 0.2, 0.1], 0).unwrap_err();
        assert!(matches!(err, WrapError::ClassTooSmall { class: 1, rows: 2, splits: 3 }));
    }

    #[test]
    fn bad_fractions_rejected() {
        let ds = dataset(&[10, 10]);
        assert!(stratified_split(&ds, [0.5, 0.2, 0.1], 0).is_err());
        assert!(stratified_split(&ds, [1.2, -0.2, 0.0], 0).is_err());
    }

    proptest! {
        #[test]
        fn stratification_bound_holds(
            hist in proptest::collection::vec(3usize..60, 1..6),
            a in 1u32..10, b in 1u32..10, c in 1u32..10,
            seed in any::<u64>(),
        ) {
            let t = (a + b + c) as f64;
            let ds = dataset(&hist);
            let split = stratified_split(&ds, [a as f64 / t, b as f64 / t, 1.0 - (a + b) as f64 / t], seed).unwrap();
            let total: usize = split.parts().iter().map(|p| p.len()).sum();
            prop_assert_eq!(total, ds.n_rows());
            check_stratified(&ds, &split);
        }
    }
}
