//! Gaussian-blob embeddings for benchmarks and tests.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::EmbeddingDataset;
use crate::error::{Result, WrapError};
use crate::rng::{stream, STREAM_SYNTH};

/// One isotropic unit-variance blob per class. Class means sit on scaled
/// coordinate axes, so every pair of means is `separation` standard
/// deviations apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_per_class: usize,
    pub n_classes: u32,
    pub dims: usize,
    pub separation: f64,
    /// Class 0 gets `round(skew * n_per_class)` rows.
    pub skew: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_per_class: 100,
            n_classes: 2,
            dims: 16,
            separation: 4.0,
            skew: 1.0,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn class_sizes(&self) -> Vec<usize> {
        (0..self.n_classes)
            .map(|c| {
                if c == 0 {
                    (self.skew * self.n_per_class as f64).round() as usize
                } else {
                    self.n_per_class
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(WrapError::InvalidHyperparameter(msg));
        if self.n_classes == 0 || self.n_per_class == 0 {
            return bad("synth needs at least one class and one row per class".into());
        }
        if self.dims < self.n_classes as usize {
            return bad(format!(
                "synth places each class mean on its own axis: dims {} < n_classes {}",
                self.dims, self.n_classes
            ));
        }
        if !self.separation.is_finite() || self.separation < 0.0 {
            return bad(format!("separation must be finite and >= 0, got {}", self.separation));
        }
        if !self.skew.is_finite() || self.skew <= 0.0 || self.class_sizes()[0] == 0 {
            return bad(format!("skew {} leaves class 0 empty", self.skew));
        }
        Ok(())
    }
}

/// Rows come out shuffled, with ids `0..n` in file order.
pub fn gaussian_blobs(cfg: &SynthConfig) -> Result<EmbeddingDataset> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, STREAM_SYNTH);
    let offset = cfg.separation / std::f64::consts::SQRT_2;
    let mut rows: Vec<(u32, Vec<f32>)> = Vec::new();
    for (c, &size) in cfg.class_sizes().iter().enumerate() {
        for _ in 0..size {
            let row = (0..cfg.dims)
                .map(|j| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    let mean = if j == c { offset } else { 0.0 };
                    (mean + noise) as f32
                })
                .collect();
            rows.push((c as u32, row));
        }
    }
    rows.shuffle(&mut rng);
    let (labels, features): (Vec<u32>, Vec<Vec<f32>>) = rows.into_iter().unzip();
    EmbeddingDataset::from_rows(&features, labels, cfg.n_classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fit_knn;

    #[test]
    fn skewed_histogram() {
        let ds = gaussian_blobs(&SynthConfig { n_per_class: 50, skew: 3.0, ..Default::default() }).unwrap();
        assert_eq!(ds.class_histogram(), vec![150, 50]);
        assert_eq!(ds.n_dims(), 16);
    }

    #[test]
    fn seeded_determinism() {
        let cfg = SynthConfig { seed: 7, ..Default::default() };
        let (a, b) = (gaussian_blobs(&cfg).unwrap(), gaussian_blobs(&cfg).unwrap());
        assert_eq!(a.features(), b.features());
        assert_eq!(a.labels(), b.labels());
        let c = gaussian_blobs(&SynthConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.features(), c.features());
    }

    #[test]
    fn class_means_land_where_expected() {
        let cfg = SynthConfig { n_per_class: 2000, n_classes: 3, dims: 4, separation: 6.0, ..Default::default() };
        let ds = gaussian_blobs(&cfg).unwrap();
        let mut means = vec![vec![0.0f64; 4]; 3];
        for i in 0..ds.n_rows() {
            for (m, &x) in means[ds.label(i) as usize].iter_mut().zip(ds.row(i)) {
                *m += f64::from(x) / 2000.0;
            }
        }
        for (c, m) in means.iter().enumerate() {
            for (j, &v) in m.iter().enumerate() {
                let want = if j == c { 6.0 / 2f64.sqrt() } else { 0.0 };
                assert!((v - want).abs() < 0.1, "class {c} dim {j}: {v}");
            }
        }
    }

    #[test]
    fn eight_sigma_is_nearly_separable() {
        let cfg = SynthConfig { n_per_class: 300, n_classes: 4, separation: 8.0, seed: 3, ..Default::default() };
        let ds = gaussian_blobs(&cfg).unwrap();
        let split = crate::data::stratified_split(&ds, [0.7, 0.2, 0.1], 3).unwrap();
        let model = fit_knn(&ds, &split.train_idx, 5).unwrap();
        let correct = split
            .test_idx
            .iter()
            .filter(|&&i| model.predict(ds.row(i)).unwrap().label == ds.label(i))
            .count();
        assert!(correct as f64 / split.test_idx.len() as f64 >= 0.99);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(gaussian_blobs(&SynthConfig { n_classes: 5, dims: 4, ..Default::default() }).is_err());
        assert!(gaussian_blobs(&SynthConfig { skew: 0.0, ..Default::default() }).is_err());
        assert!(gaussian_blobs(&SynthConfig { separation: f64::NAN, ..Default::default() }).is_err());
    }
}
