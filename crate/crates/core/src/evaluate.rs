//! Classification metrics, the pooled two-proportion z-test, and a
//! two-component PCA for plotting.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::EmbeddingDataset;
use crate::error::{Result, WrapError};
use crate::rng::{stream, STREAM_PCA};

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Percent-scaled metrics. Macro means run over every class, including
/// classes absent from both truth and predictions (which score 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[truth][predicted]`
    pub confusion: Vec<Vec<u64>>,
}

pub fn classification_metrics(y_true: &[u32], y_pred: &[u32], n_classes: u32) -> Result<MetricReport> {
    if y_true.is_empty() {
        return Err(WrapError::Config("cannot score an empty prediction set".into()));
    }
    if y_true.len() != y_pred.len() {
        return Err(WrapError::Config(format!(
            "{} labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let k = n_classes as usize;
    let mut confusion = vec![vec![0u64; k]; k];
    for (row, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
        if t >= n_classes || p >= n_classes {
            return Err(WrapError::LabelOutOfRange {
                row,
                label: t.max(p),
                n_classes,
            });
        }
        confusion[t as usize][p as usize] += 1;
    }
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = confusion[c][c];
            let support: u64 = confusion[c].iter().sum();
            let predicted: u64 = confusion.iter().map(|r| r[c]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics { precision, recall, f1, support }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64;
    let trace: u64 = (0..k).map(|c| confusion[c][c]).sum();
    Ok(MetricReport {
        n: y_true.len(),
        accuracy: ratio(trace, y_true.len() as u64),
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
        confusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub z: f64,
    /// Two-sided.
    pub p: f64,
    pub alpha: f64,
    pub significant: bool,
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Pooled two-proportion z-test of rate `m1` over `n1` trials against `m2`
/// over `n2`.
pub fn two_proportion_z(m1: f64, n1: u64, m2: f64, n2: u64) -> Result<SignificanceResult> {
    if !(0.0..=1.0).contains(&m1) || !(0.0..=1.0).contains(&m2) || n1 == 0 || n2 == 0 {
        return Err(WrapError::Config(format!(
            "z-test needs rates in [0, 1] and counts >= 1, got ({m1}, {n1}) and ({m2}, {n2})"
        )));
    }
    let (a, b) = (n1 as f64, n2 as f64);
    let pooled = (a * m1 + b * m2) / (a + b);
    let z = if pooled <= 0.0 || pooled >= 1.0 {
        0.0
    } else {
        (m1 - m2) / (pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b)).sqrt()
    };
    let p = (2.0 * normal_cdf(-z.abs())).min(1.0);
    Ok(SignificanceResult {
        z,
        p,
        alpha: ALPHA,
        significant: p < ALPHA,
    })
}

/// Metric-by-metric test of system `a` against system `b`, treating each
/// percentage as a proportion over the evaluated count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub accuracy: SignificanceResult,
    pub macro_precision: SignificanceResult,
    pub macro_recall: SignificanceResult,
    pub macro_f1: SignificanceResult,
}

pub fn compare_reports(a: &MetricReport, b: &MetricReport) -> Result<Comparison> {
    let test = |x: f64, y: f64| two_proportion_z(x / 100.0, a.n as u64, y / 100.0, b.n as u64);
    Ok(Comparison {
        accuracy: test(a.accuracy, b.accuracy)?,
        macro_precision: test(a.macro_precision, b.macro_precision)?,
        macro_recall: test(a.macro_recall, b.macro_recall)?,
        macro_f1: test(a.macro_f1, b.macro_f1)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Row-major `n_rows × 2`.
    pub coords: Vec<[f64; 2]>,
    pub mean: Vec<f64>,
    /// Unit-norm principal axes, largest variance first.
    pub components: [Vec<f64>; 2],
    /// Sample variance along each axis.
    pub eigenvalues: [f64; 2],
    /// Share of total variance along each axis.
    pub explained: [f64; 2],
}

const POWER_ITERS: usize = 2000;
const POWER_TOL: f64 = 1e-13;

struct Centered {
    x: Vec<f64>,
    n: usize,
    d: usize,
}

impl Centered {
    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    /// `C v` for the sample covariance `C`, without forming `C`.
    fn cov_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for i in 0..self.n {
            let row = self.row(i);
            let s = dot(row, v);
            for (o, r) in out.iter_mut().zip(row) {
                *o += s * r;
            }
        }
        let scale = 1.0 / (self.n - 1) as f64;
        out.iter_mut().for_each(|o| *o *= scale);
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn orthogonalize(v: &mut [f64], against: &[f64]) {
    let s = dot(v, against);
    v.iter_mut().zip(against).for_each(|(x, a)| *x -= s * a);
}

/// Power iteration restricted to the orthogonal complement of `deflate`.
fn leading_axis(c: &Centered, start: Vec<f64>, deflate: Option<&[f64]>) -> Vec<f64> {
    let mut v = start;
    if let Some(u) = deflate {
        orthogonalize(&mut v, u);
    }
    normalize(&mut v);
    for _ in 0..POWER_ITERS {
        let mut w = c.cov_mul(&v);
        let before = dot(&w, &w).sqrt();
        if let Some(u) = deflate {
            // twice, so rounding left by the first pass is removed too
            orthogonalize(&mut w, u);
            orthogonalize(&mut w, u);
        }
        // no variance left outside `deflate`
        if normalize(&mut w) <= 1e-10 * before.max(f64::MIN_POSITIVE) {
            return vec![0.0; v.len()];
        }
        let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
        v = w;
        if delta < POWER_TOL {
            break;
        }
    }
    v
}

/// A unit vector orthogonal to `u` (used when the residual variance is zero).
fn any_orthogonal(u: &[f64]) -> Vec<f64> {
    let j = (0..u.len())
        .min_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
        .unwrap_or(0);
    let mut v = vec![0.0; u.len()];
    v[j] = 1.0;
    orthogonalize(&mut v, u);
    normalize(&mut v);
    v
}

/// Fixes the sign so the largest-magnitude entry is positive.
fn canonical_sign(v: &mut [f64]) {
    if let Some(big) = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())) {
        if big < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Projects the mean-centered features onto their top two principal axes.
pub fn pca2_project(ds: &EmbeddingDataset, seed: u64) -> Result<Projection> {
    let (n, d) = (ds.n_rows(), ds.n_dims());
    if n < 2 {
        return Err(WrapError::Config(format!("projection needs at least 2 rows, got {n}")));
    }
    let mut mean = vec![0.0f64; d];
    for i in 0..n {
        mean.iter_mut().zip(ds.row(i)).for_each(|(m, &x)| *m += f64::from(x));
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut x = Vec::with_capacity(n * d);
    for i in 0..n {
        x.extend(ds.row(i).iter().zip(&mean).map(|(&v, m)| f64::from(v) - m));
    }
    let c = Centered { x, n, d };
    let total: f64 = c.x.iter().map(|v| v * v).sum::<f64>() / (n - 1) as f64;
    if total == 0.0 {
        return Ok(Projection {
            coords: vec![[0.0; 2]; n],
            mean,
            components: [vec![0.0; d], vec![0.0; d]],
            eigenvalues: [0.0; 2],
            explained: [0.0; 2],
        });
    }

    let mut rng = stream(seed, STREAM_PCA);
    let mut start = || -> Vec<f64> { (0..d).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let v1 = leading_axis(&c, start(), None);
    let mut v2 = if d > 1 {
        let v = leading_axis(&c, start(), Some(&v1));
        if dot(&v, &v) > 0.5 {
            v
        } else {
            any_orthogonal(&v1)
        }
    } else {
        vec![0.0]
    };

    // Rayleigh-Ritz on span{v1, v2}: exact ordering and a cleaner split
    // when the two leading eigenvalues are close.
    let (cv1, cv2) = (c.cov_mul(&v1), c.cov_mul(&v2));
    let (a, b, e) = (dot(&v1, &cv1), dot(&v1, &cv2), dot(&v2, &cv2));
    let (mut u1, mut u2) = (v1.clone(), v2.clone());
    if b != 0.0 && d > 1 {
        let theta = 0.5 * (2.0 * b).atan2(a - e);
        let (s, co) = theta.sin_cos();
        for j in 0..d {
            u1[j] = co * v1[j] + s * v2[j];
            u2[j] = -s * v1[j] + co * v2[j];
        }
        normalize(&mut u1);
        orthogonalize(&mut u2, &u1);
        normalize(&mut u2);
    }
    canonical_sign(&mut u1);
    canonical_sign(&mut u2);
    let l1 = dot(&u1, &c.cov_mul(&u1)).max(0.0);
    let l2 = if d > 1 { dot(&u2, &c.cov_mul(&u2)).max(0.0) } else { 0.0 };
    if d == 1 {
        v2 = vec![0.0];
        u2 = v2;
    }
    let coords = (0..n).map(|i| [dot(c.row(i), &u1), dot(c.row(i), &u2)]).collect();
    Ok(Projection {
        coords,
        mean,
        components: [u1, u2],
        eigenvalues: [l1, l2],
        explained: [(l1 / total).min(1.0), (l2 / total).min(1.0)],
    })
}

/// Writes `id,label,pc1,pc2` rows.
pub fn write_projection_csv(ds: &EmbeddingDataset, proj: &Projection, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| WrapError::io(path, e))?;
    write_projection(ds, proj, file)
}

pub fn write_projection<W: std::io::Write>(ds: &EmbeddingDataset, proj: &Projection, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "label", "pc1", "pc2"])?;
    for (i, [p1, p2]) in proj.coords.iter().enumerate() {
        w.write_record([
            ds.row_id(i).to_string(),
            ds.label(i).to_string(),
            p1.to_string(),
            p2.to_string(),
        ])?;
    }
    w.flush().map_err(|e| WrapError::io(Path::new("<projection>"), e))?;
    Ok(())
}
