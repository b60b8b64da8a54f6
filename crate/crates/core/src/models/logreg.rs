//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! Objective: mean softmax cross-entropy plus `l2 / 2 * ||W||^2` (the bias is
//! not penalized). A step that would raise the objective is retried with half
//! the step size, so the recorded loss never increases.

use serde::{Deserialize, Serialize};

use super::check_train;
use crate::data::EmbeddingDataset;
use crate::error::{Result, WrapError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegParams {
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    /// Binary decision threshold on p(class 1).
    pub tau: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            lr: 0.1,
            epochs: 500,
            tau: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub n_classes: u32,
    pub n_dims: usize,
    /// Row-major `n_classes x n_dims`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub l2: f64,
    pub tau: f64,
    pub loss_history: Vec<f64>,
}

/// The training loss over a set of rows, gathered into a dense matrix.
pub struct Objective {
    x: Vec<f64>,
    y: Vec<u32>,
    d: usize,
    k: usize,
}

impl Objective {
    pub fn new(ds: &EmbeddingDataset, train: &[usize]) -> Self {
        let d = ds.n_dims();
        let mut x = Vec::with_capacity(train.len() * d);
        for &r in train {
            x.extend(ds.row(r).iter().map(|&v| f64::from(v)));
        }
        Self {
            x,
            y: train.iter().map(|&r| ds.label(r)).collect(),
            d,
            k: ds.n_classes() as usize,
        }
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    /// Objective value and its gradient with respect to `(weights, bias)`.
    pub fn loss_grad(&self, w: &[f64], b: &[f64], l2: f64) -> (f64, Vec<f64>, Vec<f64>) {
        let (d, k, n) = (self.d, self.k, self.n());
        let mut gw = vec![0.0; k * d];
        let mut gb = vec![0.0; k];
        let mut loss = 0.0;
        let mut p = vec![0.0; k];
        for i in 0..n {
            let xi = &self.x[i * d..(i + 1) * d];
            logits_into(w, b, xi, &mut p);
            let lse = log_sum_exp(&p);
            let yi = self.y[i] as usize;
            loss += lse - p[yi];
            for c in 0..k {
                let g = (p[c] - lse).exp() - if c == yi { 1.0 } else { 0.0 };
                gb[c] += g;
                for (gwj, &xj) in gw[c * d..(c + 1) * d].iter_mut().zip(xi) {
                    *gwj += g * xj;
                }
            }
        }
        let inv = 1.0 / n as f64;
        loss *= inv;
        gb.iter_mut().for_each(|g| *g *= inv);
        for (g, &wv) in gw.iter_mut().zip(w) {
            *g = *g * inv + l2 * wv;
        }
        loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
        (loss, gw, gb)
    }

    pub fn loss(&self, w: &[f64], b: &[f64], l2: f64) -> f64 {
        self.loss_grad(w, b, l2).0
    }
}

fn logits_into(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (c, o) in out.iter_mut().enumerate() {
        *o = b[c]
            + w[c * d..(c + 1) * d]
                .iter()
                .zip(x)
                .map(|(a, v)| a * v)
                .sum::<f64>();
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Fits weights from zero initialization.
pub fn fit_logreg(ds: &EmbeddingDataset, train: &[usize], params: &LogRegParams) -> Result<LogRegModel> {
    check_train(ds, train)?;
    if !(params.l2 >= 0.0 && params.lr > 0.0 && params.tau > 0.0 && params.tau < 1.0) {
        return Err(WrapError::InvalidHyperparameter(format!(
            "logreg needs l2 >= 0, lr > 0, 0 < tau < 1; got {params:?}"
        )));
    }
    let first = ds.label(train[0]);
    if train.iter().all(|&r| ds.label(r) == first) {
        return Err(WrapError::SingleClass);
    }
    let problem = Objective::new(ds, train);
    let (d, k) = (problem.d, problem.k);
    let mut w = vec![0.0; k * d];
    let mut b = vec![0.0; k];
    let (mut loss, mut gw, mut gb) = problem.loss_grad(&w, &b, params.l2);
    let mut history = vec![loss];
    let mut step = params.lr;
    for _ in 0..params.epochs {
        let mut accepted = false;
        while step > 1e-12 {
            let nw: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| a - step * g).collect();
            let nb: Vec<f64> = b.iter().zip(&gb).map(|(a, g)| a - step * g).collect();
            let (nl, ngw, ngb) = problem.loss_grad(&nw, &nb, params.l2);
            if nl <= loss {
                (w, b, loss, gw, gb) = (nw, nb, nl, ngw, ngb);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        history.push(loss);
    }
    Ok(LogRegModel {
        n_classes: ds.n_classes(),
        n_dims: d,
        weights: w,
        bias: b,
        l2: params.l2,
        tau: params.tau,
        loss_history: history,
    })
}

impl LogRegModel {
    fn check(&self, x: &[f32]) -> Result<Vec<f64>> {
        if x.len() != self.n_dims {
            return Err(WrapError::DimensionMismatch {
                expected: self.n_dims,
                got: x.len(),
            });
        }
        Ok(x.iter().map(|&v| f64::from(v)).collect())
    }

    /// Pre-softmax scores `W x + b`.
    pub fn logits(&self, x: &[f32]) -> Result<Vec<f64>> {
        let x = self.check(x)?;
        let mut out = vec![0.0; self.n_classes as usize];
        logits_into(&self.weights, &self.bias, &x, &mut out);
        Ok(out)
    }

    pub fn probabilities(&self, x: &[f32]) -> Result<Vec<f64>> {
        let z = self.logits(x)?;
        let lse = log_sum_exp(&z);
        Ok(z.iter().map(|v| (v - lse).exp()).collect())
    }

    /// Binary: class 1 iff `p(1) >= tau`. Otherwise argmax, lowest id on ties.
    pub fn predict(&self, x: &[f32]) -> Result<u32> {
        let p = self.probabilities(x)?;
        if p.len() == 2 {
            return Ok(u32::from(p[1] >= self.tau));
        }
        let mut best = 0;
        for (c, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = c;
            }
        }
        Ok(best as u32)
    }
}

/// Replaces every row's features with its `n_classes` logits.
pub fn logit_transform(model: &LogRegModel, ds: &EmbeddingDataset) -> Result<EmbeddingDataset> {
    if ds.n_dims() != model.n_dims {
        return Err(WrapError::DimensionMismatch {
            expected: model.n_dims,
            got: ds.n_dims(),
        });
    }
    let k = model.n_classes as usize;
    let mut features = Vec::with_capacity(ds.n_rows() * k);
    for i in 0..ds.n_rows() {
        features.extend(model.logits(ds.row(i))?.into_iter().map(|v| v as f32));
    }
    ds.with_features(features, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn separable() -> EmbeddingDataset {
        let xs = [-2.0f32, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];
        let rows: Vec<Vec<f32>> = xs.iter().map(|&x| vec![x]).collect();
        let labels = xs.iter().map(|&x| u32::from(x > 0.0)).collect();
        EmbeddingDataset::from_rows(&rows, labels, 2).unwrap()
    }

    /// Central finite differences of the objective.
    fn numeric_grad(p: &Objective, w: &[f64], b: &[f64], l2: f64) -> (Vec<f64>, Vec<f64>) {
        let h = 1e-5;
        let mut gw = vec![0.0; w.len()];
        for j in 0..w.len() {
            let (mut a, mut c) = (w.to_vec(), w.to_vec());
            a[j] += h;
            c[j] -= h;
            gw[j] = (p.loss(&a, b, l2) - p.loss(&c, b, l2)) / (2.0 * h);
        }
        let mut gb = vec![0.0; b.len()];
        for j in 0..b.len() {
            let (mut a, mut c) = (b.to_vec(), b.to_vec());
            a[j] += h;
            c[j] -= h;
            gb[j] = (p.loss(w, &a, l2) - p.loss(w, &c, l2)) / (2.0 * h);
        }
        (gw, gb)
    }

    #[test]
    fn separable_reaches_full_accuracy_with_monotone_loss() {
        let ds = separable();
        let train: Vec<usize> = (0..8).collect();
        let m = fit_logreg(&ds, &train, &LogRegParams::default()).unwrap();
        for i in 0..8 {
            assert_eq!(m.predict(ds.row(i)).unwrap(), ds.label(i));
        }
        assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(*m.loss_history.last().unwrap() < std::f64::consts::LN_2);
    }

    #[test]
    fn zero_weights_give_half() {
        let ds = separable();
        let m = fit_logreg(&ds, &[0, 7], &LogRegParams { epochs: 0, ..Default::default() }).unwrap();
        assert_eq!(m.probabilities(&[3.0]).unwrap(), vec![0.5, 0.5]);
        let t = logit_transform(&m, &ds).unwrap();
        assert_eq!(t.n_dims(), 2);
        assert!(t.features().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn heavy_penalty_predicts_majority() {
        let xs = [-1.0f32, -0.5, 0.5, 1.0, 1.5, 2.0];
        let rows: Vec<Vec<f32>> = xs.iter().map(|&x| vec![x]).collect();
        // class 1 is the majority but sits on both sides
        let ds = EmbeddingDataset::from_rows(&rows, vec![0, 1, 0, 1, 1, 1], 2).unwrap();
        let m = fit_logreg(
            &ds,
            &(0..6).collect::<Vec<_>>(),
            &LogRegParams { l2: 1e4, ..Default::default() },
        )
        .unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-3), "{:?}", m.weights);
        for x in [-10.0, 0.0, 10.0] {
            assert_eq!(m.predict(&[x]).unwrap(), 1);
        }
    }

    #[test]
    fn single_class_rejected() {
        let ds = separable();
        assert!(matches!(
            fit_logreg(&ds, &[0, 1, 2], &LogRegParams::default()),
            Err(WrapError::SingleClass)
        ));
    }

    #[test]
    fn tau_moves_binary_decision() {
        let ds = separable();
        let m = fit_logreg(&ds, &(0..8).collect::<Vec<_>>(), &LogRegParams::default()).unwrap();
        let p1 = m.probabilities(&[0.1]).unwrap()[1];
        let strict = LogRegModel { tau: (p1 + 1.0) / 2.0, ..m.clone() };
        assert_eq!(m.predict(&[0.1]).unwrap(), u32::from(p1 >= 0.5));
        assert_eq!(strict.predict(&[0.1]).unwrap(), 0);
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            x in proptest::collection::vec(-2.0f64..2.0, 12),
            wv in proptest::collection::vec(-1.0f64..1.0, 9),
            y in proptest::collection::vec(0u32..3, 4),
            l2 in 0.0f64..0.5,
        ) {
            let p = Objective { x, y, d: 3, k: 3 };
            let (w, b) = (wv[..9].to_vec(), vec![0.1, -0.2, 0.05]);
            let (_, gw, gb) = p.loss_grad(&w, &b, l2);
            let (nw, nb) = numeric_grad(&p, &w, &b, l2);
            for (a, n) in gw.iter().chain(&gb).zip(nw.iter().chain(&nb)) {
                prop_assert!((a - n).abs() <= 1e-4 * a.abs().max(n.abs()).max(1e-3), "{a} vs {n}");
            }
        }

        #[test]
        fn probabilities_sum_to_one(x in -50.0f32..50.0, w in -3.0f64..3.0) {
            let m = LogRegModel {
                n_classes: 3, n_dims: 1,
                weights: vec![w, -w, 0.5], bias: vec![0.0, 1.0, -1.0],
                l2: 0.0, tau: 0.5, loss_history: vec![],
            };
            let s: f64 = m.probabilities(&[x]).unwrap().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
        }
    }
}
