//! Feed a wrapper box logistic-regression logits instead of raw embeddings.
//!
//! On blobs that are hard to cluster in the raw space (small separation,
//! many noise dimensions), L-means on the n_classes-dimensional logits
//! recovers the classes far more cleanly.

use wrapbox::models::{fit_lmeans, fit_logreg, logit_transform, LMeansParams, LogRegParams};
use wrapbox::synth::{gaussian_blobs, SynthConfig};
use wrapbox::EmbeddingDataset;

fn purity(ds: &EmbeddingDataset, train: &[usize]) -> wrapbox::Result<f64> {
    let m = fit_lmeans(ds, train, &LMeansParams::default())?;
    let agree = m.train_ref.iter().zip(&m.assignments).filter(|&(&r, &c)| ds.label(r) == m.cluster_labels[c]).count();
    Ok(100.0 * agree as f64 / train.len() as f64)
}

fn main() -> wrapbox::Result<()> {
    let ds = gaussian_blobs(&SynthConfig { n_per_class: 200, n_classes: 3, dims: 64, separation: 3.0, ..Default::default() })?;
    let train: Vec<usize> = (0..ds.n_rows()).collect();

    let lr = fit_logreg(&ds, &train, &LogRegParams::default())?;
    println!("logreg loss {:.4} -> {:.4} over {} epochs", lr.loss_history[0], lr.loss_history.last().unwrap(), lr.loss_history.len());
    let logits = logit_transform(&lr, &ds)?;
    println!("features {} x {} -> {} x {}", ds.n_rows(), ds.n_dims(), logits.n_rows(), logits.n_dims());

    println!("L-means purity on raw features: {:.1}%", purity(&ds, &train)?);
    println!("L-means purity on logits:       {:.1}%", purity(&logits, &train)?);
    Ok(())
}
