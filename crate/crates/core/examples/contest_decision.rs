//! Contest a decision: which training rows, if removed, would flip it?
//!
//! kNN uses the retrain-free window scan. The tree and L-means use the
//! greedy chunked search with a refit per chunk. Every subset is checked by
//! actually refitting without it.

use wrapbox::attribute::{attribute_one, attribution_metrics, AttributionConfig, Query, Selector};
use wrapbox::models::LMeansParams;
use wrapbox::synth::{gaussian_blobs, SynthConfig};
use wrapbox::{stratified_split, ModelSpec};

fn main() -> wrapbox::Result<()> {
    let ds = gaussian_blobs(&SynthConfig { n_per_class: 60, separation: 2.0, skew: 3.0, ..Default::default() })?;
    let split = stratified_split(&ds, [0.8, 0.0, 0.2], 5)?;
    let cfg = AttributionConfig::default();

    let runs = [
        (ModelSpec::knn(), Selector::Knn),
        (ModelSpec::tree(), Selector::Greedy),
        (ModelSpec::Lmeans(LMeansParams::default()), Selector::Greedy),
    ];
    for (spec, selector) in runs {
        let mut results = Vec::new();
        for &t in &split.test_idx {
            let q = Query { id: ds.row_id(t), x: ds.row(t) };
            results.push(attribute_one(&ds, &split.train_idx, &spec, selector, q, &cfg, true)?);
        }
        let s = attribution_metrics(&results)?;
        let refits: usize = results.iter().map(|r| r.retrain_count).sum();
        println!(
            "{:<6} coverage {:>5.1}%  correctness {:>5.1}%  median |S| {:?}  refits {refits}",
            spec.kind(),
            s.coverage,
            s.correctness,
            s.median_size
        );
        if let Some(r) = results.iter().find(|r| r.verified) {
            println!("       e.g. row {}: remove {:?} to flip label {}", r.test_row, r.subset_row_ids, r.original_prediction);
        }
    }
    Ok(())
}
