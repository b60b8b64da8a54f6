//! Explain kNN predictions under the three fidelity/simplicity policies.
//!
//! Case I shows all k neighbors. Case II shows m of them whose majority
//! still matches the prediction. Case III predicts with k = m, so the short
//! explanation is also the whole story.

use wrapbox::explain::{explain, Policy};
use wrapbox::models::fit_knn;
use wrapbox::synth::{gaussian_blobs, SynthConfig};
use wrapbox::{stratified_split, WrapperModel};

fn main() -> wrapbox::Result<()> {
    let ds = gaussian_blobs(&SynthConfig { n_classes: 3, separation: 2.5, ..Default::default() })?;
    let split = stratified_split(&ds, [0.8, 0.0, 0.2], 7)?;
    let model = WrapperModel::Knn(fit_knn(&ds, &split.train_idx, 5)?);

    let query = split.test_idx[0];
    println!("query row {} (true label {})", ds.row_id(query), ds.label(query));
    for (policy, m) in [(Policy::CaseI, 0), (Policy::CaseII, 2), (Policy::CaseIII, 2)] {
        let e = explain(&model, &ds, ds.row(query), policy, m)?;
        println!("\n{} -> predicts {}, shows {} of {} (faithful: {})", policy.name(), e.prediction, e.shown.len(), e.n_used, e.faithful);
        for (&row, rel) in e.shown.iter().zip(&e.relevance) {
            println!("  row {:>3}  label {}  distance {:.3}", ds.row_id(row), ds.label(row), -rel);
        }
    }

    let record = explain(&model, &ds, ds.row(query), Policy::CaseII, 2)?.to_record(&ds, Some(ds.row_id(query)));
    println!("\nas JSON: {}", serde_json::to_string(&record)?);
    Ok(())
}
