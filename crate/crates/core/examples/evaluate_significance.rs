//! Compare a wrapper box against a logistic-regression head: macro metrics
//! for both, and a pooled two-proportion z-test per metric.

use wrapbox::evaluate::{classification_metrics, compare_reports, two_proportion_z};
use wrapbox::models::LogRegParams;
use wrapbox::synth::{gaussian_blobs, SynthConfig};
use wrapbox::{stratified_split, ModelSpec};

fn main() -> wrapbox::Result<()> {
    let ds = gaussian_blobs(&SynthConfig { n_per_class: 300, n_classes: 3, separation: 2.5, ..Default::default() })?;
    let split = stratified_split(&ds, [0.7, 0.1, 0.2], 2)?;
    let truth: Vec<u32> = split.test_idx.iter().map(|&r| ds.label(r)).collect();

    let predict = |spec: ModelSpec| -> wrapbox::Result<Vec<u32>> {
        let model = spec.fit(&ds, &split.train_idx)?;
        split.test_idx.iter().map(|&r| Ok(model.predict(&ds, ds.row(r))?.label)).collect()
    };
    let knn = classification_metrics(&truth, &predict(ModelSpec::knn())?, 3)?;
    let lr = classification_metrics(&truth, &predict(ModelSpec::Logreg(LogRegParams::default()))?, 3)?;

    println!("{:>10} {:>8} {:>8} {:>8} {:>8}", "", "acc", "prec", "rec", "f1");
    for (name, r) in [("knn", &knn), ("logreg", &lr)] {
        println!("{name:>10} {:>8.2} {:>8.2} {:>8.2} {:>8.2}", r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1);
    }
    let cmp = compare_reports(&knn, &lr)?;
    for (name, t) in [("acc", cmp.accuracy), ("prec", cmp.macro_precision), ("rec", cmp.macro_recall), ("f1", cmp.macro_f1)] {
        println!("{name:>5}: z = {:+.3}, p = {:.4}{}", t.z, t.p, if t.significant { "  *" } else { "" });
    }

    let t = two_proportion_z(0.8, 100, 0.7, 100)?;
    println!("\n80/100 vs 70/100 correct: z = {:.3}, p = {:.4}", t.z, t.p);
    Ok(())
}
