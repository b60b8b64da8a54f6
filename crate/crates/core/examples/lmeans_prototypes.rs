//! L-means: k-means with one cluster per class, each labeled by its
//! members' majority. The members nearest a centroid act as prototypes.

use wrapbox::explain::{explain, Policy};
use wrapbox::models::{fit_lmeans, LMeansParams};
use wrapbox::synth::{gaussian_blobs, SynthConfig};
use wrapbox::{stratified_split, WrapperModel};

fn main() -> wrapbox::Result<()> {
    let ds = gaussian_blobs(&SynthConfig { n_classes: 4, separation: 6.0, ..Default::default() })?;
    let split = stratified_split(&ds, [0.8, 0.0, 0.2], 11)?;
    let model = fit_lmeans(&ds, &split.train_idx, &LMeansParams::default())?;
    println!("{} clusters after {} iterations", model.n_clusters(), model.n_iter);
    println!("inertia per iteration: {:?}", model.inertia_history.iter().map(|v| v.round()).collect::<Vec<_>>());

    for (c, members) in model.cluster_members.iter().enumerate() {
        let pure = members.iter().filter(|s| ds.label(s.row) == model.cluster_labels[c]).count();
        let protos: Vec<u64> = members.iter().take(3).map(|s| ds.row_id(s.row)).collect();
        println!("cluster {c}: label {}, {} members ({pure} match), prototypes {protos:?}", model.cluster_labels[c], members.len());
    }

    let model = WrapperModel::Lmeans(model);
    let query = split.test_idx[0];
    let e = explain(&model, &ds, ds.row(query), Policy::CaseII, 3)?;
    println!("\nquery {} -> label {} from a cluster of {}; shown {:?}", ds.row_id(query), e.prediction, e.n_used, e.shown.iter().map(|&r| ds.row_id(r)).collect::<Vec<_>>());
    Ok(())
}
