//! A depth-3 CART tree explains a prediction with the members of the leaf
//! the query lands in, ranked by distance to the query.

use wrapbox::explain::{explain, Policy};
use wrapbox::models::fit_tree;
use wrapbox::synth::{gaussian_blobs, SynthConfig};
use wrapbox::{stratified_split, WrapperModel};

fn main() -> wrapbox::Result<()> {
    let ds = gaussian_blobs(&SynthConfig { n_classes: 2, dims: 4, separation: 2.0, ..Default::default() })?;
    let split = stratified_split(&ds, [0.8, 0.0, 0.2], 3)?;
    let tree = fit_tree(&ds, &split.train_idx, 3, 20)?;
    println!("depth {}, {} leaves", tree.depth(), tree.leaves.len());
    for (i, leaf) in tree.leaves.iter().enumerate() {
        println!("  leaf {i}: {:>3} members, majority {}, gini {:.3}", leaf.members.len(), leaf.majority_label, leaf.gini);
    }

    let query = split.test_idx[0];
    let leaf = tree.leaf_of(ds.row(query))?;
    let model = WrapperModel::Tree(tree);
    let e = explain(&model, &ds, ds.row(query), Policy::CaseII, 3)?;
    println!("\nquery {} lands in leaf {leaf} and is predicted {}", ds.row_id(query), e.prediction);
    println!("3 most central leaf members with a matching majority:");
    for (&row, rel) in e.shown.iter().zip(&e.relevance) {
        println!("  row {:>3}  label {}  distance {:.3}", ds.row_id(row), ds.label(row), -rel);
    }
    match explain(&model, &ds, ds.row(query), Policy::CaseIII, 3) {
        Err(err) => println!("\ncase3: {err}"),
        Ok(_) => unreachable!("leaf size is structural"),
    }
    Ok(())
}
