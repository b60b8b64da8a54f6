//! Generate skewed Gaussian blobs, split them 70/20/10 with stratification,
//! and round-trip the dataset through a WBX1 file.
//!
//! ```text
//! cargo run --example synth_and_split
//! ```

use wrapbox::synth::{gaussian_blobs, SynthConfig};
use wrapbox::{load_dataset, stratified_split, write_dataset};

fn main() -> wrapbox::Result<()> {
    let ds = gaussian_blobs(&SynthConfig {
        n_per_class: 100,
        n_classes: 2,
        dims: 16,
        separation: 4.0,
        skew: 3.0,
        seed: 1,
    })?;
    println!("{} rows x {} dims, class histogram {:?}", ds.n_rows(), ds.n_dims(), ds.class_histogram());

    let split = stratified_split(&ds, [0.7, 0.2, 0.1], 1)?;
    for (name, rows) in ["train", "valid", "test"].iter().zip(split.parts()) {
        let ones = rows.iter().filter(|&&r| ds.label(r) == 1).count();
        println!("{name:>5}: {:>3} rows, {:>3} of class 0, {:>3} of class 1", rows.len(), rows.len() - ones, ones);
    }

    let dir = std::env::temp_dir().join("wrapbox-example");
    std::fs::create_dir_all(&dir).map_err(|e| wrapbox::WrapError::Config(e.to_string()))?;
    let path = dir.join("blobs.wbx");
    write_dataset(&ds, &path)?;
    let back = load_dataset(&path)?;
    assert_eq!(back.features(), ds.features());
    println!("wrote and reloaded {} ({} bytes)", path.display(), std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));
    Ok(())
}
