//! Project embeddings to two principal components and write a CSV for
//! plotting (`id,label,pc1,pc2`).

use wrapbox::evaluate::{pca2_project, write_projection_csv};
use wrapbox::synth::{gaussian_blobs, SynthConfig};

fn main() -> wrapbox::Result<()> {
    let ds = gaussian_blobs(&SynthConfig { n_classes: 3, dims: 32, separation: 6.0, ..Default::default() })?;
    let proj = pca2_project(&ds, 0)?;
    println!(
        "explained variance: pc1 {:.1}%, pc2 {:.1}%",
        100.0 * proj.explained[0],
        100.0 * proj.explained[1]
    );
    for c in 0..3 {
        let pts: Vec<&[f64; 2]> = (0..ds.n_rows()).filter(|&i| ds.label(i) == c).map(|i| &proj.coords[i]).collect();
        let mean = |k: usize| pts.iter().map(|p| p[k]).sum::<f64>() / pts.len() as f64;
        println!("class {c}: centered at ({:+.2}, {:+.2})", mean(0), mean(1));
    }
    let path = std::env::temp_dir().join("wrapbox-pca.csv");
    write_projection_csv(&ds, &proj, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
