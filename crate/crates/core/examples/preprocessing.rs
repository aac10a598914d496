//! Normalization and mean-scaling, and picking the reduced wavelength sets.

use silscreen::dimred::{ALGO1_PAIRS, ALGO2_PAIRS};
use silscreen::preprocess::{mean_scale, normalize, select_columns};
use silscreen::spectra::canonical_datasets;

fn main() -> silscreen::Result<()> {
    let (train, _) = canonical_datasets(42)?;
    let norm = normalize(&train)?;
    let nms = mean_scale(&norm)?;

    // Every excitation block now peaks at 1.
    let first = norm.row(0);
    for range in train.grid().block_ranges() {
        let peak = first[range.clone()].iter().cloned().fold(f64::MIN, f64::max);
        println!("block {range:?}: peak {peak:.3}");
    }

    let a = select_columns(&norm, &ALGO1_PAIRS)?;
    let b = select_columns(&nms, &ALGO2_PAIRS)?;
    println!("algorithm (1) inputs: {} x {}", a.rows(), a.cols());
    println!("algorithm (2) inputs: {} x {}", b.rows(), b.cols());
    let labels: Vec<String> = b.column_labels().iter().map(ToString::to_string).collect();
    println!("{}", labels.join(" "));
    Ok(())
}
