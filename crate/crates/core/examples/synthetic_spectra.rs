//! Generate the canonical synthetic train/test pair and look at it.
//!
//! ```text
//! cargo run --example synthetic_spectra
//! ```

use silscreen::spectra::{
    canonical_datasets, class_block_means, format_tally, Histology, SynthConfig, CANONICAL_SEED,
};

fn main() -> silscreen::Result<()> {
    let (train, test) = canonical_datasets(CANONICAL_SEED)?;
    println!("grid: {} pairs over excitations {:?}", train.grid().pair_count(), train.grid().excitations());
    println!("train: {}  ({} patients)", format_tally(&train.class_tally()), train.patients().len());
    println!("test:  {}  ({} patients)", format_tally(&test.class_tally()), test.patients().len());

    // Per-excitation mean intensity of each class.
    for (h, means) in class_block_means(&train) {
        let cells: Vec<String> = means.iter().map(|m| format!("{m:.3}")).collect();
        println!("{:>5}  {}", h.token(), cells.join("  "));
    }

    // Noise-free class templates, e.g. for plotting.
    let cfg = SynthConfig::canonical_train(CANONICAL_SEED);
    let ns = cfg.class_spectrum(Histology::NormalSquamous);
    let hg = cfg.class_spectrum(Histology::HighGradeSil);
    let peak = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max);
    println!("template peaks: NS {:.3}, HGSIL {:.3}", peak(&ns), peak(&hg));
    Ok(())
}
