//! One-step classifier on the 26 concatenated features, swept over the SIL
//! misclassification cost. Writes the tradeoff curve to stdout as CSV.

use silscreen::eval::{report_csv, tradeoff_csv};
use silscreen::pipeline::{cost_sweep, RunConfig};
use silscreen::spectra::canonical_datasets;

fn main() -> silscreen::Result<()> {
    let (train, test) = canonical_datasets(42)?;
    let run = RunConfig { pool_size: 10, repetitions: 3, ..RunConfig::default() };
    let reports = cost_sweep(&run, &train, &test, &[1.0, 2.0, 2.5, 3.0, 4.0, 5.0], 0.5)?;
    print!("{}", report_csv(&reports));
    let ave: Vec<_> = reports.into_iter().filter(|r| r.combiner == "ave").collect();
    println!();
    print!("{}", tradeoff_csv(&ave));
    Ok(())
}
