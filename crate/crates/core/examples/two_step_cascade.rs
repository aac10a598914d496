//! The two-step scheme: samples called SIL by algorithm (1) are passed to
//! algorithm (2); everything else is non-SIL.

use silscreen::eval::report_table;
use silscreen::models::{CostPolicy, ModelFamily};
use silscreen::pipeline::{run_two_step, ConstituentSpec, FeatureSet, RunConfig};
use silscreen::spectra::canonical_datasets;

fn main() -> silscreen::Result<()> {
    let (train, test) = canonical_datasets(42)?;
    let run = RunConfig { pool_size: 10, repetitions: 3, ..RunConfig::default() };
    let step1 = ConstituentSpec::algo1(FeatureSet::Reduced13Algo1, ModelFamily::Rbf);
    let step2 = ConstituentSpec::algo2(FeatureSet::Reduced13Algo2, ModelFamily::Rbf);
    let reports = run_two_step(
        &step1,
        &step2,
        &run,
        &train,
        &test,
        CostPolicy::sil_weighted(2.0)?,
        CostPolicy::sil_weighted(1.0)?,
    )?;
    print!("{}", report_table(&reports));

    // The same without inflammation samples in the test set.
    let run = RunConfig { exclude_inflammation: true, ..run };
    let reports = run_two_step(
        &step1,
        &step2,
        &run,
        &train,
        &test,
        CostPolicy::sil_weighted(2.0)?,
        CostPolicy::sil_weighted(1.0)?,
    )?;
    let ave = reports.iter().find(|r| r.combiner == "ave").expect("ave row");
    println!("\nwithout inflammation: ave {:.1} / {:.1}", ave.sensitivity.mean, ave.specificity.mean);
    Ok(())
}
