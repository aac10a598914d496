//! The two constituent algorithms on their own: SIL vs squamous normal on
//! normalized spectra, and SIL vs columnar normal on mean-scaled spectra.

use silscreen::models::{CostPolicy, ModelFamily};
use silscreen::pipeline::{run_constituent, ConstituentSpec, FeatureSet, RunConfig};
use silscreen::spectra::canonical_datasets;

fn main() -> silscreen::Result<()> {
    let (train, test) = canonical_datasets(42)?;
    let run = RunConfig { pool_size: 5, repetitions: 3, ..RunConfig::default() };

    let algo1 = ConstituentSpec::algo1(FeatureSet::Reduced13Algo1, ModelFamily::Rbf);
    let algo1_pcs = ConstituentSpec::algo1(FeatureSet::Pcs(3), ModelFamily::Rbf);
    let algo2 = ConstituentSpec::algo2(FeatureSet::Reduced13Algo2, ModelFamily::Rbf);

    for (spec, cost) in [(&algo1, 2.0), (&algo1_pcs, 2.0), (&algo2, 1.0)] {
        let reports = run_constituent(spec, &run, &train, &test, CostPolicy::sil_weighted(cost)?)?;
        println!("{} on {}:", spec.id, spec.feature_set);
        for r in reports {
            println!(
                "  {:<6} sens {:5.1} ± {:4.1}  spec {:5.1} ± {:4.1}",
                r.combiner, r.sensitivity.mean, r.sensitivity.std, r.specificity.mean, r.specificity.std
            );
        }
    }
    Ok(())
}
