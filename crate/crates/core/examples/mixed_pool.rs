//! An ensemble whose members come from different model families.

use silscreen::ensemble::{Combiner, Ensemble};
use silscreen::eval::evaluate;
use silscreen::models::{
    train_logistic, train_mlp, train_rbf, CostPolicy, KernelInit, Model, ModelFamily, RbfConfig,
    TrainConfig,
};
use silscreen::pipeline::{ConstituentSpec, FeatureSet, PreparedConstituent};
use silscreen::spectra::canonical_datasets;

fn main() -> silscreen::Result<()> {
    let (train, test) = canonical_datasets(42)?;
    let spec = ConstituentSpec::algo1(FeatureSet::Reduced13Algo1, ModelFamily::Rbf);
    let p = PreparedConstituent::new(&spec, &train)?;
    let xt = p.inputs(&test.filter(|h| h == spec.negative_class || h.is_sil()))?;
    let cost = CostPolicy::sil_weighted(2.0)?;
    let cfg = TrainConfig::default().with_cost(cost);

    let members = vec![
        Model::Rbf(train_rbf(&cfg.with_seed(1), &RbfConfig::new(10, KernelInit::KmeansAll, true), &p.features, &p.targets)?),
        Model::Mlp(train_mlp(&TrainConfig { learning_rate: 1.0, ..cfg.with_seed(2) }, 3, &p.features, &p.targets)?),
        Model::Logistic(train_logistic(&p.features, &p.targets, &cost)?),
    ];
    let families: Vec<String> = members.iter().map(|m| m.family().to_string()).collect();

    // `Ensemble::new` insists on one family; mixing is explicit.
    assert!(Ensemble::new(members.clone(), Combiner::Median, vec![1, 2, 0]).is_err());
    let pool = Ensemble::new_mixed(members, Combiner::Median, vec![1, 2, 0])?;

    let pred: Vec<_> = xt.row_iter().map(|r| pool.predict(r, &cost).0).collect();
    let (se, sp) = evaluate(&pred, &xt.targets())?;
    println!("median of [{}]: sensitivity {se:.1}%, specificity {sp:.1}%", families.join(", "));
    Ok(())
}
