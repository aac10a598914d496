//! Train one RBF network and one MLP on algorithm (1) inputs and compare
//! them on the test set.

use silscreen::eval::evaluate;
use silscreen::models::{
    classify, train_logistic, train_mlp, train_rbf, Classifier, CostPolicy, KernelInit,
    RbfConfig, TrainConfig,
};
use silscreen::pipeline::{ConstituentSpec, FeatureSet, PreparedConstituent};
use silscreen::models::ModelFamily;
use silscreen::spectra::canonical_datasets;

fn score<C: Classifier>(name: &str, model: &C, x: &silscreen::preprocess::FeatureMatrix, cost: &CostPolicy) {
    let pred: Vec<_> = x.row_iter().map(|r| classify(model, r, cost).0).collect();
    let (se, sp) = evaluate(&pred, &x.targets()).expect("both classes in test");
    println!("{name:<10} sensitivity {se:5.1}%  specificity {sp:5.1}%");
}

fn main() -> silscreen::Result<()> {
    let (train, test) = canonical_datasets(42)?;
    let spec = ConstituentSpec::algo1(FeatureSet::Reduced13Algo1, ModelFamily::Rbf);
    let prepared = PreparedConstituent::new(&spec, &train)?;
    let x = &prepared.features;
    let y = &prepared.targets;
    let xt = prepared.inputs(&test.filter(|h| h == spec.negative_class || h.is_sil()))?;

    let cost = CostPolicy::sil_weighted(2.0)?;
    let cfg = TrainConfig::default().with_seed(1).with_cost(cost);

    let rbf = train_rbf(&cfg, &RbfConfig::new(10, KernelInit::KmeansAll, true), x, y)?;
    println!("rbf widths: {:?}", rbf.widths().iter().map(|w| format!("{w:.3}")).collect::<Vec<_>>());
    score("rbf", &rbf, &xt, &cost);

    let mlp_cfg = TrainConfig { learning_rate: 1.0, ..cfg };
    let mlp = train_mlp(&mlp_cfg, 3, x, y)?;
    score("mlp", &mlp, &xt, &cost);

    let logistic = train_logistic(x, y, &cost)?;
    score("logistic", &logistic, &xt, &cost);
    Ok(())
}
