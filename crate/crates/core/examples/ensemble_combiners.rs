//! Pools of RBF networks combined by average and by median.

use silscreen::ensemble::{build_ensemble, Combiner};
use silscreen::eval::evaluate;
use silscreen::models::{classify, CostPolicy, ModelFamily, TrainConfig};
use silscreen::pipeline::{ConstituentSpec, FeatureSet, PreparedConstituent};
use silscreen::spectra::canonical_datasets;

fn main() -> silscreen::Result<()> {
    let (train, test) = canonical_datasets(42)?;
    let spec = ConstituentSpec::algo1(FeatureSet::Reduced13Algo1, ModelFamily::Rbf);
    let prepared = PreparedConstituent::new(&spec, &train)?;
    let xt = prepared.inputs(&test.filter(|h| h == spec.negative_class || h.is_sil()))?;
    let truth = xt.targets();
    let cost = CostPolicy::sil_weighted(2.0)?;
    let cfg = TrainConfig::default().with_cost(cost);

    let pool = build_ensemble(|s| prepared.train(&cfg.with_seed(s)), 10, 100, Combiner::Average)?;

    // A single member for comparison.
    let first = &pool.members()[0];
    let pred: Vec<_> = xt.row_iter().map(|r| classify(first, r, &cost).0).collect();
    let (se, sp) = evaluate(&pred, &truth)?;
    println!("member 0      {se:5.1} / {sp:5.1}");

    for c in [Combiner::Average, Combiner::Median] {
        let pool = pool.with_combiner(c);
        let pred: Vec<_> = xt.row_iter().map(|r| pool.predict(r, &cost).0).collect();
        let (se, sp) = evaluate(&pred, &truth)?;
        println!("{:<4} (N={})  {se:5.1} / {sp:5.1}", c.tag(), pool.len());
    }

    // Pools serialize to text and load back unchanged.
    let text = pool.to_text();
    let back = silscreen::ensemble::Ensemble::from_text(&text)?;
    println!("round trip: {} bytes, equal = {}", text.len(), back.members() == pool.members());
    Ok(())
}
