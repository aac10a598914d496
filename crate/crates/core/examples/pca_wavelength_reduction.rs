//! PCA on normalized spectra, t-test screening of the components and
//! loading-based selection of informative wavelength pairs.

use silscreen::dimred::{
    component_loadings, fit_pca, project, reduce_wavelengths, select_components,
    ReductionCriterion,
};
use silscreen::preprocess::normalize;
use silscreen::spectra::{canonical_datasets, Histology};

fn main() -> silscreen::Result<()> {
    let (train, _) = canonical_datasets(42)?;
    let fm = normalize(&train)?.filter_rows(|h| h == Histology::NormalSquamous || h.is_sil());

    let model = fit_pca(&fm, 10)?;
    let explained: f64 = model.explained_variance_ratio.iter().sum();
    println!("10 components explain {:.1}% of the variance", 100.0 * explained);

    let scores = project(&model, &fm, model.n_components())?;
    let sel = select_components(&scores, &fm.targets(), 0.05)?;
    for (j, p) in sel.p_values.iter().enumerate() {
        let mark = if sel.indices.contains(&j) { "*" } else { " " };
        println!("PC{:<2} t = {:>7.2}  p = {:.2e} {mark}", j + 1, sel.t_statistics[j], p);
    }

    let loadings = component_loadings(&model, &fm, &sel)?;
    let pairs = reduce_wavelengths(&loadings, ReductionCriterion::TopK(13))?;
    let names: Vec<String> = pairs.iter().map(|p| p.column_name()).collect();
    println!("13 pairs: {}", names.join(" "));
    Ok(())
}
