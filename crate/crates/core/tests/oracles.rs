//! Library results checked against independent re-computations.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use silscreen::dimred::{component_loadings, fit_pca, one_sided_p, pooled_t, project, select_components};
use silscreen::eval::{confusion, evaluate, sens_spec, variability, ConfusionCounts};
use silscreen::models::{
    initialize_kernels, kmeans, train_logistic_with, train_mlp, train_rbf, Classifier, CostPolicy,
    KernelInit, LogisticConfig, MlpNetwork, RbfConfig, RbfNetwork, TrainConfig,
};
use silscreen::pipeline::{
    build_one_step_features, one_step_training_rows, run_one_step, trim_training_set, RunConfig,
    TwoStepClassifier,
};
use silscreen::preprocess::{mean_scale, normalize, FeatureMatrix};
use silscreen::spectra::{
    canonical_datasets, split_train_test, synthesize_dataset, Histology, Label, SynthConfig,
    TissueGroup,
};

fn matrix(rows: &[Vec<f64>], labels: &[Label]) -> FeatureMatrix {
    let hist: Vec<Histology> = labels
        .iter()
        .map(|l| if l.is_sil() { Histology::HighGradeSil } else { Histology::NormalSquamous })
        .collect();
    FeatureMatrix::from_rows(rows, &hist).unwrap()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[test]
fn patient_split_counts_by_enumeration() {
    let ds = synthesize_dataset(&SynthConfig::canonical_train(42)).unwrap();
    let (a, b) = split_train_test(&ds, 0.5, true, 7).unwrap();
    assert_eq!(a.len() + b.len(), 180);
    let pa: BTreeSet<String> = a.samples().iter().map(|s| s.patient_id.clone()).collect();
    let pb: BTreeSet<String> = b.samples().iter().map(|s| s.patient_id.clone()).collect();
    assert!(pa.is_disjoint(&pb));
    assert!((70..=110).contains(&a.len()), "{} train rows", a.len());
}

#[test]
fn per_patient_means_vanish_after_mean_scaling() {
    let cfg = SynthConfig {
        patients: 3,
        ..SynthConfig::new([6, 3, 3, 3, 3], 5)
    };
    let fm = mean_scale(&normalize(&synthesize_dataset(&cfg).unwrap()).unwrap()).unwrap();
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, k) in fm.row_keys().iter().enumerate() {
        groups.entry(&k.patient_id).or_default().push(i);
    }
    assert_eq!(groups.len(), 3);
    for rows in groups.values() {
        for j in 0..fm.cols() {
            let m: f64 = rows.iter().map(|&i| fm.get(i, j)).sum::<f64>() / rows.len() as f64;
            assert!(m.abs() < 1e-12, "mean {m}");
        }
    }
}

/// Closed-form leading eigenvector of a symmetric 2×2 matrix.
fn leading_eigenvector(a: f64, b: f64, d: f64) -> [f64; 2] {
    let lambda = (a + d) / 2.0 + (((a - d) / 2.0).powi(2) + b * b).sqrt();
    let v = if b.abs() > 0.0 { [b, lambda - a] } else if a >= d { [1.0, 0.0] } else { [0.0, 1.0] };
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let v = [v[0] / n, v[1] / n];
    if v[0].abs() >= v[1].abs() {
        if v[0] < 0.0 { [-v[0], -v[1]] } else { v }
    } else if v[1] < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

#[test]
fn pca_matches_closed_form_two_by_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rows: Vec<Vec<f64>> = (0..400)
        .map(|_| {
            let t: f64 = rng.random_range(-5.0..5.0);
            let e: f64 = rng.random_range(-0.05..0.05);
            vec![t * s - e * s, t * s + e * s]
        })
        .collect();
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r[0]).sum::<f64>() / n;
    let my = rows.iter().map(|r| r[1]).sum::<f64>() / n;
    let cov = |f: &dyn Fn(&Vec<f64>) -> f64| rows.iter().map(f).sum::<f64>() / (n - 1.0);
    let a = cov(&|r| (r[0] - mx) * (r[0] - mx));
    let b = cov(&|r| (r[0] - mx) * (r[1] - my));
    let d = cov(&|r| (r[1] - my) * (r[1] - my));
    let want = leading_eigenvector(a, b, d);

    let fm = matrix(&rows, &vec![Label::NonSil; rows.len()]);
    let model = fit_pca(&fm, 2).unwrap();
    let pc1 = &model.components[0];
    assert!((pc1[0] - want[0]).abs() < 1e-9 && (pc1[1] - want[1]).abs() < 1e-9);
    assert!((pc1[0] - s).abs() < 1e-3 && (pc1[1] - s).abs() < 1e-3);

    let scores = project(&model, &fm, 2).unwrap();
    let (c0, c1) = (scores.column(0), scores.column(1));
    let m0 = c0.iter().sum::<f64>() / n;
    let m1 = c1.iter().sum::<f64>() / n;
    let off = c0.iter().zip(&c1).map(|(x, y)| (x - m0) * (y - m1)).sum::<f64>() / (n - 1.0);
    assert!(off.abs() < 1e-8, "score covariance {off}");
}

/// `P(T > t)` by Simpson integration of the unnormalized t density, mapped
/// onto a finite interval with `x = u / (1 - u)`.
fn t_upper_tail(t: f64, df: f64) -> f64 {
    let f = |x: f64| (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    let integrate = |lo: f64| {
        let (a, b) = (lo / (1.0 + lo), 1.0);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let g = |u: f64| if u >= 1.0 { 0.0 } else { f(u / (1.0 - u)) / ((1.0 - u) * (1.0 - u)) };
        let mut s = g(a) + g(b);
        for i in 1..n {
            s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    integrate(t) / (2.0 * integrate(0.0))
}

#[test]
fn t_test_matches_hand_statistic_and_integrated_tail() {
    let a = [5.1, 4.9, 6.2, 5.8, 6.0, 5.5];
    let b = [4.2, 4.8, 4.4, 5.0, 4.1];
    // Hand computation.
    let ma: f64 = a.iter().sum::<f64>() / 6.0;
    let mb: f64 = b.iter().sum::<f64>() / 5.0;
    let ssa: f64 = a.iter().map(|v| (v - ma).powi(2)).sum();
    let ssb: f64 = b.iter().map(|v| (v - mb).powi(2)).sum();
    let sp2 = (ssa + ssb) / 9.0;
    let t_hand = (ma - mb) / (sp2 * (1.0 / 6.0 + 1.0 / 5.0)).sqrt();

    let (t, df) = pooled_t(&a, &b);
    assert_eq!(df, 9.0);
    assert!((t - t_hand).abs() < 1e-12);
    let p = one_sided_p(t, df);
    assert!((p - t_upper_tail(t, df)).abs() < 1e-7, "{p} vs {}", t_upper_tail(t, df));

    let scores = matrix(
        &a.iter().chain(&b).map(|&v| vec![v]).collect::<Vec<_>>(),
        &[vec![Label::Sil; 6], vec![Label::NonSil; 5]].concat(),
    );
    let sel = select_components(&scores, &scores.targets(), 0.05).unwrap();
    assert!((sel.p_values[0] - p).abs() < 1e-15);
    assert_eq!(sel.indices, vec![0]);
}

#[test]
fn loadings_match_direct_correlation() {
    let rows = vec![
        vec![1.0, 2.0, 0.5, 3.0],
        vec![2.0, 1.5, 0.1, 2.0],
        vec![0.5, 3.5, 0.9, 4.5],
        vec![3.0, 0.5, 0.4, 1.0],
        vec![1.5, 2.5, 0.2, 2.5],
    ];
    let labels = [Label::Sil, Label::NonSil, Label::Sil, Label::NonSil, Label::Sil];
    let fm = matrix(&rows, &labels);
    let model = fit_pca(&fm, 3).unwrap();
    let scores = project(&model, &fm, model.n_components()).unwrap();
    let mut sel = select_components(&scores, &labels, 0.5).unwrap();
    sel.indices = (0..model.n_components()).collect();
    let l = component_loadings(&model, &fm, &sel).unwrap();

    let corr = |x: &[f64], y: &[f64]| {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    };
    for f in 0..4 {
        for (k, &c) in sel.indices.iter().enumerate() {
            let want = corr(&fm.column(f), &scores.column(c));
            assert!((l.get(f, k) - want).abs() < 1e-12, "feature {f} pc {c}");
        }
    }
}

#[test]
fn kmeans_recovers_blob_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rows = Vec::new();
    for &(cx, cy) in &[(0.0, 0.0), (50.0, -30.0)] {
        for _ in 0..30 {
            rows.push(vec![cx + rng.random_range(-1.0..1.0), cy + rng.random_range(-1.0..1.0)]);
        }
    }
    let fm = matrix(&rows, &vec![Label::NonSil; rows.len()]);
    let mut got = kmeans(&fm, 2, 9).unwrap();
    got.sort_by(|a, b| a[0].total_cmp(&b[0]));
    for (blob, c) in got.iter().enumerate() {
        let part = &rows[blob * 30..(blob + 1) * 30];
        for d in 0..2 {
            let mean = part.iter().map(|r| r[d]).sum::<f64>() / 30.0;
            assert!((c[d] - mean).abs() < 1e-6);
        }
    }
}

#[test]
fn single_kernel_output_is_hand_evaluated_activation() {
    let center = vec![0.3, -1.2, 2.0];
    let sigma = 0.8;
    let net = RbfNetwork::new(vec![center.clone()], vec![sigma], 2, false)
        .with_output_weights(vec![0.0, 1.0], vec![0.0, 0.0]);
    let x = vec![center[0] + sigma, center[1], center[2]];
    let out = net.forward(&x);
    assert_eq!(out[0], 0.0);
    let hand = (-(sigma * sigma) / (2.0 * sigma * sigma)).exp();
    assert!((out[1] - hand).abs() < 1e-15);
    assert_eq!(out[1], net.activations(&x)[0]);
}

#[test]
fn mlp_matches_straight_line_reimplementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..10 {
        let mut net = MlpNetwork::random(3, 3, 2, seed);
        let p: Vec<f64> = (0..net.params().len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        net.set_params(&p);
        // Layout: V (3x3), b1 (3), W (2x3), b2 (2).
        let (v, rest) = p.split_at(9);
        let (b1, rest) = rest.split_at(3);
        let (w, b2) = rest.split_at(6);
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let h0 = sigmoid(v[0] * x[0] + v[1] * x[1] + v[2] * x[2] + b1[0]);
        let h1 = sigmoid(v[3] * x[0] + v[4] * x[1] + v[5] * x[2] + b1[1]);
        let h2 = sigmoid(v[6] * x[0] + v[7] * x[1] + v[8] * x[2] + b1[2]);
        let o0 = sigmoid(w[0] * h0 + w[1] * h1 + w[2] * h2 + b2[0]);
        let o1 = sigmoid(w[3] * h0 + w[4] * h1 + w[5] * h2 + b2[1]);
        let out = net.forward(&x);
        assert!((out[0] - o0).abs() < 1e-12 && (out[1] - o1).abs() < 1e-12);
    }
}

#[test]
fn mlp_fits_linearly_separable_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    while rows.len() < 40 {
        let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let margin = x + 0.5 * y - 0.1;
        if margin.abs() < 0.15 {
            continue;
        }
        rows.push(vec![x, y]);
        labels.push(if margin > 0.0 { Label::Sil } else { Label::NonSil });
    }
    // Separability by exhaustive search over line directions and offsets.
    let separable = (0..360).any(|deg| {
        let a = (deg as f64).to_radians();
        let proj: Vec<f64> = rows.iter().map(|r| a.cos() * r[0] + a.sin() * r[1]).collect();
        proj.iter().any(|&t| {
            rows.iter().zip(&labels).zip(&proj).all(|((_, l), &p)| (p > t) == l.is_sil())
        })
    });
    assert!(separable);

    let fm = matrix(&rows, &labels);
    let cfg = TrainConfig {
        learning_rate: 1.0,
        max_epochs: 500,
        min_rel_improvement: 0.0,
        ..TrainConfig::default()
    };
    let net = train_mlp(&cfg, 3, &fm, &labels).unwrap();
    let cost = CostPolicy::default();
    let pred: Vec<Label> =
        rows.iter().map(|r| silscreen::models::classify(&net, r, &cost).0).collect();
    assert_eq!(pred, labels);
}

fn logistic_nll(w: f64, b: f64, xs: &[f64], labels: &[Label], cost: &CostPolicy) -> f64 {
    xs.iter()
        .zip(labels)
        .map(|(&x, &l)| {
            let p = sigmoid(w * x + b);
            let y = if l.is_sil() { p } else { 1.0 - p };
            -cost.weight(l) * y.ln()
        })
        .sum::<f64>()
        / xs.len() as f64
}

#[test]
fn logistic_beats_grid_search() {
    let xs = [-2.0, -1.5, -1.0, -0.4, 0.1, 0.3, 0.8, 1.1, 1.7, 2.4];
    use Label::*;
    let labels = [NonSil, NonSil, Sil, NonSil, NonSil, Sil, NonSil, Sil, Sil, Sil];
    let cost = CostPolicy::new(1.5, 1.0, 0.5).unwrap();
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let cfg = LogisticConfig {
        l2: 0.0,
        ..LogisticConfig::default()
    };
    let model = train_logistic_with(&cfg, &matrix(&rows, &labels), &labels, &cost).unwrap();
    let fitted = logistic_nll(model.weights[0], model.bias, &xs, &labels, &cost);
    let mut grid_best = f64::INFINITY;
    for i in 0..=400 {
        for j in 0..=400 {
            let w = -1.0 + 6.0 * i as f64 / 400.0;
            let b = -3.0 + 6.0 * j as f64 / 400.0;
            grid_best = grid_best.min(logistic_nll(w, b, &xs, &labels, &cost));
        }
    }
    assert!(fitted <= grid_best + 1e-4, "{fitted} vs grid {grid_best}");
}

#[test]
fn frozen_kernels_stay_bitwise_at_initialization() {
    let (train, _) = canonical_datasets(42).unwrap();
    let fm = one_step_training_rows(&build_one_step_features(&train).unwrap());
    let rbf = RbfConfig::new(10, KernelInit::KmeansOnTrimmed, false);
    let cfg = TrainConfig::default().with_seed(17);
    let init = initialize_kernels(&rbf, &fm, 17).unwrap();
    let net = train_rbf(&cfg, &rbf, &fm, &fm.targets()).unwrap();
    assert_eq!(net.centers(), &init[..]);
    let bits = |c: &[Vec<f64>]| -> Vec<u64> { c.iter().flatten().map(|v| v.to_bits()).collect() };
    assert_eq!(bits(net.centers()), bits(&init));
}

#[test]
fn half_fixed_kernels_copy_class_rows() {
    let (train, _) = canonical_datasets(42).unwrap();
    let fm = normalize(&train)
        .unwrap()
        .filter_rows(|h| h == Histology::NormalColumnar || h.is_sil());
    let rbf = RbfConfig::new(10, KernelInit::HalfFixedToClass(Histology::NormalColumnar), false);
    let centers = initialize_kernels(&rbf, &fm, 5).unwrap();
    assert_eq!(centers.len(), 10);
    let nc_rows: Vec<&[f64]> = fm
        .row_iter()
        .zip(fm.histologies())
        .filter(|(_, h)| *h == Histology::NormalColumnar)
        .map(|(r, _)| r)
        .collect();
    let verbatim = centers.iter().filter(|c| nc_rows.iter().any(|r| *r == &c[..])).count();
    assert_eq!(verbatim, 5);
}

#[test]
fn trimmed_set_has_minority_count_per_group() {
    let (train, _) = canonical_datasets(42).unwrap();
    let fm = one_step_training_rows(&build_one_step_features(&train).unwrap());
    let trimmed = trim_training_set(&fm, 3).unwrap();
    let mut counts: BTreeMap<TissueGroup, usize> = BTreeMap::new();
    for h in trimmed.histologies() {
        *counts.entry(h.group()).or_default() += 1;
    }
    // 94 squamous, 13 columnar, 23 + 35 SIL.
    assert_eq!(trimmed.rows(), 39);
    assert!(counts.values().all(|&c| c == 13), "{counts:?}");
    assert_eq!(trim_training_set(&fm, 3).unwrap(), trimmed);
}

#[test]
fn extreme_cost_labels_everything_sil() {
    let (train, test) = canonical_datasets(42).unwrap();
    let run = RunConfig {
        pool_size: 3,
        repetitions: 1,
        ..RunConfig::default()
    };
    let reports =
        run_one_step(&run, &train, &test, CostPolicy::sil_weighted(1000.0).unwrap()).unwrap();
    for r in &reports {
        assert_eq!(r.sensitivity.mean, 100.0, "{}", r.combiner);
    }
}

#[test]
fn confusion_matches_manual_tally() {
    use Label::*;
    let truth = [Sil, Sil, NonSil, NonSil, NonSil, Sil];
    let pred = [Sil, NonSil, NonSil, Sil, NonSil, Sil];
    // Manual: rows 0 and 5 TP, row 1 FN, rows 2 and 4 TN, row 3 FP.
    let c = confusion(&pred, &truth).unwrap();
    assert_eq!(
        c,
        ConfusionCounts { true_positive: 2, false_negative: 1, true_negative: 2, false_positive: 1 }
    );
    assert_eq!(c.total(), 6);
    let (se, sp) = evaluate(&pred, &truth).unwrap();
    assert!((se - 200.0 / 3.0).abs() < 1e-12 && (sp - 200.0 / 3.0).abs() < 1e-12);

    let headline = ConfusionCounts { true_positive: 91, false_negative: 9, true_negative: 67, false_positive: 33 };
    assert_eq!(sens_spec(&headline).unwrap(), (91.0, 67.0));
}

#[test]
fn variability_matches_two_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let v: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..100.0)).collect();
    let mean = v.iter().sum::<f64>() / 10.0;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 9.0;
    let got = variability(&v).unwrap();
    assert!((got.mean - mean).abs() < 1e-12 && (got.std - var.sqrt()).abs() < 1e-12);
}

struct Stub(Label, Cell<usize>);

impl Classifier for Stub {
    fn input_dim(&self) -> usize {
        1
    }
    fn scores(&self, _: &[f64]) -> [f64; 2] {
        self.1.set(self.1.get() + 1);
        match self.0 {
            Label::Sil => [0.0, 1.0],
            Label::NonSil => [1.0, 0.0],
        }
    }
}

#[test]
fn two_step_classifier_truth_table_with_stubs() {
    use Label::*;
    for (a, b, want) in [(NonSil, NonSil, NonSil), (NonSil, Sil, NonSil), (Sil, NonSil, NonSil), (Sil, Sil, Sil)] {
        let c = TwoStepClassifier {
            step1: Stub(a, Cell::new(0)),
            step2: Stub(b, Cell::new(0)),
            cost1: CostPolicy::default(),
            cost2: CostPolicy::default(),
        };
        assert_eq!(c.classify(&[0.0], &[0.0]), want);
        assert_eq!(c.step2.1.get(), usize::from(a == Sil));
    }
}
