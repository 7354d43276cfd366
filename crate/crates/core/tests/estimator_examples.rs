use multida::simlab::{gen_independent, Scenario, SimSpec};
use multida::{fit, softmax, Dataset, FitOptions, PartitionSet, PenaltyConfig, PenaltyKind, PriorTermMode, Scheme, VarianceMode};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

fn noise(n: usize, p: usize, k: usize, seed: u64) -> Dataset {
    let mut spec = SimSpec::new(Scenario::IndEqualVar, n, p, k, seed);
    spec.discriminative_fraction = 0.0;
    gen_independent(&spec).unwrap().0
}

#[test]
fn pure_noise_is_mostly_null() {
    let data = noise(200, 50, 3, 12);
    let model = FitOptions::default().fit(&data).unwrap();
    let mean_null = model.gamma().column(0).mean().unwrap();
    assert!(mean_null >= 0.95, "mean null weight {mean_null}");
}

#[test]
fn shuffled_labels_lose_signal() {
    let spec = SimSpec::new(Scenario::FsConsistency, 90, 200, 3, 21);
    let (data, _) = gen_independent(&spec).unwrap();
    let mut labels = data.labels().to_vec();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(4));
    let shuffled = Dataset::new(
        data.x().clone(),
        labels,
        data.class_names().to_vec(),
        data.feature_names().to_vec(),
    )
    .unwrap();
    let signal = |d: &Dataset| {
        let m = FitOptions::default().fit(d).unwrap();
        m.gamma().column(0).iter().map(|g| 1.0 - g).sum::<f64>()
    };
    assert!(signal(&shuffled) < signal(&data));
}

#[test]
fn equal_group_spread_makes_lda_and_qda_agree() {
    // Two classes, every class holds {c - d, c + d} pairs: pooled and
    // per-group variances coincide.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = 6;
    let mut x = Array2::zeros((8, p));
    for j in 0..p {
        let d: f64 = rng.random_range(0.5..2.0);
        for c in 0..2 {
            let centre: f64 = rng.random_range(-3.0..3.0);
            for r in 0..4 {
                x[[4 * c + r, j]] = if r % 2 == 0 { centre - d } else { centre + d };
            }
        }
    }
    let data = Dataset::new(
        x,
        vec![0, 0, 0, 0, 1, 1, 1, 1],
        vec!["a".into(), "b".into()],
        (0..p).map(|j| format!("f{j}")).collect(),
    )
    .unwrap();
    let fit_mode = |mode| {
        let parts = PartitionSet::build(2, Scheme::Exhaustive, None, mode).unwrap();
        fit(&data, &parts, PenaltyConfig::new("custom", 0.0).unwrap(), PriorTermMode::Log).unwrap()
    };
    let lda = fit_mode(VarianceMode::Equal);
    let qda = fit_mode(VarianceMode::Unequal);
    for (a, b) in lda.lambda().iter().zip(qda.lambda()) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    let q = Array2::from_shape_fn((5, p), |(i, j)| (i as f64 - 2.0) * (j as f64 + 1.0) * 0.7);
    let pl = lda.predict(q.view()).unwrap();
    let pq = qda.predict(q.view()).unwrap();
    assert_eq!(pl.labels, pq.labels);
    for (a, b) in pl.probabilities.iter().zip(&pq.probabilities) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn fit_is_deterministic_across_thread_counts() {
    let spec = SimSpec::new(Scenario::IndUnequalVar, 60, 300, 4, 3);
    let (data, _) = gen_independent(&spec).unwrap();
    let opts = FitOptions::default().with_variance(VarianceMode::Unequal);
    let pools: Vec<_> = [1, 3, 8]
        .iter()
        .map(|&t| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap())
        .collect();
    let models: Vec<_> = pools.iter().map(|pool| pool.install(|| opts.fit(&data).unwrap())).collect();
    assert!(models.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn one_vs_rest_and_ordinal_fit() {
    let spec = SimSpec::new(Scenario::FsConsistency, 60, 40, 4, 9);
    let (data, _) = gen_independent(&spec).unwrap();
    for (scheme, m) in [(Scheme::OneVsRest, 5), (Scheme::Ordinal, 8)] {
        let model = FitOptions::default().with_scheme(scheme).fit(&data).unwrap();
        assert_eq!(model.gamma().ncols(), m);
        model.validate().unwrap();
    }
}

#[test]
fn user_scheme_fits() {
    let spec = SimSpec::new(Scenario::FsConsistency, 60, 40, 3, 9);
    let (data, _) = gen_independent(&spec).unwrap();
    let opts = FitOptions {
        scheme: Scheme::User,
        user_matrix: Some(vec![vec![1, 1], vec![2, 1], vec![2, 2]]),
        ..FitOptions::default()
    };
    let model = opts.fit(&data).unwrap();
    // Null prepended.
    assert_eq!(model.partition_set().len(), 3);
}

#[test]
fn too_many_classes_is_refused() {
    let k = 13;
    let x = Array2::from_shape_fn((2 * k, 1), |(i, _)| i as f64);
    let labels: Vec<usize> = (0..2 * k).map(|i| i % k).collect();
    let data = Dataset::new(
        x,
        labels,
        (0..k).map(|c| c.to_string()).collect(),
        vec!["f".into()],
    )
    .unwrap();
    let err = FitOptions::default().fit(&data).unwrap_err().to_string();
    assert!(err.contains("27644437"), "{err}");
    FitOptions::default().with_scheme(Scheme::OneVsRest).fit(&data).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn probability_rows_sum_to_one(seed in 0u64..1000, k in 2usize..5, p in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 4 * k + rng.random_range(0..10);
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-5.0..5.0));
        let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
        let data = Dataset::new(x, labels, (0..k).map(|c| c.to_string()).collect(),
            (0..p).map(|j| j.to_string()).collect()).unwrap();
        for mode in [VarianceMode::Equal, VarianceMode::Unequal] {
            let model = FitOptions::default().with_variance(mode).with_penalty(PenaltyKind::Aic).fit(&data).unwrap();
            let q = Array2::from_shape_fn((7, p), |_| rng.random_range(-50.0..50.0));
            let pred = model.predict(q.view()).unwrap();
            for row in pred.probabilities.outer_iter() {
                prop_assert!((row.sum() - 1.0).abs() < 1e-12);
                prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
            for row in model.gamma().outer_iter() {
                prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn softmax_ignores_constant_shift(v in prop::collection::vec(-700.0f64..700.0, 1..8), c in -1e3f64..1e3) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        for (a, b) in softmax(&v).iter().zip(softmax(&shifted)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
