use super::*;
use crate::space::{
    AlgorithmChoice, DecisionStep, HyperparameterSpec, ParamKind, ParamValue, Pipeline,
    PipelinePrefix, SearchSpace,
};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn constant_forest(c: f64, n: usize) -> SurrogateForest {
    let mut data = TrainingSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..n {
        data.push(vec![rng.random(), rng.random()], c);
    }
    SurrogateForest::fit(&data, &ForestParams::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
}

#[test]
fn constant_targets_predict_constant_with_zero_variance() {
    let model = constant_forest(0.42, 20);
    let p = model.predict(&[0.3, 0.9]).unwrap();
    assert_eq!(p.mean, 0.42);
    assert_eq!(p.variance, 0.0);
}

#[test]
fn duplicated_point_predicts_its_target() {
    let mut data = TrainingSet::new();
    for _ in 0..10 {
        data.push(vec![0.5, 0.5], 0.7);
    }
    let model =
        SurrogateForest::fit(&data, &ForestParams::default(), &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
    let p = model.predict(&[0.5, 0.5]).unwrap();
    assert_eq!(p.mean, 0.7);
    assert_eq!(p.variance, 0.0);
}

#[test]
fn insufficient_data_is_an_error() {
    let mut data = TrainingSet::new();
    data.push(vec![0.0], 0.5);
    let err = SurrogateForest::fit(&data, &ForestParams::default(), &mut ChaCha8Rng::seed_from_u64(0));
    assert!(matches!(err, Err(SurrogateError::InsufficientData(1))));
}

#[test]
fn noise_targets_stay_within_training_hull() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut data = TrainingSet::new();
    for _ in 0..60 {
        data.push(vec![rng.random(), rng.random(), rng.random()], rng.random());
    }
    let (lo, hi) = (
        data.rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        data.rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let model = SurrogateForest::fit(&data, &ForestParams::default(), &mut rng).unwrap();
    for _ in 0..2000 {
        let probe = vec![rng.random(), rng.random(), rng.random()];
        let p = model.predict(&probe).unwrap();
        assert!(p.mean >= lo && p.mean <= hi, "prediction {} outside [{lo}, {hi}]", p.mean);
    }
}

#[test]
fn single_tree_has_zero_variance_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut data = TrainingSet::new();
    for _ in 0..30 {
        data.push(vec![rng.random(), rng.random()], rng.random());
    }
    let params = ForestParams {
        n_trees: 1,
        ..ForestParams::default()
    };
    let model = SurrogateForest::fit(&data, &params, &mut rng).unwrap();
    for _ in 0..100 {
        let p = model.predict(&[rng.random(), rng.random()]).unwrap();
        assert_eq!(p.variance, 0.0);
    }
}

#[test]
fn cross_tree_variance_is_population_variance() {
    // two trees predicting 0.2 and 0.4 -> mean 0.3, variance 0.01
    let model = SurrogateForest::from_leaf_means(&[0.2, 0.4], 1);
    let p = model.predict(&[0.0]).unwrap();
    assert!((p.mean - 0.3).abs() < 1e-12);
    assert!((p.variance - 0.01).abs() < 1e-12);
}

#[test]
fn fit_predict_is_deterministic_per_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut data = TrainingSet::new();
    for _ in 0..40 {
        data.push(vec![rng.random(), rng.random()], rng.random());
    }
    let a = SurrogateForest::fit(&data, &ForestParams::default(), &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
    let b = SurrogateForest::fit(&data, &ForestParams::default(), &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
    for _ in 0..200 {
        let probe = vec![rng.random(), rng.random()];
        assert_eq!(a.predict(&probe).unwrap(), b.predict(&probe).unwrap());
    }
}

#[test]
fn dimension_mismatch_is_an_error() {
    let model = constant_forest(0.5, 10);
    assert!(matches!(
        model.predict(&[0.1]),
        Err(SurrogateError::DimensionMismatch { expected: 2, got: 1 })
    ));
}

#[test]
fn ei_deterministic_branch() {
    assert!((ei_from_prediction(0.7, 0.0, 0.5) - 0.2).abs() < 1e-15);
    assert_eq!(ei_from_prediction(0.4, 0.0, 0.5), 0.0);
}

#[test]
fn ei_at_mu_equal_fbest_is_pdf_at_zero() {
    // closed form: sigma * phi(0) = 1/sqrt(2 pi)
    let expected = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!((ei_from_prediction(0.5, 1.0, 0.5) - expected).abs() < 1e-12);
    assert!((expected - 0.39894).abs() < 1e-5);
}

#[test]
fn ei_finite_difference_matches_normal_cdf() {
    // dEI/dmu = Phi(z) at sigma = 1
    let std_normal = Normal::standard();
    let h = 1e-6;
    for &(mu, f_best) in &[(0.3, 0.5), (0.5, 0.5), (0.9, 0.2), (0.1, 0.8)] {
        let grad = (ei_from_prediction(mu + h, 1.0, f_best) - ei_from_prediction(mu - h, 1.0, f_best)) / (2.0 * h);
        let z = mu - f_best;
        assert!((grad - std_normal.cdf(z)).abs() < 1e-4, "mu={mu} f_best={f_best}");
    }
}

proptest! {
    #[test]
    fn ei_nonnegative_and_monotone_in_fbest(
        mu in 0.0f64..1.0,
        sigma in 0.0f64..1.0,
        f1 in 0.0f64..1.0,
        f2 in 0.0f64..1.0,
    ) {
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let e_lo = ei_from_prediction(mu, sigma, lo);
        let e_hi = ei_from_prediction(mu, sigma, hi);
        prop_assert!(e_lo >= 0.0 && e_hi >= 0.0);
        prop_assert!(e_lo >= e_hi - 1e-12);
    }

    #[test]
    fn softmax_shift_invariance(qs in proptest::collection::vec(0.0f64..1.0, 1..6), shift in -0.5f64..0.5) {
        let base = softmax(&qs);
        let shifted: Vec<f64> = qs.iter().map(|q| q + shift).collect();
        let moved = softmax(&shifted);
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((base.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

/// One step, one algorithm `m`, categorical hyperparameter with four values
/// mapped to rewards 0.1 / 0.2 / 0.3 / 0.4.
fn four_config_space() -> (SearchSpace, Vec<(Pipeline, f64)>) {
    let values = ["v1", "v2", "v3", "v4"];
    let space = SearchSpace::new(
        "four",
        vec![DecisionStep {
            index: 1,
            algorithms: vec![AlgorithmChoice {
                name: "m".into(),
                default_theta: [("v".to_string(), ParamValue::Cat("v1".into()))].into(),
                hyperparameters: vec![HyperparameterSpec {
                    name: "v".into(),
                    kind: ParamKind::Categorical(values.iter().map(|s| s.to_string()).collect()),
                    condition: None,
                    bias: None,
                }],
            }],
        }],
        vec![],
    );
    let configs: Vec<(Pipeline, f64)> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut x = space.default_pipeline("m").unwrap();
            x.theta[0].insert("v".into(), ParamValue::Cat(v.to_string()));
            (x, 0.1 * (i + 1) as f64)
        })
        .collect();
    (space, configs)
}

/// Forest that reproduces the table exactly: full data per tree, pure leaves.
fn exact_forest(space: &SearchSpace, configs: &[(Pipeline, f64)]) -> SurrogateForest {
    let mut data = TrainingSet::new();
    for (x, y) in configs {
        data.push(space.encode(x), *y);
    }
    let params = ForestParams {
        n_trees: 10,
        min_leaf: 1,
        bootstrap: false,
    };
    SurrogateForest::fit(&data, &params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap()
}

#[test]
fn q_hat_constant_surrogate_is_exact() {
    let (space, _) = four_config_space();
    let mut data = TrainingSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let x = space.sample_default(&PipelinePrefix::empty(), &mut rng).unwrap();
        data.push(space.encode(&x), 0.6);
    }
    let model = SurrogateForest::fit(&data, &ForestParams::default(), &mut rng).unwrap();
    let q = q_hat(&model, &space, &PipelinePrefix::empty(), "m", 50, &mut rng).unwrap();
    assert_eq!(q, 0.6);
}

#[test]
fn q_hat_tracks_the_exhaustive_expectation() {
    let (space, configs) = four_config_space();
    let model = exact_forest(&space, &configs);
    // forest is exact at every config
    for (x, y) in &configs {
        assert!((model.predict(&space.encode(x)).unwrap().mean - y).abs() < 1e-12);
    }
    // exhaustive D-expectation: uniform over the four configs
    let exact: f64 = configs.iter().map(|(_, y)| y).sum::<f64>() / 4.0;
    assert!((exact - 0.25).abs() < 1e-12);
    let mut hits = 0;
    let n_seeds = 50;
    for seed in 0..n_seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let q = q_hat(&model, &space, &PipelinePrefix::empty(), "m", 100, &mut rng).unwrap();
        if (q - exact).abs() <= 0.05 {
            hits += 1;
        }
    }
    assert!(hits >= n_seeds * 95 / 100, "hits = {hits}/{n_seeds}");
}

#[test]
fn q_hat_with_one_sample_is_a_single_prediction() {
    let (space, configs) = four_config_space();
    let model = exact_forest(&space, &configs);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut probe_rng = rng.clone();
    let q = q_hat(&model, &space, &PipelinePrefix::empty(), "m", 1, &mut rng).unwrap();
    let x = space
        .sample_default(&PipelinePrefix::new(vec!["m".into()]), &mut probe_rng)
        .unwrap();
    assert_eq!(q, model.predict(&space.encode(&x)).unwrap().mean);
}

#[test]
fn q_hat_dead_end_is_an_error() {
    let (mut space, configs) = four_config_space();
    space.forbidden = vec![crate::space::ForbiddenPattern(vec![(1, "m".into())])];
    let model = exact_forest(&four_config_space().0, &configs);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(q_hat(&model, &space, &PipelinePrefix::empty(), "m", 10, &mut rng).is_err());
}

#[test]
fn policy_closed_forms() {
    let even = softmax(&[0.4, 0.4, 0.4]);
    for p in &even {
        assert!((p - 1.0 / 3.0).abs() < 1e-12);
    }
    let two = softmax(&[0.0, (2.0f64).ln()]);
    assert!((two[0] - 1.0 / 3.0).abs() < 1e-12);
    assert!((two[1] - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(softmax(&[0.7]), vec![1.0]);
}

#[test]
fn policy_over_space_actions_sums_to_one() {
    let (space, configs) = four_config_space();
    let model = exact_forest(&space, &configs);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pi = policy(&model, &space, &PipelinePrefix::empty(), &["m".to_string()], 20, &mut rng).unwrap();
    assert_eq!(pi, vec![1.0]);
}
