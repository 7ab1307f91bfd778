use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::ir::{parse_sql, summarize_schema, RawTable};

fn schema() -> SchemaModel {
    summarize_schema(vec![
        RawTable::new("e", 0, &[("k", 0)]),
        RawTable::new("t", 999, &[("a", 99), ("b", 9)]),
        RawTable::new("u", 99_000, &[("a", 99), ("c", 9999)]),
    ])
    .unwrap()
}

fn caps() -> Constraints {
    Constraints::new(1000.0, 10.0).unwrap()
}

#[test]
fn empty_table_all_off() {
    let s = schema();
    let ir = parse_sql("SELECT x.k FROM e x", &s).unwrap();
    let fv = featurize(&ir, PlanConfig::BASELINE, &s, &ResourceSnapshot::default(), &caps());
    let mut expected = [0.0; FEATURE_DIM];
    expected[6] = 1.0;
    assert_eq!(fv, expected);
}

#[test]
fn arm_five_sets_bits_zero_and_two() {
    let s = schema();
    let ir = parse_sql("SELECT x.k FROM e x", &s).unwrap();
    let fv = featurize(&ir, PlanConfig::from_index(5).unwrap(), &s, &ResourceSnapshot::default(), &caps());
    let on: Vec<usize> = (0..FLAG_DIM).filter(|&i| fv[i] == 1.0).collect();
    assert_eq!(on, vec![0, 2]);
}

#[test]
fn schema_and_resource_features() {
    let s = schema();
    let ir = parse_sql("SELECT x.b FROM t x JOIN u y ON x.a = y.a WHERE y.c = 5", &s).unwrap();
    let fv = featurize(&ir, PlanConfig::BASELINE, &s, &ResourceSnapshot::new(250.0, 0.4).unwrap(), &caps());
    assert_eq!(&fv[6..9], &[2.0, 1.0, 1.0]);
    assert_abs_diff_eq!(fv[9], 5.0, epsilon = 1e-12);
    assert_abs_diff_eq!(fv[10], 4.0, epsilon = 1e-12);
    assert_eq!(&fv[11..], &[0.25, 0.4]);
}

#[test]
fn predicate_order_does_not_matter() {
    let s = schema();
    let a = parse_sql("SELECT x.a FROM t x WHERE x.a = 1 AND x.b > 2", &s).unwrap();
    let b = parse_sql("SELECT x.a FROM t x WHERE x.b > 2 AND x.a = 1", &s).unwrap();
    let r = ResourceSnapshot::default();
    assert_eq!(
        featurize(&a, PlanConfig::from_index(9).unwrap(), &s, &r, &caps()),
        featurize(&b, PlanConfig::from_index(9).unwrap(), &s, &r, &caps())
    );
}

fn synthetic(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..FEATURE_DIM).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let y = x
        .iter()
        .map(|r| 10.0 * r[0] + 5.0 * (r[3] > 0.5) as u8 as f64 + 3.0 * r[7] * r[9] + rng.gen_range(-0.1..0.1))
        .collect();
    (x, y)
}

fn small() -> ForestParams {
    ForestParams {
        n_estimators: 10,
        ..ForestParams::default()
    }
}

#[test]
fn constant_target_predicts_constant() {
    let (x, _) = synthetic(40, 1);
    let y = vec![7.25; 40];
    let m = train_forest(&x, &y, small(), 3).unwrap();
    for r in &x {
        assert_eq!(m.predict(r).unwrap(), 7.25);
    }
}

#[test]
fn beats_mean_predictor_on_training_data() {
    let (x, y) = synthetic(200, 2);
    let m = train_forest(&x, &y, small(), 3).unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let baseline = evaluate_predictions(&vec![mean; y.len()], &y).unwrap();
    let fit = evaluate_model(&m, &x, &y).unwrap();
    assert!(fit.mae_ms <= baseline.mae_ms);
    assert_abs_diff_eq!(baseline.r_squared.unwrap(), 0.0, epsilon = 1e-12);
}

#[test]
fn step_function_levels_recovered() {
    // closed form: left mean 2, right mean 9
    let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 100.0]).collect();
    let y: Vec<f64> = (0..100).map(|i| if i < 50 { 2.0 } else { 9.0 }).collect();
    let p = ForestParams {
        n_estimators: 20,
        max_features: 1,
        ..ForestParams::default()
    };
    let m = train_forest(&x, &y, p, 11).unwrap();
    assert_abs_diff_eq!(m.predict(&[0.1]).unwrap(), 2.0, epsilon = 1e-9);
    assert_abs_diff_eq!(m.predict(&[0.9]).unwrap(), 9.0, epsilon = 1e-9);
}

fn stub(leaves: &[f64]) -> ForestModel<f64> {
    ForestModel {
        format_version: MODEL_FORMAT_VERSION,
        feature_layout: FEATURE_LAYOUT.into(),
        n_features: 1,
        params: ForestParams::default(),
        seed: 0,
        trees: leaves.iter().map(|&v| RegressionTree::constant(v, 2)).collect(),
    }
}

#[test]
fn prediction_is_tree_mean_clamped() {
    assert_eq!(stub(&[4.0]).predict(&[0.0]).unwrap(), 4.0);
    assert_eq!(stub(&[3.0, 6.0]).predict(&[0.0]).unwrap(), 4.5);
    assert_eq!(stub(&[-3.0, 1.0]).predict(&[0.0]).unwrap(), 0.0);
    assert_eq!(stub(&[3.0, 6.0]).spread(&[0.0]).unwrap(), (3.0, 6.0));
    assert!(matches!(stub(&[1.0]).predict(&[0.0, 1.0]), Err(CostModelError::Dimension { .. })));
}

#[test]
fn evaluation_edge_cases() {
    let e = evaluate_predictions(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!((e.mae_ms, e.r_squared), (0.0, Some(1.0)));
    assert_eq!(evaluate_predictions(&[1.0, 2.0], &[5.0, 5.0]).unwrap().r_squared, None);
    assert!(evaluate_predictions(&[], &[]).is_err());
}

#[test]
fn insufficient_samples_refused() {
    let (x, y) = synthetic(3, 0);
    assert!(matches!(
        train_forest(&x, &y, small(), 0),
        Err(CostModelError::InsufficientSamples { .. })
    ));
}

#[test]
fn deterministic_serialization_and_layout_check() {
    let (x, y) = synthetic(120, 5);
    let a = train_forest(&x, &y, small(), 9).unwrap().to_json();
    let b = train_forest(&x, &y, small(), 9).unwrap().to_json();
    assert_eq!(a, b);
    let back = ForestModel::<f64>::from_json(&a).unwrap();
    assert_eq!(back.to_json(), a);
    let bad = a.replace(FEATURE_LAYOUT, "plan-features-v0");
    assert!(matches!(
        ForestModel::<f64>::from_json(&bad),
        Err(CostModelError::LayoutMismatch { .. })
    ));
}

#[test]
fn row_order_does_not_change_trees() {
    let (x, y) = synthetic(150, 6);
    let boots = resolve_bootstraps(x.len(), &small(), 4);
    let a = train_forest_with(&x, &y, small(), 4, boots.clone()).unwrap();
    // reverse the rows and remap the same bootstrap draws
    let n = x.len();
    let xr: Vec<Vec<f64>> = x.iter().rev().cloned().collect();
    let yr: Vec<f64> = y.iter().rev().copied().collect();
    let remapped = boots
        .into_iter()
        .map(|(s, idx)| (s, idx.into_iter().map(|i| n - 1 - i).collect()))
        .collect();
    let b = train_forest_with(&xr, &yr, small(), 4, remapped).unwrap();
    assert_eq!(a.trees, b.trees);
}

#[test]
fn forest_generalizes_at_least_as_well_as_best_tree() {
    let (x, y) = synthetic(600, 7);
    let (xt, yt) = synthetic(300, 8);
    let m = train_forest(&x, &y, ForestParams::default(), 1).unwrap();
    let mse = |pred: &dyn Fn(&[f64]) -> f64| {
        xt.iter().zip(&yt).map(|(r, t)| (pred(r) - t).powi(2)).sum::<f64>() / yt.len() as f64
    };
    let forest = mse(&|r| m.predict(r).unwrap());
    let best_tree = m.trees.iter().map(|t| mse(&|r| t.predict(r))).fold(f64::INFINITY, f64::min);
    assert!(forest <= 1.05 * best_tree, "{forest} vs {best_tree}");
}

#[test]
fn f32_forest_trains() {
    let (x, y) = synthetic(80, 3);
    let x32: Vec<Vec<f32>> = x.iter().map(|r| r.iter().map(|&v| v as f32).collect()).collect();
    let y32: Vec<f32> = y.iter().map(|&v| v as f32).collect();
    let m = train_forest(&x32, &y32, small(), 2).unwrap();
    let e = evaluate_model(&m, &x32, &y32).unwrap();
    assert!(e.r_squared.unwrap() > 0.8);
}

#[test]
fn cross_validation_picks_a_candidate() {
    let (x, y) = synthetic(150, 9);
    let p = ForestParams {
        n_estimators: 5,
        ..ForestParams::default()
    };
    let cv = cross_validate_depth(&x, &y, p, &[1, 4, 8], 5, 0).unwrap();
    assert_eq!(cv.scores.len(), 3);
    assert_ne!(cv.best_depth, 1);
}

/// Frozen output of a seeded model on a fixed vector.
#[test]
fn golden_prediction() {
    let (x, y) = synthetic(200, 42);
    let m = train_forest(&x, &y, ForestParams::default(), 42).unwrap();
    let probe = [0.5; FEATURE_DIM];
    let got = m.predict(&probe).unwrap();
    assert_abs_diff_eq!(got, GOLDEN, epsilon = 1e-9);
}

const GOLDEN: f64 = 8.42746827170353;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn predictions_non_negative(seed in any::<u64>(), probe in proptest::collection::vec(-2.0f64..3.0, FEATURE_DIM)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..30).map(|_| (0..FEATURE_DIM).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..30).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let m = train_forest(&x, &y, small(), seed).unwrap();
        prop_assert!(m.predict(&probe).unwrap() >= 0.0);
    }
}
