use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::teacher::ARM_COUNT;

/// Label = x0 XOR x1, with unequal pattern counts so a greedy first split
/// has positive gain.
fn xor_set(copies: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (a, b, weight) in [(0.0, 0.0, 5), (0.0, 1.0, 4), (1.0, 0.0, 3), (1.0, 1.0, 6)] {
        for _ in 0..copies * weight {
            x.push(vec![a, b]);
            y.push((a != b) as usize);
        }
    }
    (x, y)
}

fn random_set(n: usize, d: usize, k: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    y[0] = 0;
    y[1] = 1;
    (x, y)
}

#[test]
fn zero_model_is_uniform() {
    let m = LinearStudent::<f64>::zeros(ARM_COUNT, 7);
    let (arm, p) = student_predict(&m, &[0.3; 7]).unwrap();
    assert_eq!(arm, 0);
    assert!(p.iter().all(|&v| (v - 1.0 / 64.0).abs() < 1e-15));
}

#[test]
fn zero_epochs_gives_uniform() {
    let (x, y) = random_set(20, 7, 5, 1);
    let hyper = LinearHyper {
        epochs: 0,
        ..LinearHyper::default()
    };
    let m = train_linear(&x, &y, ARM_COUNT, hyper, 0).unwrap();
    let (_, p) = m.predict(&x[3]).unwrap();
    assert!(p.iter().all(|&v| (v - 1.0 / 64.0).abs() < 1e-15));
}

#[test]
fn gradient_matches_finite_differences() {
    let (x, y) = random_set(12, 4, 3, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect();
    let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let l2 = 1e-2;
    let (_, gw, gb) = linear_loss_and_grad(&w, &b, &x, &y, l2);
    let h = 1e-5;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
    for c in 0..3 {
        for j in 0..4 {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[c][j] += h;
            wm[c][j] -= h;
            let num = (linear_loss_and_grad(&wp, &b, &x, &y, l2).0 - linear_loss_and_grad(&wm, &b, &x, &y, l2).0) / (2.0 * h);
            assert!(rel(gw[c][j], num) < 1e-5, "w[{c}][{j}]: {} vs {num}", gw[c][j]);
        }
        let (mut bp, mut bm) = (b.clone(), b.clone());
        bp[c] += h;
        bm[c] -= h;
        let num = (linear_loss_and_grad(&w, &bp, &x, &y, l2).0 - linear_loss_and_grad(&w, &bm, &x, &y, l2).0) / (2.0 * h);
        assert!(rel(gb[c], num) < 1e-5);
    }
}

#[test]
fn separable_toy_set_fits_perfectly() {
    // label = sign of feature 0
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<Vec<f64>> = (0..60)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            vec![s * rng.gen_range(0.2..1.0), rng.gen_range(-1.0..1.0)]
        })
        .collect();
    let y: Vec<usize> = x.iter().map(|r| (r[0] > 0.0) as usize).collect();
    let m = train_linear(&x, &y, 2, LinearHyper::default(), 0).unwrap();
    assert_eq!(m.accuracy(&x, &y).unwrap(), 1.0);
    let doubled: Vec<Vec<f64>> = x.iter().map(|r| r.iter().map(|v| 2.0 * v).collect()).collect();
    let m2 = train_linear(&doubled, &y, 2, LinearHyper::default(), 0).unwrap();
    assert_eq!(m2.accuracy(&doubled, &y).unwrap(), 1.0);
}

#[test]
fn linear_loss_never_rises() {
    let (x, y) = random_set(80, 7, 10, 2);
    let m = train_linear(&x, &y, ARM_COUNT, LinearHyper::default(), 0).unwrap();
    assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    assert_eq!(m.loss_history.len(), 501);
}

#[test]
fn single_class_refused() {
    let x = vec![vec![1.0], vec![2.0]];
    assert_eq!(
        train_linear(&x, &[3, 3], ARM_COUNT, LinearHyper::default(), 0).unwrap_err(),
        StudentError::SingleClass
    );
    assert_eq!(
        train_boosted(&x, &[3, 3], ARM_COUNT, BoostedHyper::default(), 0).unwrap_err(),
        StudentError::SingleClass
    );
}

#[test]
fn zero_rounds_refused() {
    let (x, y) = xor_set(2);
    let hyper = BoostedHyper {
        rounds: 0,
        ..BoostedHyper::default()
    };
    assert!(matches!(train_boosted(&x, &y, 2, hyper, 0), Err(StudentError::InvalidHyper(_))));
}

#[test]
fn first_round_beats_uniform_loss() {
    let (x, y) = xor_set(5);
    let m = train_boosted(&x, &y, 2, BoostedHyper::default(), 0).unwrap();
    assert!(m.loss_history[1] < std::f64::consts::LN_2);
}

#[test]
fn xor_needs_trees() {
    let (x, y) = xor_set(5);
    let hyper = BoostedHyper {
        max_depth: 2,
        ..BoostedHyper::default()
    };
    let gb = train_boosted(&x, &y, 2, hyper, 0).unwrap();
    let lr = train_linear(&x, &y, 2, LinearHyper::default(), 0).unwrap();
    assert_eq!(gb.accuracy(&x, &y).unwrap(), 1.0);
    assert!(lr.accuracy(&x, &y).unwrap() <= 0.75);
}

#[test]
fn deterministic_serialization() {
    let (x, y) = random_set(40, 7, 6, 8);
    let a = train_boosted(&x, &y, ARM_COUNT, BoostedHyper::default(), 1).unwrap();
    let b = train_boosted(&x, &y, ARM_COUNT, BoostedHyper::default(), 1).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(BoostedStudent::<f64>::from_json(&a.to_json()).unwrap(), a);
    let l = train_linear(&x, &y, ARM_COUNT, LinearHyper::default(), 1).unwrap();
    assert_eq!(LinearStudent::<f64>::from_json(&l.to_json()).unwrap(), l);
    let bad = l.to_json().replace(FEATURE_LAYOUT, "other");
    assert!(matches!(
        LinearStudent::<f64>::from_json(&bad),
        Err(StudentError::LayoutMismatch { .. })
    ));
}

#[test]
fn dimension_checked() {
    let m = LinearStudent::<f64>::zeros(4, 7);
    assert!(matches!(m.predict(&[0.0; 6]), Err(StudentError::Dimension { .. })));
}

#[test]
fn distillation_set_joins_on_query_id() {
    let chosen: BTreeMap<String, usize> = [("a".to_string(), 5), ("b".to_string(), 9)].into();
    assert!(DistillationSet::build(&chosen, &[]).unwrap().is_empty());
    let feats = vec![("b".to_string(), [1.0; 7]), ("a".to_string(), [2.0; 7])];
    let set = DistillationSet::build(&chosen, &feats).unwrap();
    assert_eq!(set.labels(), vec![9, 5]);
    let missing = vec![("c".to_string(), [0.0; 7])];
    assert_eq!(
        DistillationSet::build(&chosen, &missing).unwrap_err(),
        StudentError::MissingResult("c".into())
    );
}

#[test]
fn speedup_of_itself_is_one() {
    let t = [1.0, 3.0, 2.0];
    assert_eq!(measure_speedup(&t, &t), 1.0);
    assert_eq!(measure_speedup(&[10.0, 30.0], &[1.0, 3.0]), 10.0);
}

#[test]
fn f32_students_train() {
    let (x, y) = xor_set(5);
    let x32: Vec<Vec<f32>> = x.iter().map(|r| r.iter().map(|&v| v as f32).collect()).collect();
    let m = train_boosted(&x32, &y, 2, BoostedHyper::default(), 0).unwrap();
    let (_, p) = m.predict(&x32[0]).unwrap();
    assert!((p.iter().sum::<f32>() - 1.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn boosted_loss_monotone(seed in any::<u64>(), k in 2usize..8) {
        let (x, y) = random_set(40, 7, k, seed);
        let hyper = BoostedHyper { rounds: 15, ..BoostedHyper::default() };
        let m = train_boosted(&x, &y, ARM_COUNT, hyper, seed).unwrap();
        prop_assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn probabilities_normalized(seed in any::<u64>(), probe in proptest::collection::vec(-3.0f64..3.0, 7)) {
        let (x, y) = random_set(30, 7, 6, seed);
        let hyper = BoostedHyper { rounds: 5, ..BoostedHyper::default() };
        let gb = train_boosted(&x, &y, ARM_COUNT, hyper, seed).unwrap();
        let lr = train_linear(&x, &y, ARM_COUNT, LinearHyper { epochs: 20, ..LinearHyper::default() }, seed).unwrap();
        for (_, p) in [gb.predict(&probe).unwrap(), lr.predict(&probe).unwrap()] {
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn argmax_shift_invariant(scores in proptest::collection::vec(-5.0f64..5.0, ARM_COUNT), c in -50.0f64..50.0) {
        let shifted: Vec<f64> = scores.iter().map(|s| s + c).collect();
        let a = crate::bandit::argmax_lowest(softmax(&scores));
        let b = crate::bandit::argmax_lowest(softmax(&shifted));
        prop_assert_eq!(a, b);
    }
}
