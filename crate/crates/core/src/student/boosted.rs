use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_layout, check_training_data, cross_entropy, softmax, Student, StudentError, STUDENT_FORMAT_VERSION};
use crate::cost_model::{RegressionTree, TreeParams, FEATURE_LAYOUT};
use crate::Float;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostedHyper {
    pub rounds: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Additive smoothing of the class counts behind the initial scores.
    pub prior_smoothing: f64,
}

impl Default for BoostedHyper {
    fn default() -> Self {
        Self {
            rounds: 50,
            shrinkage: 0.1,
            max_depth: 3,
            min_samples_leaf: 2,
            prior_smoothing: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoostRound<F: Float> {
    /// Step size actually taken this round.
    pub step: F,
    /// One tree per class.
    pub trees: Vec<RegressionTree<F>>,
}

/// Softmax gradient boosting: `score_k(x) = init_k + Σ_m step_m · h_mk(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoostedStudent<F: Float> {
    pub format_version: u32,
    pub feature_layout: String,
    pub n_classes: usize,
    pub n_features: usize,
    pub init: Vec<F>,
    pub rounds: Vec<BoostRound<F>>,
    pub hyper: BoostedHyper,
    pub seed: u64,
    pub loss_history: Vec<F>,
}

/// Each round fits one tree per class to the residual `onehot − p` and adds
/// it with the shrinkage; a step that would raise the training loss is
/// halved until it does not.
pub fn train_boosted<F: Float>(
    x: &[Vec<F>],
    labels: &[usize],
    n_classes: usize,
    hyper: BoostedHyper,
    seed: u64,
) -> Result<BoostedStudent<F>, StudentError> {
    let d = check_training_data(x, labels, n_classes)?;
    if hyper.rounds == 0 || !(hyper.shrinkage > 0.0) || !(hyper.prior_smoothing > 0.0) {
        return Err(StudentError::InvalidHyper("rounds, shrinkage and smoothing must be positive".into()));
    }
    let n = x.len();
    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        counts[y] += 1;
    }
    let denom = n as f64 + hyper.prior_smoothing * n_classes as f64;
    let init: Vec<F> = counts
        .iter()
        .map(|&c| F::of(((c as f64 + hyper.prior_smoothing) / denom).ln()))
        .collect();
    let params = TreeParams {
        max_depth: hyper.max_depth,
        min_samples_leaf: hyper.min_samples_leaf,
        max_features: None,
    };
    let idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores: Vec<Vec<F>> = vec![init.clone(); n];
    let mut loss = cross_entropy(&scores, labels);
    let mut history = vec![loss];
    let mut rounds = Vec::with_capacity(hyper.rounds);
    for _ in 0..hyper.rounds {
        let probs: Vec<Vec<F>> = scores.iter().map(|s| softmax(s)).collect();
        let trees: Vec<RegressionTree<F>> = (0..n_classes)
            .map(|k| {
                let residual: Vec<F> = (0..n)
                    .map(|i| (if labels[i] == k { F::one() } else { F::zero() }) - probs[i][k])
                    .collect();
                RegressionTree::fit(x, &residual, &idx, params, &mut rng)
            })
            .collect();
        let deltas: Vec<Vec<F>> = x
            .iter()
            .map(|r| trees.iter().map(|t| t.predict(r)).collect())
            .collect();
        let mut step = F::of(hyper.shrinkage);
        let mut next = None;
        for _ in 0..40 {
            let cand: Vec<Vec<F>> = scores
                .iter()
                .zip(&deltas)
                .map(|(s, dl)| s.iter().zip(dl).map(|(&a, &b)| a + step * b).collect())
                .collect();
            let l = cross_entropy(&cand, labels);
            if l <= loss {
                next = Some((cand, l));
                break;
            }
            step = step / F::of(2.0);
        }
        let Some((cand, l)) = next else {
            break;
        };
        scores = cand;
        loss = l;
        history.push(loss);
        rounds.push(BoostRound { step, trees });
    }
    Ok(BoostedStudent {
        format_version: STUDENT_FORMAT_VERSION,
        feature_layout: FEATURE_LAYOUT.to_string(),
        n_classes,
        n_features: d,
        init,
        rounds,
        hyper,
        seed,
        loss_history: history,
    })
}

impl<F: Float> BoostedStudent<F> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("student serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, StudentError> {
        let m: Self = serde_json::from_str(text).map_err(|e| StudentError::Format(e.to_string()))?;
        check_layout(&m.feature_layout, m.format_version)?;
        if m.rounds.is_empty() {
            return Err(StudentError::Format("boosted model has no rounds".into()));
        }
        Ok(m)
    }
}

impl<F: Float> Student<F> for BoostedStudent<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn scores(&self, x: &[F]) -> Vec<F> {
        let mut s = self.init.clone();
        for round in &self.rounds {
            for (k, t) in round.trees.iter().enumerate() {
                s[k] = s[k] + round.step * t.predict(x);
            }
        }
        s
    }
}
