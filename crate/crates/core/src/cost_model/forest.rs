use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{RegressionTree, TreeParams};
use super::{CostModelError, FEATURE_LAYOUT};
use crate::Float;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub max_features: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_estimators: 50,
            max_depth: 8,
            min_samples_leaf: 2,
            max_features: 5,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    fn tree(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            max_features: Some(self.max_features),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ForestModel<F: Float> {
    pub format_version: u32,
    pub feature_layout: String,
    pub n_features: usize,
    pub params: ForestParams,
    pub seed: u64,
    pub trees: Vec<RegressionTree<F>>,
}

/// Sorts a bootstrap sample by (features, target) so the grown tree depends
/// on the sample's contents, not on row order.
fn canonicalize<F: Float>(x: &[Vec<F>], y: &[F], idx: &mut [usize]) {
    idx.sort_by(|&a, &b| {
        x[a].iter()
            .zip(&x[b])
            .map(|(p, q)| p.partial_cmp(q).unwrap_or(Ordering::Equal))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
            .then(y[a].partial_cmp(&y[b]).unwrap_or(Ordering::Equal))
    });
}

/// Resolves each tree's seed and bootstrap indices. Depends only on the
/// sample count, not on the rows.
pub fn resolve_bootstraps(n: usize, params: &ForestParams, seed: u64) -> Vec<(u64, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..params.n_estimators)
        .map(|_| {
            let tree_seed: u64 = rng.gen();
            let idx = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            (tree_seed, idx)
        })
        .collect()
}

fn check_data<F: Float>(x: &[Vec<F>], y: &[F], min_samples: usize) -> Result<usize, CostModelError> {
    if x.len() != y.len() {
        return Err(CostModelError::LengthMismatch {
            features: x.len(),
            targets: y.len(),
        });
    }
    if x.len() < min_samples {
        return Err(CostModelError::InsufficientSamples {
            found: x.len(),
            required: min_samples,
        });
    }
    let dim = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != dim) {
        return Err(CostModelError::Dimension {
            expected: dim,
            found: bad.len(),
        });
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(CostModelError::NonFinite);
    }
    Ok(dim)
}

/// Trains with explicit per-tree bootstraps; trees grow in parallel.
pub fn train_forest_with<F: Float>(
    x: &[Vec<F>],
    y: &[F],
    params: ForestParams,
    seed: u64,
    bootstraps: Vec<(u64, Vec<usize>)>,
) -> Result<ForestModel<F>, CostModelError> {
    let dim = check_data(x, y, 2 * params.min_samples_leaf.max(1))?;
    if params.n_estimators == 0 || params.max_features == 0 {
        return Err(CostModelError::InvalidParams("n_estimators and max_features must be positive".into()));
    }
    let trees = bootstraps
        .into_par_iter()
        .map(|(tree_seed, mut idx)| {
            canonicalize(x, y, &mut idx);
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
            RegressionTree::fit(x, y, &idx, params.tree(), &mut rng)
        })
        .collect();
    Ok(ForestModel {
        format_version: MODEL_FORMAT_VERSION,
        feature_layout: FEATURE_LAYOUT.to_string(),
        n_features: dim,
        params,
        seed,
        trees,
    })
}

pub fn train_forest<F: Float>(
    x: &[Vec<F>],
    y: &[F],
    params: ForestParams,
    seed: u64,
) -> Result<ForestModel<F>, CostModelError> {
    train_forest_with(x, y, params, seed, resolve_bootstraps(x.len(), &params, seed))
}

impl<F: Float> ForestModel<F> {
    fn check_dim(&self, fv: &[F]) -> Result<(), CostModelError> {
        if fv.len() != self.n_features {
            return Err(CostModelError::Dimension {
                expected: self.n_features,
                found: fv.len(),
            });
        }
        Ok(())
    }

    /// Mean of the tree outputs, clamped at zero.
    pub fn predict(&self, fv: &[F]) -> Result<F, CostModelError> {
        self.check_dim(fv)?;
        let sum: F = self.trees.iter().map(|t| t.predict(fv)).sum();
        Ok((sum / F::of(self.trees.len() as f64)).max(F::zero()))
    }

    /// Smallest and largest single-tree prediction.
    pub fn spread(&self, fv: &[F]) -> Result<(F, F), CostModelError> {
        self.check_dim(fv)?;
        Ok(self.trees.iter().map(|t| t.predict(fv)).fold(
            (F::infinity(), F::neg_infinity()),
            |(lo, hi), p| (lo.min(p), hi.max(p)),
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CostModelError> {
        let model: Self = serde_json::from_str(text).map_err(|e| CostModelError::Format(e.to_string()))?;
        if model.feature_layout != FEATURE_LAYOUT {
            return Err(CostModelError::LayoutMismatch {
                expected: FEATURE_LAYOUT.to_string(),
                found: model.feature_layout,
            });
        }
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(CostModelError::Format(format!(
                "unsupported format version {}",
                model.format_version
            )));
        }
        if model.trees.is_empty() {
            return Err(CostModelError::Format("forest has no trees".into()));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n: usize,
    pub mae_ms: f64,
    /// `None` when the targets have zero variance.
    pub r_squared: Option<f64>,
}

pub fn evaluate_predictions(predicted: &[f64], actual: &[f64]) -> Result<Evaluation, CostModelError> {
    if actual.is_empty() {
        return Err(CostModelError::InsufficientSamples { found: 0, required: 1 });
    }
    if predicted.len() != actual.len() {
        return Err(CostModelError::LengthMismatch {
            features: predicted.len(),
            targets: actual.len(),
        });
    }
    let n = actual.len() as f64;
    let mae = predicted.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / n;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    let ss_res: f64 = predicted.iter().zip(actual).map(|(p, a)| (a - p).powi(2)).sum();
    let r_squared = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    Ok(Evaluation {
        n: actual.len(),
        mae_ms: mae,
        r_squared,
    })
}

pub fn evaluate_model<F: Float>(
    model: &ForestModel<F>,
    x: &[Vec<F>],
    y: &[F],
) -> Result<Evaluation, CostModelError> {
    let predicted = x
        .iter()
        .map(|r| model.predict(r).map(Float::f64))
        .collect::<Result<Vec<_>, _>>()?;
    let actual: Vec<f64> = y.iter().map(|v| v.f64()).collect();
    evaluate_predictions(&predicted, &actual)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSearch {
    pub best_depth: usize,
    /// (depth, mean held-out MAE) per candidate.
    pub scores: Vec<(usize, f64)>,
}

/// k-fold cross-validation over `depths`, picking the lowest mean MAE.
pub fn cross_validate_depth<F: Float>(
    x: &[Vec<F>],
    y: &[F],
    params: ForestParams,
    depths: &[usize],
    folds: usize,
    seed: u64,
) -> Result<DepthSearch, CostModelError> {
    check_data(x, y, folds.max(2) * 2 * params.min_samples_leaf.max(1))?;
    if depths.is_empty() || folds < 2 {
        return Err(CostModelError::InvalidParams("need depths and at least 2 folds".into()));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    let fold_of: Vec<usize> = {
        let mut f = vec![0; x.len()];
        for (pos, &i) in order.iter().enumerate() {
            f[i] = pos % folds;
        }
        f
    };
    let mut scores = Vec::new();
    for &depth in depths {
        let p = ForestParams { max_depth: depth, ..params };
        let mut total = 0.0;
        for k in 0..folds {
            let (mut tx, mut ty, mut vx, mut vy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for i in 0..x.len() {
                if fold_of[i] == k {
                    vx.push(x[i].clone());
                    vy.push(y[i]);
                } else {
                    tx.push(x[i].clone());
                    ty.push(y[i]);
                }
            }
            let model = train_forest(&tx, &ty, p, seed.wrapping_add(k as u64))?;
            total += evaluate_model(&model, &vx, &vy)?.mae_ms;
        }
        scores.push((depth, total / folds as f64));
    }
    let best = crate::bandit::argmax_lowest(scores.iter().map(|&(_, m)| -m)).expect("non-empty");
    Ok(DepthSearch {
        best_depth: scores[best].0,
        scores,
    })
}
