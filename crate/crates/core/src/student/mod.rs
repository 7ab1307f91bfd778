//! Plan selectors distilled from search decisions.
//!
//! Both students map the query-only features to one of the 64 arms with a
//! softmax over class scores; ties in the argmax go to the lowest arm.

mod boosted;
mod linear;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost_model::{FEATURE_LAYOUT, QUERY_FEATURE_DIM};
use crate::Float;

pub use boosted::{train_boosted, BoostedHyper, BoostedStudent};
pub use linear::{linear_loss_and_grad, train_linear, LinearHyper, LinearStudent, Scaler};

pub const STUDENT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StudentError {
    #[error("training set has fewer than two distinct labels")]
    SingleClass,
    #[error("label {label} outside 0..{classes}")]
    LabelRange { label: usize, classes: usize },
    #[error("expected {expected} features, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("no search result for query `{0}`")]
    MissingResult(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("feature layout `{found}` does not match `{expected}`")]
    LayoutMismatch { expected: String, found: String },
    #[error("malformed model: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillationExample {
    pub query_id: String,
    pub features: [f64; QUERY_FEATURE_DIM],
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistillationSet {
    pub examples: Vec<DistillationExample>,
}

impl DistillationSet {
    /// One example per featurized query, labelled with its chosen arm.
    pub fn build(
        chosen: &BTreeMap<String, usize>,
        features: &[(String, [f64; QUERY_FEATURE_DIM])],
    ) -> Result<Self, StudentError> {
        let examples = features
            .iter()
            .map(|(qid, f)| {
                let label = *chosen.get(qid).ok_or_else(|| StudentError::MissingResult(qid.clone()))?;
                Ok(DistillationExample {
                    query_id: qid.clone(),
                    features: *f,
                    label,
                })
            })
            .collect::<Result<_, StudentError>>()?;
        Ok(Self { examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn matrix<F: Float>(&self) -> Vec<Vec<F>> {
        self.examples
            .iter()
            .map(|e| e.features.iter().map(|&v| F::of(v)).collect())
            .collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn filter(&self, keep: impl Fn(&DistillationExample) -> bool) -> Self {
        Self {
            examples: self.examples.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }
}

/// Numerically stable softmax.
pub fn softmax<F: Float>(scores: &[F]) -> Vec<F> {
    let max = scores.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// A trained plan selector.
pub trait Student<F: Float> {
    fn n_features(&self) -> usize;

    /// Unnormalized class scores for one standardized-or-raw input row.
    fn scores(&self, x: &[F]) -> Vec<F>;

    /// Predicted arm and class probabilities.
    fn predict(&self, x: &[F]) -> Result<(usize, Vec<F>), StudentError> {
        if x.len() != self.n_features() {
            return Err(StudentError::Dimension {
                expected: self.n_features(),
                found: x.len(),
            });
        }
        let probs = softmax(&self.scores(x));
        let arm = crate::bandit::argmax_lowest(probs.iter().copied()).expect("non-empty classes");
        Ok((arm, probs))
    }

    fn accuracy(&self, x: &[Vec<F>], labels: &[usize]) -> Result<f64, StudentError> {
        if labels.is_empty() {
            return Ok(0.0);
        }
        let mut hits = 0usize;
        for (row, &y) in x.iter().zip(labels) {
            if self.predict(row)?.0 == y {
                hits += 1;
            }
        }
        Ok(hits as f64 / labels.len() as f64)
    }
}

pub fn student_predict<F: Float, S: Student<F>>(model: &S, x: &[F]) -> Result<(usize, Vec<F>), StudentError> {
    model.predict(x)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median full-search planning time over median student planning time.
pub fn measure_speedup(full_search_ms: &[f64], student_ms: &[f64]) -> f64 {
    median(full_search_ms) / median(student_ms)
}

fn check_training_data<F: Float>(
    x: &[Vec<F>],
    labels: &[usize],
    classes: usize,
) -> Result<usize, StudentError> {
    if x.len() != labels.len() {
        return Err(StudentError::InvalidHyper(format!(
            "{} rows but {} labels",
            x.len(),
            labels.len()
        )));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(StudentError::LabelRange { label, classes });
    }
    let first = labels.first().ok_or(StudentError::SingleClass)?;
    if labels.iter().all(|l| l == first) {
        return Err(StudentError::SingleClass);
    }
    let dim = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != dim) {
        return Err(StudentError::Dimension {
            expected: dim,
            found: r.len(),
        });
    }
    Ok(dim)
}

/// Mean softmax cross-entropy of integer labels under `scores`.
pub fn cross_entropy<F: Float>(scores: &[Vec<F>], labels: &[usize]) -> F {
    let n = F::of(labels.len() as f64);
    scores
        .iter()
        .zip(labels)
        .map(|(s, &y)| {
            let max = s.iter().copied().fold(F::neg_infinity(), F::max);
            let lse = s.iter().map(|&v| (v - max).exp()).sum::<F>().ln() + max;
            lse - s[y]
        })
        .sum::<F>()
        / n
}

fn check_layout(layout: &str, version: u32) -> Result<(), StudentError> {
    if layout != FEATURE_LAYOUT {
        return Err(StudentError::LayoutMismatch {
            expected: FEATURE_LAYOUT.to_string(),
            found: layout.to_string(),
        });
    }
    if version != STUDENT_FORMAT_VERSION {
        return Err(StudentError::Format(format!("unsupported format version {version}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
