use serde::{Deserialize, Serialize};

use super::{check_layout, check_training_data, cross_entropy, softmax, Student, StudentError, STUDENT_FORMAT_VERSION};
use crate::cost_model::FEATURE_LAYOUT;
use crate::Float;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LinearHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

/// Per-feature standardization fitted on the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Scaler<F: Float> {
    pub mean: Vec<F>,
    /// Zero-variance features keep scale 1.
    pub scale: Vec<F>,
}

impl<F: Float> Scaler<F> {
    pub fn fit(x: &[Vec<F>]) -> Self {
        let d = x[0].len();
        let n = F::of(x.len() as f64);
        let mean: Vec<F> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<F>() / n).collect();
        let scale = (0..d)
            .map(|j| {
                let var = x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<F>() / n;
                if var > F::epsilon() {
                    var.sqrt()
                } else {
                    F::one()
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![F::zero(); d],
            scale: vec![F::one(); d],
        }
    }

    pub fn apply(&self, x: &[F]) -> Vec<F> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }
}

/// Softmax regression: `p(a | x) = softmax(W·z + b)`, `z` the standardized input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearStudent<F: Float> {
    pub format_version: u32,
    pub feature_layout: String,
    pub n_classes: usize,
    pub weights: Vec<Vec<F>>,
    pub bias: Vec<F>,
    pub scaler: Scaler<F>,
    pub hyper: LinearHyper,
    pub seed: u64,
    pub loss_history: Vec<F>,
}

fn logits<F: Float>(w: &[Vec<F>], b: &[F], z: &[F]) -> Vec<F> {
    w.iter()
        .zip(b)
        .map(|(row, &bias)| row.iter().zip(z).map(|(&a, &v)| a * v).sum::<F>() + bias)
        .collect()
}

/// Mean cross-entropy plus `l2/2 · ‖W‖²`, with gradients in `W` and `b`.
pub fn linear_loss_and_grad<F: Float>(
    w: &[Vec<F>],
    b: &[F],
    z: &[Vec<F>],
    labels: &[usize],
    l2: F,
) -> (F, Vec<Vec<F>>, Vec<F>) {
    let k = w.len();
    let d = w[0].len();
    let n = F::of(labels.len() as f64);
    let scores: Vec<Vec<F>> = z.iter().map(|r| logits(w, b, r)).collect();
    let penalty = w.iter().flatten().map(|&v| v * v).sum::<F>() * l2 / F::of(2.0);
    let loss = cross_entropy(&scores, labels) + penalty;
    let mut gw = vec![vec![F::zero(); d]; k];
    let mut gb = vec![F::zero(); k];
    for ((row, s), &y) in z.iter().zip(&scores).zip(labels) {
        let p = softmax(s);
        for c in 0..k {
            let delta = (p[c] - if c == y { F::one() } else { F::zero() }) / n;
            gb[c] = gb[c] + delta;
            for j in 0..d {
                gw[c][j] = gw[c][j] + delta * row[j];
            }
        }
    }
    for c in 0..k {
        for j in 0..d {
            gw[c][j] = gw[c][j] + l2 * w[c][j];
        }
    }
    (loss, gw, gb)
}

/// Full-batch gradient descent from zero weights. A step that would raise
/// the loss is retried at half the rate, so the recorded loss never rises.
pub fn train_linear<F: Float>(
    x: &[Vec<F>],
    labels: &[usize],
    n_classes: usize,
    hyper: LinearHyper,
    seed: u64,
) -> Result<LinearStudent<F>, StudentError> {
    let d = check_training_data(x, labels, n_classes)?;
    if !(hyper.learning_rate > 0.0) || !(hyper.l2 >= 0.0) {
        return Err(StudentError::InvalidHyper("learning_rate must be positive, l2 non-negative".into()));
    }
    let scaler = Scaler::fit(x);
    let z: Vec<Vec<F>> = x.iter().map(|r| scaler.apply(r)).collect();
    let l2 = F::of(hyper.l2);
    let mut w = vec![vec![F::zero(); d]; n_classes];
    let mut b = vec![F::zero(); n_classes];
    let (mut loss, mut gw, mut gb) = linear_loss_and_grad(&w, &b, &z, labels, l2);
    let mut history = vec![loss];
    let mut lr = F::of(hyper.learning_rate);
    for _ in 0..hyper.epochs {
        let mut accepted = false;
        for _ in 0..40 {
            let nw: Vec<Vec<F>> = w
                .iter()
                .zip(&gw)
                .map(|(r, g)| r.iter().zip(g).map(|(&a, &ga)| a - lr * ga).collect())
                .collect();
            let nb: Vec<F> = b.iter().zip(&gb).map(|(&a, &ga)| a - lr * ga).collect();
            let (nl, ngw, ngb) = linear_loss_and_grad(&nw, &nb, &z, labels, l2);
            if nl <= loss {
                (w, b, loss, gw, gb) = (nw, nb, nl, ngw, ngb);
                accepted = true;
                break;
            }
            lr = lr / F::of(2.0);
        }
        history.push(loss);
        if !accepted {
            break;
        }
    }
    Ok(LinearStudent {
        format_version: STUDENT_FORMAT_VERSION,
        feature_layout: FEATURE_LAYOUT.to_string(),
        n_classes,
        weights: w,
        bias: b,
        scaler,
        hyper,
        seed,
        loss_history: history,
    })
}

impl<F: Float> LinearStudent<F> {
    /// Untrained model: every class scores zero.
    pub fn zeros(n_classes: usize, n_features: usize) -> Self {
        Self {
            format_version: STUDENT_FORMAT_VERSION,
            feature_layout: FEATURE_LAYOUT.to_string(),
            n_classes,
            weights: vec![vec![F::zero(); n_features]; n_classes],
            bias: vec![F::zero(); n_classes],
            scaler: Scaler::identity(n_features),
            hyper: LinearHyper::default(),
            seed: 0,
            loss_history: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("student serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, StudentError> {
        let m: Self = serde_json::from_str(text).map_err(|e| StudentError::Format(e.to_string()))?;
        check_layout(&m.feature_layout, m.format_version)?;
        Ok(m)
    }
}

impl<F: Float> Student<F> for LinearStudent<F> {
    fn n_features(&self) -> usize {
        self.scaler.mean.len()
    }

    fn scores(&self, x: &[F]) -> Vec<F> {
        logits(&self.weights, &self.bias, &self.scaler.apply(x))
    }
}
