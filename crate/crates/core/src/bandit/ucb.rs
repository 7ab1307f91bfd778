use serde::{Deserialize, Serialize};

use super::BanditError;
use crate::Float;

/// Constraint-shaped reward: relative latency gain over the baseline when
/// feasible, clamped to `[-1, 1]`; exactly `-1` when infeasible.
pub fn reward(latency_ms: f64, baseline_latency_ms: f64, feasible: bool) -> Result<f64, BanditError> {
    if !(baseline_latency_ms > 0.0) {
        return Err(BanditError::NonPositiveBaseline(baseline_latency_ms));
    }
    if !feasible {
        return Ok(-1.0);
    }
    Ok((1.0 - latency_ms / baseline_latency_ms).clamp(-1.0, 1.0))
}

/// `mean + sqrt(2 ln t / n)`.
pub fn ucb1_score<F: Float>(mean: F, n: u64, t: u64) -> Result<F, BanditError> {
    if n == 0 {
        return Err(BanditError::UnpulledArm);
    }
    if t < n {
        return Err(BanditError::InvalidConfig(format!("round {t} below arm pulls {n}")));
    }
    let two = F::of(2.0);
    Ok(mean + (two * F::of(t as f64).ln() / F::of(n as f64)).sqrt())
}

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax_lowest<F: PartialOrd + Copy>(values: impl IntoIterator<Item = F>) -> Option<usize> {
    let mut best: Option<(usize, F)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// UCB1 statistics over a fixed arm set.
///
/// Invariant: `t == pulls.iter().sum()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Ucb1<F: Float> {
    pulls: Vec<u64>,
    means: Vec<F>,
    t: u64,
}

impl<F: Float> Ucb1<F> {
    pub fn new(arms: usize) -> Self {
        Self {
            pulls: vec![0; arms],
            means: vec![F::zero(); arms],
            t: 0,
        }
    }

    pub fn arms(&self) -> usize {
        self.pulls.len()
    }

    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    pub fn means(&self) -> &[F] {
        &self.means
    }

    pub fn initialized(&self) -> bool {
        self.pulls.iter().all(|&n| n > 0)
    }

    pub fn score(&self, arm: usize) -> Result<F, BanditError> {
        ucb1_score(self.means[arm], self.pulls[arm], self.t)
    }

    /// First unpulled arm in index order, else the highest UCB score.
    pub fn select(&self) -> usize {
        if let Some(arm) = self.pulls.iter().position(|&n| n == 0) {
            return arm;
        }
        let scores = (0..self.arms()).map(|a| self.score(a).expect("all arms pulled"));
        argmax_lowest(scores).expect("at least one arm")
    }

    pub fn update(&mut self, arm: usize, reward: F) {
        self.pulls[arm] += 1;
        self.t += 1;
        let n = F::of(self.pulls[arm] as f64);
        self.means[arm] = self.means[arm] + (reward - self.means[arm]) / n;
    }
}

/// Cumulative regret `Σ (best_mean − reward_t)`.
pub fn regret_curve<F: Float>(rewards: &[F], true_best_mean: F) -> Vec<F> {
    rewards
        .iter()
        .scan(F::zero(), |acc, &r| {
            *acc = *acc + (true_best_mean - r);
            Some(*acc)
        })
        .collect()
}
