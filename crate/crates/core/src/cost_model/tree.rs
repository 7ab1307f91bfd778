use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Float;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` tries all.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum Node<F: Float> {
    Leaf {
        value: F,
        samples: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
}

/// Axis-aligned regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RegressionTree<F: Float> {
    pub nodes: Vec<Node<F>>,
}

struct Builder<'a, F: Float> {
    x: &'a [Vec<F>],
    y: &'a [F],
    params: TreeParams,
    n_features: usize,
    nodes: Vec<Node<F>>,
}

fn mean<F: Float>(y: &[F], idx: &[usize]) -> F {
    idx.iter().map(|&i| y[i]).sum::<F>() / F::of(idx.len() as f64)
}

impl<'a, F: Float> Builder<'a, F> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        self.nodes.push(Node::Leaf {
            value: mean(self.y, idx),
            samples: idx.len(),
        });
        self.nodes.len() - 1
    }

    /// Best (feature, threshold, gain) by squared-error reduction. Ties keep
    /// the earliest feature and smallest threshold.
    fn best_split(&self, idx: &[usize], features: &[usize]) -> Option<(usize, F, F)> {
        let leaf = self.params.min_samples_leaf.max(1);
        let n = idx.len();
        let total: F = idx.iter().map(|&i| self.y[i]).sum();
        let nf = F::of(n as f64);
        let mut best: Option<(usize, F, F)> = None;
        let mut order = idx.to_vec();
        for &f in features {
            order.sort_by(|&a, &b| self.x[a][f].partial_cmp(&self.x[b][f]).expect("finite features"));
            let mut left_sum = F::zero();
            for k in 0..n - 1 {
                left_sum = left_sum + self.y[order[k]];
                let nl = k + 1;
                if nl < leaf || n - nl < leaf {
                    continue;
                }
                let (xa, xb) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                if !(xb > xa) {
                    continue;
                }
                // SSE reduction = Σl²/nl + Σr²/nr − Σ²/n
                let right_sum = total - left_sum;
                let (fl, fr) = (F::of(nl as f64), F::of((n - nl) as f64));
                let gain = left_sum * left_sum / fl + right_sum * right_sum / fr - total * total / nf;
                if best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((f, (xa + xb) / F::of(2.0), gain));
                }
            }
        }
        best.filter(|&(_, _, g)| g > F::epsilon() * (F::one() + total.abs()))
    }

    fn grow(&mut self, idx: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let leaf = self.params.min_samples_leaf.max(1);
        if depth >= self.params.max_depth || idx.len() < 2 * leaf {
            return self.leaf(idx);
        }
        let features: Vec<usize> = match self.params.max_features {
            Some(k) if k < self.n_features => {
                let mut f = sample(rng, self.n_features, k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.n_features).collect(),
        };
        let Some((feature, threshold, _)) = self.best_split(idx, &features) else {
            return self.leaf(idx);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: F::zero(),
            samples: 0,
        });
        let left = self.grow(&l, depth + 1, rng);
        let right = self.grow(&r, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

impl<F: Float> RegressionTree<F> {
    /// Grows a tree on rows `idx` of `x`; `idx` may repeat rows.
    pub fn fit(x: &[Vec<F>], y: &[F], idx: &[usize], params: TreeParams, rng: &mut ChaCha8Rng) -> Self {
        assert!(!idx.is_empty(), "tree needs at least one sample");
        let n_features = x[idx[0]].len();
        let mut b = Builder {
            x,
            y,
            params,
            n_features,
            nodes: Vec::new(),
        };
        b.grow(idx, 0, rng);
        RegressionTree { nodes: b.nodes }
    }

    pub fn constant(value: F, samples: usize) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value, samples }],
        }
    }

    pub fn predict(&self, x: &[F]) -> F {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go<F: Float>(t: &RegressionTree<F>, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (F, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value, samples } => Some((*value, *samples)),
            Node::Split { .. } => None,
        })
    }
}
