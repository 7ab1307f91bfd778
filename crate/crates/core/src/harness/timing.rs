//! Wall-clock planning overhead. Numbers here vary between machines and
//! runs, which is why they stay out of the report.

use std::collections::BTreeMap;
use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::phases::{prepare, ConstraintSet, PreparedQuery, QueryOutcome};
use super::workload::Workload;
use super::{median, query_seed, teacher_config, HarnessError, Method};
use crate::bandit::{search, SearchConfig};
use crate::cost_model::{with_flags, ForestModel, LatencyPredictor};
use crate::engine::EngineAdapter;
use crate::student::{measure_speedup, student_predict, BoostedStudent, LinearStudent};
use crate::teacher::apply_plan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTiming {
    pub component: String,
    /// Queries timed; each contributes the median of its repetitions.
    pub n: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub median_ms: f64,
    /// Mean planning time over mean simulated latency of the plans that
    /// component picked, when it picks plans.
    pub overhead_ratio: Option<f64>,
    #[serde(skip)]
    pub per_query_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub reps: usize,
    pub components: Vec<ComponentTiming>,
    /// Median search time over median student time, keyed `<student>/<search>`.
    pub speedups: BTreeMap<String, f64>,
}

impl TimingReport {
    pub fn component(&self, name: &str) -> Option<&ComponentTiming> {
        self.components.iter().find(|c| c.component == name)
    }

    /// The smallest student speedup over any timed search.
    pub fn min_speedup(&self) -> Option<f64> {
        self.speedups.values().copied().reduce(f64::min)
    }
}

fn time_per_query<T>(
    queries: &[PreparedQuery<'_>],
    reps: usize,
    mut f: impl FnMut(&PreparedQuery<'_>) -> Result<T, HarnessError>,
) -> Result<Vec<f64>, HarnessError> {
    let mut out = Vec::with_capacity(queries.len());
    for q in queries {
        // warm-up
        black_box(f(q)?);
        let mut samples = Vec::with_capacity(reps);
        for _ in 0..reps {
            let t = Instant::now();
            black_box(f(q)?);
            samples.push(t.elapsed().as_secs_f64() * 1e3);
        }
        out.push(median(&samples));
    }
    Ok(out)
}

fn summarize(name: &str, per_query: Vec<f64>, executed_mean: Option<f64>) -> ComponentTiming {
    let n = per_query.len();
    let mean = per_query.iter().sum::<f64>() / n.max(1) as f64;
    let var = per_query.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64;
    ComponentTiming {
        component: name.to_string(),
        n,
        mean_ms: mean,
        std_ms: var.sqrt(),
        median_ms: median(&per_query),
        overhead_ratio: executed_mean.filter(|&e| e > 0.0).map(|e| mean / e),
        per_query_ms: per_query,
    }
}

fn executed_mean(outcomes: &[QueryOutcome], m: Method) -> Option<f64> {
    let v: Vec<f64> = outcomes.iter().filter_map(|q| q.outcomes.get(&m)).map(|o| o.latency_ms).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Times each planning component query by query on the calling thread.
/// A full search includes the arm-0 run that sets its reward scale; a
/// student prediction includes featurization.
#[allow(clippy::too_many_arguments)]
pub fn measure_timing(
    workload: &Workload,
    constraints: &ConstraintSet,
    executor: &dyn EngineAdapter,
    cfg: &SearchConfig,
    model: Option<&ForestModel<f64>>,
    students: Option<(&LinearStudent<f64>, &BoostedStudent<f64>)>,
    outcomes: &[QueryOutcome],
    reps: usize,
) -> Result<TimingReport, HarnessError> {
    let queries = prepare(workload)?;
    let c = constraints.constraints;
    let teacher = teacher_config();
    let mut components = Vec::new();

    let t = time_per_query(&queries, reps, |q| Ok(apply_plan(&q.ir, teacher, q.schema, &cfg.teacher)))?;
    components.push(summarize("teacher_rewrite", t, executed_mean(outcomes, Method::Teacher)));
    let t = time_per_query(&queries, reps, |q| Ok(q.features(&c)))?;
    components.push(summarize("featurize", t, None));

    let full_search = |q: &PreparedQuery<'_>, predictor: Option<&dyn LatencyPredictor>| {
        let seed = query_seed(cfg.seed, q.query_id);
        let ctx = q.context(c);
        let base = ctx.measure_baseline(executor, &cfg.teacher, seed)?.measurement();
        Ok(search(&ctx, executor, base.latency_ms, &cfg.with_seed(seed), predictor)?)
    };
    let mut searches = Vec::new();
    if outcomes.iter().any(|q| q.outcomes.contains_key(&Method::Bandit)) {
        let t = time_per_query(&queries, reps, |q| full_search(q, None))?;
        searches.push(("bandit", t.clone()));
        components.push(summarize("bandit_search", t, executed_mean(outcomes, Method::Bandit)));
    }
    if let Some(model) = model {
        let t = time_per_query(&queries, reps, |q| {
            let fv = with_flags(teacher, &q.features(&c));
            Ok(model.predict(&fv)?)
        })?;
        components.push(summarize("cost_model_inference", t, None));
        let t = time_per_query(&queries, reps, |q| full_search(q, Some(model)))?;
        searches.push(("bandit+cost", t.clone()));
        components.push(summarize("bandit_cost_search", t, executed_mean(outcomes, Method::BanditCost)));
    }

    let mut speedups = BTreeMap::new();
    if let Some((lr, gb)) = students {
        let t_lr = time_per_query(&queries, reps, |q| Ok(student_predict(lr, &q.features(&c))?))?;
        let t_gb = time_per_query(&queries, reps, |q| Ok(student_predict(gb, &q.features(&c))?))?;
        for (name, t) in [("student-lr", &t_lr), ("student-gb", &t_gb)] {
            for (search_name, s) in &searches {
                speedups.insert(format!("{name}/{search_name}"), measure_speedup(s, t));
            }
        }
        components.push(summarize("student_lr", t_lr, executed_mean(outcomes, Method::StudentLr)));
        components.push(summarize("student_gb", t_gb, executed_mean(outcomes, Method::StudentGb)));
    }

    Ok(TimingReport {
        reps,
        components,
        speedups,
    })
}
