use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::{to_json_pretty, write_atomic};
use super::phases::{CalibrationPoint, ConstraintSet, CostModelEvaluation, QueryOutcome, StudentEvaluation};
use super::workload::{Template, Workload};
use super::{median, Backend, ConstraintProfile, HarnessError, Method, RunConfig, REPORT_SCHEMA_VERSION};
use crate::bandit::{SearchResult, TerminationReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: Method,
    pub n_queries: usize,
    pub median_latency_ms: f64,
    pub mean_latency_ms: f64,
    /// Relative to the baseline median; 0 for the baseline itself.
    pub latency_reduction_pct: f64,
    /// Percentage of queries whose final plan meets both caps.
    pub csr: f64,
    pub memory_csr: f64,
    pub latency_csr: f64,
    pub memory_violations: usize,
    pub latency_violations: usize,
    /// Plans executed during planning, per query.
    pub plan_executions_mean: f64,
    /// Simulated latency of the plans executed during planning.
    pub planning_sim_ms_mean: f64,
    pub planning_sim_ms_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub queries: usize,
    pub mean_rounds: f64,
    pub mean_executions: f64,
    pub terminations: BTreeMap<TerminationReason, usize>,
    /// Queries whose chosen arm is the teacher-only arm.
    pub chose_teacher_arm: usize,
    pub distinct_arms: usize,
}

impl SearchStats {
    fn of(results: &[SearchResult]) -> Self {
        let n = results.len().max(1) as f64;
        let mut terminations = BTreeMap::new();
        for r in results {
            *terminations.entry(r.termination_reason).or_insert(0) += 1;
        }
        let teacher = super::teacher_config().index();
        let arms: std::collections::BTreeSet<usize> = results.iter().map(|r| r.chosen_arm).collect();
        Self {
            queries: results.len(),
            mean_rounds: results.iter().map(|r| r.rounds as f64).sum::<f64>() / n,
            mean_executions: results.iter().map(|r| r.executions as f64).sum::<f64>() / n,
            terminations,
            chose_teacher_arm: results.iter().filter(|r| r.chosen_arm == teacher).count(),
            distinct_arms: arms.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSummary {
    pub n_queries: usize,
    pub per_schema: BTreeMap<String, usize>,
    pub per_template: BTreeMap<Template, usize>,
}

/// Everything the run measured, minus wall-clock timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub seed: u64,
    pub iterations: usize,
    pub backend: Backend,
    pub profile: ConstraintProfile,
    pub constraints: ConstraintsSummary,
    pub workload: WorkloadSummary,
    pub methods: Vec<MethodMetrics>,
    /// Median latency per schema and method.
    pub per_schema: BTreeMap<String, BTreeMap<Method, f64>>,
    pub bandit: Option<SearchStats>,
    pub bandit_cost: Option<SearchStats>,
    pub cost_model: Option<CostModelEvaluation>,
    pub students: Option<StudentEvaluation>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintsSummary {
    pub factor: f64,
    pub c_mem_bytes: f64,
    pub c_lat_ms: f64,
    pub median_baseline_latency_ms: f64,
    pub median_baseline_memory_bytes: f64,
}

impl MetricsReport {
    pub fn method(&self, m: Method) -> Option<&MethodMetrics> {
        self.methods.iter().find(|x| x.method == m)
    }
}

fn pct(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

fn method_metrics(m: Method, outcomes: &[QueryOutcome], baseline_median: Option<f64>) -> Option<MethodMetrics> {
    let rows: Vec<_> = outcomes.iter().filter_map(|q| q.outcomes.get(&m)).collect();
    if rows.is_empty() {
        return None;
    }
    let n = rows.len();
    let lat: Vec<f64> = rows.iter().map(|o| o.latency_ms).collect();
    let med = median(&lat);
    let mem_bad = rows.iter().filter(|o| !o.memory_ok).count();
    let lat_bad = rows.iter().filter(|o| !o.latency_ok).count();
    Some(MethodMetrics {
        method: m,
        n_queries: n,
        median_latency_ms: med,
        mean_latency_ms: lat.iter().sum::<f64>() / n as f64,
        latency_reduction_pct: match baseline_median {
            Some(b) if b > 0.0 => 100.0 * (b - med) / b,
            _ => 0.0,
        },
        csr: pct(rows.iter().filter(|o| o.feasible()).count(), n),
        memory_csr: pct(n - mem_bad, n),
        latency_csr: pct(n - lat_bad, n),
        memory_violations: mem_bad,
        latency_violations: lat_bad,
        plan_executions_mean: rows.iter().map(|o| o.plan_executions as f64).sum::<f64>() / n as f64,
        planning_sim_ms_mean: rows.iter().map(|o| o.planning_sim_ms).sum::<f64>() / n as f64,
        planning_sim_ms_median: median(&rows.iter().map(|o| o.planning_sim_ms).collect::<Vec<_>>()),
    })
}

/// Aggregates the evaluated outcomes and phase evaluations into the report.
#[allow(clippy::too_many_arguments)]
pub fn compute_metrics(
    cfg: &RunConfig,
    workload: &Workload,
    constraints: &ConstraintSet,
    outcomes: &[QueryOutcome],
    bandit: Option<&[SearchResult]>,
    bandit_cost: Option<&[SearchResult]>,
    cost_model: Option<&CostModelEvaluation>,
    students: Option<&StudentEvaluation>,
) -> MetricsReport {
    let baseline_median = constraints.median_baseline_latency_ms;
    let methods: Vec<MethodMetrics> = Method::ALL
        .into_iter()
        .filter_map(|m| method_metrics(m, outcomes, Some(baseline_median)))
        .collect();

    let mut per_schema: BTreeMap<String, BTreeMap<Method, f64>> = BTreeMap::new();
    for schema in workload.schemas.keys() {
        let subset: Vec<QueryOutcome> = outcomes.iter().filter(|q| &q.schema == schema).cloned().collect();
        let entry = per_schema.entry(schema.clone()).or_default();
        for m in Method::ALL {
            if let Some(mm) = method_metrics(m, &subset, None) {
                entry.insert(m, mm.median_latency_ms);
            }
        }
    }

    let mut ws = WorkloadSummary {
        n_queries: workload.queries.len(),
        per_schema: BTreeMap::new(),
        per_template: BTreeMap::new(),
    };
    for q in &workload.queries {
        *ws.per_schema.entry(q.schema.clone()).or_insert(0) += 1;
        *ws.per_template.entry(q.template).or_insert(0) += 1;
    }

    let c = constraints.constraints;
    MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed: cfg.seed,
        iterations: cfg.iterations,
        backend: cfg.backend,
        profile: cfg.profile,
        constraints: ConstraintsSummary {
            factor: constraints.factor,
            c_mem_bytes: c.c_mem,
            c_lat_ms: c.c_lat,
            median_baseline_latency_ms: constraints.median_baseline_latency_ms,
            median_baseline_memory_bytes: constraints.median_baseline_memory_bytes,
        },
        workload: ws,
        methods,
        per_schema,
        bandit: bandit.map(SearchStats::of),
        bandit_cost: bandit_cost.map(SearchStats::of),
        cost_model: cost_model.cloned(),
        students: students.cloned(),
        notes: vec![
            "baseline and teacher planning cost is 0 plan executions by convention; \
             wall-clock planning time per component is in timing.json"
                .into(),
            "bandit planning executions include the arm-0 run that sets the reward scale".into(),
            "planning_sim_ms sums the simulated latency of every plan run during planning; \
             pruned arms cost nothing"
                .into(),
        ],
    }
}

fn fig3_csv(report: &MetricsReport) -> String {
    let mut out = String::from("schema,method,median_latency_ms\n");
    for (schema, by_method) in &report.per_schema {
        for (m, v) in by_method {
            let _ = writeln!(out, "{schema},{m},{v}");
        }
    }
    out
}

fn fig4_csv(points: &[CalibrationPoint]) -> String {
    let mut out = String::from("query_id,arm,actual_ms,predicted_ms\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.query_id, p.arm, p.actual_ms, p.predicted_ms);
    }
    out
}

fn fig5_csv(report: &MetricsReport) -> String {
    let mut out =
        String::from(
        "method,median_latency_ms,latency_reduction_pct,csr,memory_csr,latency_csr,plan_executions_mean,planning_sim_ms_mean\n",
    );
    for m in &report.methods {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            m.method,
            m.median_latency_ms,
            m.latency_reduction_pct,
            m.csr,
            m.memory_csr,
            m.latency_csr,
            m.plan_executions_mean,
            m.planning_sim_ms_mean
        );
    }
    out
}

/// Writes `report.json` and the three plotting series.
pub fn emit_report(
    report: &MetricsReport,
    calibration: Option<&[CalibrationPoint]>,
    run_dir: &Path,
) -> Result<(), HarnessError> {
    write_atomic(&run_dir.join("report.json"), &to_json_pretty(report))?;
    write_atomic(&run_dir.join("fig3_schemas.csv"), fig3_csv(report).as_bytes())?;
    write_atomic(&run_dir.join("fig4_calibration.csv"), fig4_csv(calibration.unwrap_or_default()).as_bytes())?;
    write_atomic(&run_dir.join("fig5_ablation.csv"), fig5_csv(report).as_bytes())
}
