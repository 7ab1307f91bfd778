use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{io_err, read_json, read_jsonl, to_json_pretty, to_jsonl, write_atomic, PhaseDir};
use super::metrics::{compute_metrics, emit_report};
use super::timing::measure_timing;
use super::workload::{Template, Workload};
use super::{
    is_held_out, median, query_seed, teacher_config, Backend, ConstraintProfile, HarnessError, Method, RunConfig,
};
use crate::bandit::{search, QueryContext, SearchConfig, SearchResult};
use crate::cost_model::{
    cross_validate_depth, evaluate_predictions, query_features, train_forest, with_flags, DepthSearch, ForestModel,
    LatencyPredictor, QUERY_FEATURE_DIM,
};
use crate::engine::{
    Constraints, EngineAdapter, ExecutionTrace, Measurement, ResourceSnapshot, Serialized, SimulatorAdapter,
    TraceRecord,
};
use crate::ir::{parse_sql, ComplexityMetrics, QueryIR, SchemaModel};
use crate::student::{
    student_predict, train_boosted, train_linear, BoostedStudent, DistillationSet, LinearStudent, Student,
};
use crate::teacher::{apply_plan, PlanConfig, TeacherConfig, ARM_COUNT};

/// A workload query parsed against its schema.
#[derive(Debug, Clone)]
pub struct PreparedQuery<'w> {
    pub query_id: &'w str,
    pub schema_name: &'w str,
    pub template: Template,
    pub schema: &'w SchemaModel,
    pub ir: QueryIR,
    pub resources: ResourceSnapshot,
}

impl<'w> PreparedQuery<'w> {
    pub fn context(&self, constraints: Constraints) -> QueryContext<'_> {
        QueryContext {
            query_id: self.query_id,
            ir: &self.ir,
            schema: self.schema,
            constraints,
            resources: self.resources,
        }
    }

    pub fn features(&self, constraints: &Constraints) -> [f64; QUERY_FEATURE_DIM] {
        query_features(&self.ir, self.schema, &self.resources, constraints)
    }
}

pub fn prepare(workload: &Workload) -> Result<Vec<PreparedQuery<'_>>, HarnessError> {
    workload
        .queries
        .iter()
        .map(|q| {
            let schema = workload.schema_of(q)?;
            let ir = parse_sql(&q.sql, schema).map_err(|source| HarnessError::Parse {
                query_id: q.query_id.clone(),
                source,
            })?;
            Ok(PreparedQuery {
                query_id: &q.query_id,
                schema_name: &q.schema,
                template: q.template,
                schema,
                ir,
                resources: q.resources,
            })
        })
        .collect()
}

pub fn make_executor(backend: Backend) -> Box<dyn EngineAdapter> {
    match backend {
        Backend::Sim => Box::new(SimulatorAdapter::default()),
        Backend::Adapter => Box::new(Serialized::new(SimulatorAdapter::default())),
    }
}

// ---------------------------------------------------------------- phase 1

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryInfo {
    pub query_id: String,
    pub schema: String,
    pub template: Template,
    pub template_id: String,
    pub complexity: ComplexityMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase1Output {
    pub schemas: BTreeMap<String, SchemaModel>,
    pub queries: Vec<QueryInfo>,
}

/// Schema summaries and per-query complexity. An empty workload is valid here.
pub fn run_phase1(workload: &Workload, run_dir: &Path) -> Result<Phase1Output, HarnessError> {
    let dir = PhaseDir::create(run_dir, "phase1")?;
    let prepared = prepare(workload)?;
    let queries: Vec<QueryInfo> = prepared
        .iter()
        .zip(&workload.queries)
        .map(|(p, q)| QueryInfo {
            query_id: q.query_id.clone(),
            schema: q.schema.clone(),
            template: q.template,
            template_id: q.template_id.clone(),
            complexity: p.ir.complexity(),
        })
        .collect();
    for (name, schema) in &workload.schemas {
        let mut bytes = Vec::new();
        schema.write_jsonl(&mut bytes).expect("in-memory write");
        dir.write(&format!("schema_{name}.jsonl"), &bytes)?;
    }
    dir.write("queries.jsonl", &to_jsonl(&queries))?;
    dir.commit()?;
    Ok(Phase1Output {
        schemas: workload.schemas.clone(),
        queries,
    })
}

// ---------------------------------------------------------------- phase 2

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub query_id: String,
    pub latency_ms: f64,
    pub memory_bytes: f64,
}

/// Workload-wide caps and the arm-0 measurements they were derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub profile: ConstraintProfile,
    pub factor: f64,
    pub median_baseline_latency_ms: f64,
    pub median_baseline_memory_bytes: f64,
    pub constraints: Constraints,
    pub baselines: Vec<BaselineRecord>,
}

impl ConstraintSet {
    pub fn baseline_of(&self) -> BTreeMap<&str, &BaselineRecord> {
        self.baselines.iter().map(|b| (b.query_id.as_str(), b)).collect()
    }
}

/// Runs arm 0 of every query and scales the median latency and memory.
pub fn derive_constraints(
    queries: &[PreparedQuery<'_>],
    executor: &dyn EngineAdapter,
    profile: ConstraintProfile,
    run_seed: u64,
    teacher: &TeacherConfig,
) -> Result<ConstraintSet, HarnessError> {
    // caps are not known yet; classification is redone once they are
    let open = Constraints::new(f64::MAX, f64::MAX)?;
    let baselines = queries
        .par_iter()
        .map(|q| {
            let m = q
                .context(open)
                .measure_baseline(executor, teacher, query_seed(run_seed, q.query_id))?
                .measurement();
            Ok(BaselineRecord {
                query_id: q.query_id.to_string(),
                latency_ms: m.latency_ms,
                memory_bytes: m.memory_bytes,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let lat: Vec<f64> = baselines.iter().map(|b| b.latency_ms).collect();
    let mem: Vec<f64> = baselines.iter().map(|b| b.memory_bytes).collect();
    let (ml, mm) = (median(&lat), median(&mem));
    let f = profile.factor();
    let constraints = Constraints::new(f * mm, f * ml).map_err(|e| {
        HarnessError::InvalidWorkload(format!("cannot derive caps from baseline medians: {e}"))
    })?;
    Ok(ConstraintSet {
        profile,
        factor: f,
        median_baseline_latency_ms: ml,
        median_baseline_memory_bytes: mm,
        constraints,
        baselines,
    })
}

/// One search per query, in parallel; results keep workload order.
pub fn explore(
    queries: &[PreparedQuery<'_>],
    constraints: &ConstraintSet,
    executor: &dyn EngineAdapter,
    cfg: &SearchConfig,
    predictor: Option<&dyn LatencyPredictor>,
) -> Result<Vec<SearchResult>, HarnessError> {
    let baselines = constraints.baseline_of();
    queries
        .par_iter()
        .map(|q| {
            let base = baselines
                .get(q.query_id)
                .ok_or_else(|| HarnessError::InvalidWorkload(format!("no baseline for `{}`", q.query_id)))?;
            let ctx = q.context(constraints.constraints);
            let qcfg = cfg.with_seed(query_seed(cfg.seed, q.query_id));
            Ok(search(&ctx, executor, base.latency_ms, &qcfg, predictor)?)
        })
        .collect()
}

pub(crate) fn search_config(cfg: &RunConfig) -> SearchConfig {
    SearchConfig {
        max_iterations: cfg.iterations,
        seed: cfg.seed,
        ..SearchConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct Phase2Output {
    pub constraints: ConstraintSet,
    pub results: Vec<SearchResult>,
    pub traces: ExecutionTrace,
}

/// Derives the caps, then runs the teacher-bandit search on every query.
pub fn run_phase2(
    workload: &Workload,
    profile: ConstraintProfile,
    executor: &dyn EngineAdapter,
    cfg: &SearchConfig,
    run_dir: &Path,
) -> Result<Phase2Output, HarnessError> {
    if workload.queries.is_empty() {
        return Err(HarnessError::EmptyWorkload { phase: "phase 2" });
    }
    let dir = PhaseDir::create(run_dir, "phase2")?;
    let queries = prepare(workload)?;
    let constraints = derive_constraints(&queries, executor, profile, cfg.seed, &cfg.teacher)?;
    let results = explore(&queries, &constraints, executor, cfg, None)?;
    let mut traces = ExecutionTrace::default();
    for r in &results {
        traces.records.extend(r.trace_records(query_seed(cfg.seed, &r.query_id)));
    }
    dir.write("constraints.json", &to_json_pretty(&constraints))?;
    dir.write("search.jsonl", &to_jsonl(&results))?;
    dir.write("traces.jsonl", &to_jsonl(&traces.records))?;
    dir.commit()?;
    Ok(Phase2Output {
        constraints,
        results,
        traces,
    })
}

// ---------------------------------------------------------------- phase 3

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub query_id: String,
    pub arm: usize,
    pub actual_ms: f64,
    pub predicted_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModelEvaluation {
    /// Distinct (query, arm) traces.
    pub n_traces: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub mae_ms: f64,
    pub r_squared: Option<f64>,
    /// Median latency of the held-out traces.
    pub median_latency_ms: f64,
    /// MAE over that median.
    pub mae_ratio: f64,
    pub max_depth: usize,
    pub depth_search: Option<DepthSearch>,
}

#[derive(Debug, Clone)]
pub struct Phase3Output {
    pub model: ForestModel<f64>,
    pub evaluation: CostModelEvaluation,
    pub calibration: Vec<CalibrationPoint>,
}

pub struct Phase3Config {
    pub forest: crate::cost_model::ForestParams,
    pub cv_depth: bool,
    pub split_seed: u64,
    pub seed: u64,
}

/// Fits the forest on the training queries' traces and scores it on the
/// held-out queries'. Repeated pulls of one arm are the same measurement,
/// so traces are deduplicated by (query, arm).
pub fn run_phase3(
    workload: &Workload,
    constraints: &Constraints,
    traces: &ExecutionTrace,
    cfg: &Phase3Config,
    run_dir: &Path,
) -> Result<Phase3Output, HarnessError> {
    if workload.queries.is_empty() || traces.records.is_empty() {
        return Err(HarnessError::EmptyWorkload { phase: "phase 3" });
    }
    let dir = PhaseDir::create(run_dir, "phase3")?;
    let queries = prepare(workload)?;
    let features: BTreeMap<&str, [f64; QUERY_FEATURE_DIM]> =
        queries.iter().map(|q| (q.query_id, q.features(constraints))).collect();

    let mut seen = BTreeSet::new();
    let unique: Vec<&TraceRecord> = traces
        .records
        .iter()
        .filter(|r| seen.insert((r.query_id.as_str(), r.arm)))
        .collect();
    let (mut train_x, mut train_y, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for r in &unique {
        let q = features
            .get(r.query_id.as_str())
            .ok_or_else(|| HarnessError::InvalidWorkload(format!("trace for unknown query `{}`", r.query_id)))?;
        let config = PlanConfig::from_index(r.arm)
            .ok_or_else(|| HarnessError::InvalidWorkload(format!("arm {} out of range", r.arm)))?;
        let fv = with_flags(config, q).to_vec();
        if is_held_out(&r.query_id, cfg.split_seed) {
            test.push((*r, fv));
        } else {
            train_x.push(fv);
            train_y.push(r.latency_ms);
        }
    }
    if test.is_empty() {
        return Err(HarnessError::EmptyWorkload { phase: "phase 3 held-out split" });
    }

    let (params, depth_search) = if cfg.cv_depth {
        let cv = cross_validate_depth(&train_x, &train_y, cfg.forest, &[4, 8, 16], 5, cfg.seed)?;
        (
            crate::cost_model::ForestParams {
                max_depth: cv.best_depth,
                ..cfg.forest
            },
            Some(cv),
        )
    } else {
        (cfg.forest, None)
    };
    let model = train_forest(&train_x, &train_y, params, cfg.seed)?;
    let calibration = test
        .iter()
        .map(|(r, fv)| {
            Ok(CalibrationPoint {
                query_id: r.query_id.clone(),
                arm: r.arm,
                actual_ms: r.latency_ms,
                predicted_ms: model.predict(fv)?,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let predicted: Vec<f64> = calibration.iter().map(|c| c.predicted_ms).collect();
    let actual: Vec<f64> = calibration.iter().map(|c| c.actual_ms).collect();
    let ev = evaluate_predictions(&predicted, &actual)?;
    let med = median(&actual);
    let evaluation = CostModelEvaluation {
        n_traces: unique.len(),
        n_train: train_y.len(),
        n_test: actual.len(),
        mae_ms: ev.mae_ms,
        r_squared: ev.r_squared,
        median_latency_ms: med,
        mae_ratio: if med > 0.0 { ev.mae_ms / med } else { f64::INFINITY },
        max_depth: params.max_depth,
        depth_search,
    };
    dir.write("cost_model.json", model.to_json().as_bytes())?;
    dir.write("evaluation.json", &to_json_pretty(&evaluation))?;
    dir.commit()?;
    Ok(Phase3Output {
        model,
        evaluation,
        calibration,
    })
}

// ---------------------------------------------------------------- phase 4

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentEvaluation {
    pub n_train: usize,
    pub n_test: usize,
    /// Distinct labels in the training split.
    pub n_labels: usize,
    pub linear_train_accuracy: f64,
    pub linear_test_accuracy: f64,
    pub boosted_train_accuracy: f64,
    pub boosted_test_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct Phase4Output {
    pub linear: LinearStudent<f64>,
    pub boosted: BoostedStudent<f64>,
    pub evaluation: StudentEvaluation,
}

pub struct Phase4Config {
    pub linear: crate::student::LinearHyper,
    pub boosted: crate::student::BoostedHyper,
    pub split_seed: u64,
    pub seed: u64,
}

/// Distils the search's chosen arms into both students; accuracy is top-1
/// agreement on the held-out queries.
pub fn run_phase4(
    workload: &Workload,
    constraints: &Constraints,
    results: &[SearchResult],
    cfg: &Phase4Config,
    run_dir: &Path,
) -> Result<Phase4Output, HarnessError> {
    if workload.queries.is_empty() || results.is_empty() {
        return Err(HarnessError::EmptyWorkload { phase: "phase 4" });
    }
    let dir = PhaseDir::create(run_dir, "phase4")?;
    let queries = prepare(workload)?;
    let chosen: BTreeMap<String, usize> = results.iter().map(|r| (r.query_id.clone(), r.chosen_arm)).collect();
    let feats: Vec<(String, [f64; QUERY_FEATURE_DIM])> = queries
        .iter()
        .map(|q| (q.query_id.to_string(), q.features(constraints)))
        .collect();
    let set = DistillationSet::build(&chosen, &feats)?;
    let train = set.filter(|e| !is_held_out(&e.query_id, cfg.split_seed));
    let test = set.filter(|e| is_held_out(&e.query_id, cfg.split_seed));
    if train.is_empty() || test.is_empty() {
        return Err(HarnessError::EmptyWorkload { phase: "phase 4 split" });
    }
    let (x, y) = (train.matrix::<f64>(), train.labels());
    let (tx, ty) = (test.matrix::<f64>(), test.labels());
    let (linear, boosted) = rayon::join(
        || train_linear(&x, &y, ARM_COUNT, cfg.linear, cfg.seed),
        || train_boosted(&x, &y, ARM_COUNT, cfg.boosted, cfg.seed),
    );
    let (linear, boosted) = (linear?, boosted?);
    let evaluation = StudentEvaluation {
        n_train: y.len(),
        n_test: ty.len(),
        n_labels: y.iter().collect::<BTreeSet<_>>().len(),
        linear_train_accuracy: linear.accuracy(&x, &y)?,
        linear_test_accuracy: linear.accuracy(&tx, &ty)?,
        boosted_train_accuracy: boosted.accuracy(&x, &y)?,
        boosted_test_accuracy: boosted.accuracy(&tx, &ty)?,
    };
    dir.write("student_lr.json", linear.to_json().as_bytes())?;
    dir.write("student_gb.json", boosted.to_json().as_bytes())?;
    dir.write("evaluation.json", &to_json_pretty(&evaluation))?;
    dir.commit()?;
    Ok(Phase4Output {
        linear,
        boosted,
        evaluation,
    })
}

// ---------------------------------------------------------------- evaluation

/// Final plan of one method on one query, executed once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub arm: usize,
    pub latency_ms: f64,
    pub memory_bytes: f64,
    pub memory_ok: bool,
    pub latency_ok: bool,
    /// Plans executed while planning.
    pub plan_executions: u64,
    /// Simulated latency of those plans: what planning would cost on an
    /// engine where trying a plan means running it.
    pub planning_sim_ms: f64,
}

impl MethodOutcome {
    pub fn feasible(&self) -> bool {
        self.memory_ok && self.latency_ok
    }
}

/// Every evaluated method's outcome on one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query_id: String,
    pub schema: String,
    pub template: Template,
    pub outcomes: BTreeMap<Method, MethodOutcome>,
}

fn execute_arm(
    q: &PreparedQuery<'_>,
    arm: usize,
    constraints: &Constraints,
    executor: &dyn EngineAdapter,
    seed: u64,
    teacher: &TeacherConfig,
    (plan_executions, planning_sim_ms): (u64, f64),
) -> Result<MethodOutcome, HarnessError> {
    let config = PlanConfig::from_index(arm).expect("arm in range");
    let plan = apply_plan(&q.ir, config, q.schema, teacher);
    let m: Measurement = q.context(*constraints).execute(executor, &plan, seed)?.measurement();
    Ok(MethodOutcome {
        arm,
        latency_ms: m.latency_ms,
        memory_bytes: m.memory_bytes,
        memory_ok: constraints.memory_ok(m.memory_bytes),
        latency_ok: constraints.latency_ok(m.latency_ms),
        plan_executions,
        planning_sim_ms,
    })
}

pub struct EvaluationInputs<'a> {
    pub constraints: &'a ConstraintSet,
    pub bandit: Option<&'a [SearchResult]>,
    pub bandit_cost: Option<&'a [SearchResult]>,
    pub students: Option<(&'a LinearStudent<f64>, &'a BoostedStudent<f64>)>,
}

/// Executes each requested method's final plan on every query.
pub fn evaluate_methods(
    workload: &Workload,
    methods: &[Method],
    inputs: &EvaluationInputs<'_>,
    executor: &dyn EngineAdapter,
    run_seed: u64,
    teacher: &TeacherConfig,
) -> Result<Vec<QueryOutcome>, HarnessError> {
    let queries = prepare(workload)?;
    let c = inputs.constraints.constraints;
    let index = |rs: Option<&'_ [SearchResult]>| -> BTreeMap<String, SearchResult> {
        rs.unwrap_or_default().iter().map(|r| (r.query_id.clone(), r.clone())).collect()
    };
    let (bandit, bandit_cost) = (index(inputs.bandit), index(inputs.bandit_cost));
    queries
        .par_iter()
        .map(|q| {
            let seed = query_seed(run_seed, q.query_id);
            let mut outcomes = BTreeMap::new();
            for &m in methods {
                let (arm, planning) = match m {
                    Method::Baseline => (0, (0, 0.0)),
                    Method::Teacher => (teacher_config().index(), (0, 0.0)),
                    Method::Bandit | Method::BanditCost => {
                        let table = if m == Method::Bandit { &bandit } else { &bandit_cost };
                        let r = table
                            .get(q.query_id)
                            .ok_or_else(|| HarnessError::InvalidWorkload(format!("no {m} result for `{}`", q.query_id)))?;
                        // the arm-0 run that sets the reward scale counts too
                        let explored: f64 = r.trace.iter().filter(|e| !e.pruned).map(|e| e.latency_ms).sum();
                        (r.chosen_arm, (r.executions + 1, r.baseline_latency_ms + explored))
                    }
                    Method::StudentLr | Method::StudentGb => {
                        let (lr, gb) = inputs
                            .students
                            .ok_or_else(|| HarnessError::InvalidConfig(format!("{m} needs trained students")))?;
                        let f = q.features(&c);
                        let arm = if m == Method::StudentLr {
                            student_predict(lr, &f)?.0
                        } else {
                            student_predict(gb, &f)?.0
                        };
                        (arm, (0, 0.0))
                    }
                };
                outcomes.insert(m, execute_arm(q, arm, &c, executor, seed, teacher, planning)?);
            }
            Ok(QueryOutcome {
                query_id: q.query_id.to_string(),
                schema: q.schema_name.to_string(),
                template: q.template,
                outcomes,
            })
        })
        .collect()
}

// ---------------------------------------------------------------- pipeline

/// In-memory results of a full run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub phase1: Phase1Output,
    pub phase2: Option<Phase2Output>,
    pub phase3: Option<Phase3Output>,
    pub phase4: Option<Phase4Output>,
    pub bandit_cost: Option<Vec<SearchResult>>,
    pub outcomes: Vec<QueryOutcome>,
    pub report: super::MetricsReport,
    pub timing: super::TimingReport,
}

/// Generates the workload and runs every phase `cfg` needs, writing the run
/// directory as it goes.
pub fn run_pipeline(cfg: &RunConfig, run_dir: &Path) -> Result<RunArtifacts, HarnessError> {
    let workload = super::generate_workload(&cfg.workload, cfg.seed)?;
    let executor = make_executor(cfg.backend);
    run_pipeline_with(cfg, &workload, executor.as_ref(), run_dir)
}

pub fn run_pipeline_with(
    cfg: &RunConfig,
    workload: &Workload,
    executor: &dyn EngineAdapter,
    run_dir: &Path,
) -> Result<RunArtifacts, HarnessError> {
    cfg.validate()?;
    std::fs::create_dir_all(run_dir).map_err(io_err(run_dir))?;
    write_atomic(&run_dir.join("config.json"), &to_json_pretty(cfg))?;
    write_atomic(&run_dir.join("workload.json"), &to_json_pretty(workload))?;
    let scfg = search_config(cfg);

    let phase1 = run_phase1(workload, run_dir)?;
    let phase2 = if cfg.needs_search() {
        Some(run_phase2(workload, cfg.profile, executor, &scfg, run_dir)?)
    } else {
        None
    };
    let constraints = match &phase2 {
        Some(p) => p.constraints.clone(),
        None => {
            if workload.queries.is_empty() {
                return Err(HarnessError::EmptyWorkload { phase: "evaluation" });
            }
            let queries = prepare(workload)?;
            derive_constraints(&queries, executor, cfg.profile, cfg.seed, &scfg.teacher)?
        }
    };
    let caps = constraints.constraints;

    let phase3 = match (&phase2, cfg.needs_cost_model()) {
        (Some(p2), true) => Some(run_phase3(
            workload,
            &caps,
            &p2.traces,
            &Phase3Config {
                forest: cfg.forest,
                cv_depth: cfg.cv_depth,
                split_seed: cfg.seed,
                seed: cfg.seed.wrapping_add(3),
            },
            run_dir,
        )?),
        _ => None,
    };
    let phase4 = match (&phase2, cfg.needs_students()) {
        (Some(p2), true) => Some(run_phase4(
            workload,
            &caps,
            &p2.results,
            &Phase4Config {
                linear: cfg.linear,
                boosted: cfg.boosted,
                split_seed: cfg.seed,
                seed: cfg.seed.wrapping_add(4),
            },
            run_dir,
        )?),
        _ => None,
    };

    // evaluation
    let dir = PhaseDir::create(run_dir, "eval")?;
    let bandit_cost = match &phase3 {
        Some(p3) => {
            let queries = prepare(workload)?;
            Some(explore(&queries, &constraints, executor, &scfg, Some(&p3.model))?)
        }
        None => None,
    };
    let methods: Vec<Method> = Method::ALL.into_iter().filter(|m| cfg.wants(*m)).collect();
    let inputs = EvaluationInputs {
        constraints: &constraints,
        bandit: phase2.as_ref().map(|p| p.results.as_slice()),
        bandit_cost: bandit_cost.as_deref(),
        students: phase4.as_ref().map(|p| (&p.linear, &p.boosted)),
    };
    let outcomes = evaluate_methods(workload, &methods, &inputs, executor, cfg.seed, &scfg.teacher)?;
    if let Some(bc) = &bandit_cost {
        dir.write("search_cost.jsonl", &to_jsonl(bc))?;
    }
    dir.write("outcomes.jsonl", &to_jsonl(&outcomes))?;
    dir.commit()?;

    let report = compute_metrics(
        cfg,
        workload,
        &constraints,
        &outcomes,
        phase2.as_ref().map(|p| p.results.as_slice()),
        bandit_cost.as_deref(),
        phase3.as_ref().map(|p| &p.evaluation),
        phase4.as_ref().map(|p| &p.evaluation),
    );
    emit_report(&report, phase3.as_ref().map(|p| p.calibration.as_slice()), run_dir)?;

    let timing = measure_timing(
        workload,
        &constraints,
        executor,
        &scfg,
        phase3.as_ref().map(|p| &p.model),
        phase4.as_ref().map(|p| (&p.linear, &p.boosted)),
        &outcomes,
        cfg.timing_reps,
    )?;
    write_atomic(&run_dir.join("timing.json"), &to_json_pretty(&timing))?;

    Ok(RunArtifacts {
        phase1,
        phase2,
        phase3,
        phase4,
        bandit_cost,
        outcomes,
        report,
        timing,
    })
}

/// Reads a finished run's report.
pub fn load_report(run_dir: &Path) -> Result<super::MetricsReport, HarnessError> {
    read_json(&run_dir.join("report.json"))
}

pub fn load_timing(run_dir: &Path) -> Result<super::TimingReport, HarnessError> {
    read_json(&run_dir.join("timing.json"))
}

pub fn load_outcomes(run_dir: &Path) -> Result<Vec<QueryOutcome>, HarnessError> {
    read_jsonl(&run_dir.join("eval").join("outcomes.jsonl"))
}

pub fn load_config(run_dir: &Path) -> Result<RunConfig, HarnessError> {
    read_json(&run_dir.join("config.json"))
}
