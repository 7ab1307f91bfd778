use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sqlbandit::bandit::SearchConfig;
use sqlbandit::engine::{
    EngineAdapter, EngineError, ExecutionOutcome, ExecutionRequest, ExecutionTrace, SimulatorAdapter,
};
use sqlbandit::harness::phases::{Phase3Config, Phase4Config};
use sqlbandit::harness::{
    generate_workload, load_report, run_phase1, run_phase2, run_phase3, run_phase4, run_pipeline, run_pipeline_with,
    Backend, ConstraintProfile, HarnessError, Method, RunConfig, Workload, WorkloadProfile,
};

fn small_profile(n: usize) -> WorkloadProfile {
    WorkloadProfile {
        n_queries: n,
        ..WorkloadProfile::default()
    }
}

fn empty_workload() -> Workload {
    let mut w = generate_workload(&small_profile(1), 1).unwrap();
    w.queries.clear();
    w
}

struct Failing;

impl EngineAdapter for Failing {
    fn name(&self) -> &str {
        "failing"
    }

    fn execute(&self, request: &ExecutionRequest<'_>) -> Result<ExecutionOutcome, EngineError> {
        Err(EngineError::Execution {
            query_id: request.query_id.to_string(),
            message: "backend unavailable".into(),
        })
    }
}

#[test]
fn empty_workload_phase1_succeeds_later_phases_refuse() {
    let dir = tempfile::tempdir().unwrap();
    let w = empty_workload();
    let p1 = run_phase1(&w, dir.path()).unwrap();
    assert!(p1.queries.is_empty());
    assert_eq!(fs::read_to_string(dir.path().join("phase1/queries.jsonl")).unwrap(), "");

    let exec = SimulatorAdapter::default();
    let e = run_phase2(&w, ConstraintProfile::Default, &exec, &SearchConfig::default(), dir.path()).unwrap_err();
    assert!(matches!(e, HarnessError::EmptyWorkload { .. }), "{e}");

    let c = sqlbandit::engine::Constraints::new(1.0, 1.0).unwrap();
    let p3 = Phase3Config {
        forest: Default::default(),
        cv_depth: false,
        split_seed: 0,
        seed: 0,
    };
    let e = run_phase3(&w, &c, &ExecutionTrace::default(), &p3, dir.path()).unwrap_err();
    assert!(matches!(e, HarnessError::EmptyWorkload { .. }), "{e}");

    let p4 = Phase4Config {
        linear: Default::default(),
        boosted: Default::default(),
        split_seed: 0,
        seed: 0,
    };
    let e = run_phase4(&w, &c, &[], &p4, dir.path()).unwrap_err();
    assert!(matches!(e, HarnessError::EmptyWorkload { .. }), "{e}");
    for phase in ["phase2", "phase3", "phase4"] {
        assert!(!dir.path().join(phase).exists(), "{phase}");
    }
}

#[test]
fn failed_phase_leaves_earlier_outputs_intact() {
    let dir = tempfile::tempdir().unwrap();
    let w = generate_workload(&small_profile(10), 3).unwrap();
    run_phase1(&w, dir.path()).unwrap();
    let before = fs::read(dir.path().join("phase1/queries.jsonl")).unwrap();

    let e = run_phase2(&w, ConstraintProfile::Default, &Failing, &SearchConfig::default(), dir.path()).unwrap_err();
    assert!(matches!(e, HarnessError::Engine(EngineError::Execution { .. })), "{e}");
    assert_eq!(fs::read(dir.path().join("phase1/queries.jsonl")).unwrap(), before);
    assert!(!dir.path().join("phase2").exists());
    assert!(!dir.path().join(".phase2.tmp").exists());
}

#[test]
fn rerun_of_a_phase_replaces_its_directory() {
    let dir = tempfile::tempdir().unwrap();
    let w = generate_workload(&small_profile(10), 3).unwrap();
    run_phase1(&w, dir.path()).unwrap();
    fs::write(dir.path().join("phase1/stale.txt"), "x").unwrap();
    run_phase1(&w, dir.path()).unwrap();
    assert!(!dir.path().join("phase1/stale.txt").exists());
}

#[test]
fn baseline_only_ablation_skips_learning_phases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        methods: vec![Method::Baseline, Method::Teacher],
        workload: small_profile(20),
        ..RunConfig::default()
    };
    let art = run_pipeline(&cfg, dir.path()).unwrap();
    assert!(art.phase2.is_none() && art.phase3.is_none() && art.phase4.is_none());
    for phase in ["phase2", "phase3", "phase4"] {
        assert!(!dir.path().join(phase).exists());
    }
    let methods: Vec<Method> = art.report.methods.iter().map(|m| m.method).collect();
    assert_eq!(methods, vec![Method::Baseline, Method::Teacher]);
    assert!(art.report.cost_model.is_none());
}

#[test]
fn iteration_budget_below_arm_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        iterations: 10,
        ..RunConfig::default()
    };
    assert!(matches!(run_pipeline(&cfg, dir.path()), Err(HarnessError::InvalidConfig(_))));
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn backends_agree_on_every_metric() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let base = RunConfig {
        workload: small_profile(60),
        ..RunConfig::default()
    };
    let sim = run_pipeline(&base, a.path()).unwrap();
    let adapter = run_pipeline(
        &RunConfig {
            backend: Backend::Adapter,
            ..base.clone()
        },
        b.path(),
    )
    .unwrap();
    let mut r = adapter.report.clone();
    r.backend = Backend::Sim;
    assert_eq!(r, sim.report);
    let (fa, fb) = (files(a.path()), files(b.path()));
    for (name, bytes) in &fa {
        if !["report.json", "config.json", "timing.json"].contains(&name.as_str()) {
            assert_eq!(Some(bytes), fb.get(name), "{name}");
        }
    }
}

#[test]
fn ladders_hold_on_the_default_workload() {
    let dir = tempfile::tempdir().unwrap();
    let art = run_pipeline(&RunConfig::default(), dir.path()).unwrap();
    let r = &art.report;
    let m = |k| r.method(k).unwrap();
    let (b, t, k, c) = (m(Method::Baseline), m(Method::Teacher), m(Method::Bandit), m(Method::BanditCost));
    assert!(b.median_latency_ms > t.median_latency_ms && t.median_latency_ms > k.median_latency_ms);
    // the cost model saves planning work without giving up plan quality
    assert!(c.planning_sim_ms_mean < k.planning_sim_ms_mean);
    assert!(c.plan_executions_mean < k.plan_executions_mean);
    assert!(c.median_latency_ms <= 1.05 * k.median_latency_ms);
    assert!(b.csr <= t.csr && t.csr <= k.csr && k.csr <= c.csr);
    for x in &r.methods {
        assert!(x.csr <= x.memory_csr && x.csr <= x.latency_csr);
    }
}

#[test]
fn report_round_trips_through_the_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        workload: small_profile(30),
        ..RunConfig::default()
    };
    let art = run_pipeline(&cfg, dir.path()).unwrap();
    assert_eq!(load_report(dir.path()).unwrap(), art.report);
    let csv = fs::read_to_string(dir.path().join("fig5_ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + Method::ALL.len());
    let cal = fs::read_to_string(dir.path().join("fig4_calibration.csv")).unwrap();
    assert_eq!(cal.lines().count(), 1 + art.phase3.unwrap().calibration.len());
}

#[test]
fn missing_report_is_a_named_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_report(dir.path()), Err(HarnessError::MissingArtifact(_))));
}

#[test]
fn supplied_workload_is_used_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let w = generate_workload(&small_profile(25), 9).unwrap();
    let cfg = RunConfig {
        methods: vec![Method::Baseline],
        ..RunConfig::default()
    };
    let art = run_pipeline_with(&cfg, &w, &SimulatorAdapter::default(), dir.path()).unwrap();
    assert_eq!(art.report.workload.n_queries, 25);
    assert_eq!(art.outcomes.len(), 25);
}

/// The report of a small seeded run is pinned; set `UPDATE_GOLDEN=1` to
/// rewrite it after an intended change.
#[test]
fn small_run_report_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        workload: small_profile(60),
        iterations: 64,
        ..RunConfig::default()
    };
    run_pipeline(&cfg, dir.path()).unwrap();
    let got = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report_small.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(golden.parent().unwrap()).unwrap();
        fs::write(&golden, &got).unwrap();
    }
    let want = fs::read_to_string(&golden).expect("golden report present");
    assert_eq!(got, want);
}
