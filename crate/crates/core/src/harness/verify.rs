//! The acceptance suite: one check per criterion, each reporting pass or
//! fail with the measured values.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::fixtures::fixtures;
use super::io::io_err;
use super::phases::{derive_constraints, prepare, run_pipeline};
use super::timing::TimingReport;
use super::workload::{generate_workload, WorkloadProfile};
use super::{query_seed, ConstraintProfile, HarnessError, Method, MetricsReport, RunConfig};
use crate::bandit::{argmax_lowest, regret_curve, reward, search, SearchConfig, Ucb1};
use crate::engine::{evaluate_reference, multiset_eq, SimulatorAdapter, SimulatorParams};
use crate::ir::parse_sql;
use crate::student::{linear_loss_and_grad, softmax, train_boosted, BoostedHyper};
use crate::teacher::{apply_plan, enumerate_configs, Strategy, TeacherConfig, ARM_COUNT};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Criterion {
    fn new(id: u8, name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name,
            passed,
            detail,
        }
    }

    fn error(id: u8, name: &'static str, e: impl fmt::Display) -> Self {
        Self::new(id, name, false, format!("error: {e}"))
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {} {verdict} {}: {}", self.id, self.name, self.detail)
    }
}

/// Every non-sampling configuration of every corpus query returns the
/// original's result multiset on the fixture data.
pub fn check_semantics() -> Criterion {
    const NAME: &str = "semantic preservation";
    let start = Instant::now();
    let teacher = TeacherConfig::default();
    let configs: Vec<_> = enumerate_configs().into_iter().filter(|c| !c.is_enabled(Strategy::Sampling)).collect();
    let (mut total, mut failures) = (0usize, Vec::new());
    let mut corpus_sizes = Vec::new();
    for f in fixtures() {
        corpus_sizes.push(f.corpus.len());
        for sql in &f.corpus {
            let ir = match parse_sql(sql, &f.schema) {
                Ok(ir) => ir,
                Err(e) => return Criterion::error(1, NAME, format!("{}: {sql}: {e}", f.name)),
            };
            let expected = match evaluate_reference(&ir, &f.data) {
                Ok(r) => r,
                Err(e) => return Criterion::error(1, NAME, format!("{}: {sql}: {e}", f.name)),
            };
            for &config in &configs {
                total += 1;
                let plan = apply_plan(&ir, config, &f.schema, &teacher);
                let same = evaluate_reference(&plan.ir, &f.data).is_ok_and(|got| multiset_eq(&expected, &got, 1e-9));
                if !same {
                    failures.push(format!("{}: config {config}: {sql}", f.name));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let enough = corpus_sizes.len() >= 3 && corpus_sizes.iter().all(|&n| n >= 20) && configs.len() == 32;
    let passed = enough && failures.is_empty() && secs < 60.0;
    let mut detail = format!(
        "{}/{total} rewritten results equal across corpora {corpus_sizes:?} x {} configs in {secs:.2}s",
        total - failures.len(),
        configs.len()
    );
    if let Some(first) = failures.first() {
        detail.push_str(&format!("; first mismatch {first}"));
    }
    Criterion::new(1, NAME, passed, detail)
}

/// Without noise, search agrees with exhaustive evaluation of all 64 arms.
pub fn check_bandit_oracle(seed: u64) -> Criterion {
    const NAME: &str = "bandit oracle equivalence";
    match bandit_oracle(seed) {
        Ok((agree, n, secs)) => {
            let frac = agree as f64 / n as f64;
            Criterion::new(
                2,
                NAME,
                n >= 100 && frac >= 0.95 && secs < 60.0,
                format!("{agree}/{n} queries ({:.1}%) match the exhaustive argmax in {secs:.2}s", 100.0 * frac),
            )
        }
        Err(e) => Criterion::error(2, NAME, e),
    }
}

fn bandit_oracle(seed: u64) -> Result<(usize, usize, f64), HarnessError> {
    let start = Instant::now();
    let profile = WorkloadProfile {
        n_queries: 100,
        ..WorkloadProfile::default()
    };
    let workload = generate_workload(&profile, seed)?;
    let queries = prepare(&workload)?;
    let exec = SimulatorAdapter::new(SimulatorParams::noiseless());
    let cfg = SearchConfig {
        max_iterations: 100,
        seed,
        ..SearchConfig::default()
    };
    let cs = derive_constraints(&queries, &exec, ConstraintProfile::Default, seed, &cfg.teacher)?;
    let agree = queries
        .par_iter()
        .map(|q| {
            let qseed = query_seed(seed, q.query_id);
            let ctx = q.context(cs.constraints);
            let base = ctx.measure_baseline(&exec, &cfg.teacher, qseed)?.measurement().latency_ms;
            let mut rewards = Vec::with_capacity(ARM_COUNT);
            for config in enumerate_configs() {
                let plan = apply_plan(&q.ir, config, q.schema, &cfg.teacher);
                let out = ctx.execute(&exec, &plan, qseed)?;
                rewards.push((reward(out.measurement().latency_ms, base, out.is_feasible())?, out.is_feasible()));
            }
            let any_feasible = rewards.iter().any(|r| r.1);
            let oracle = argmax_lowest(
                rewards
                    .iter()
                    .map(|&(r, ok)| if ok || !any_feasible { r } else { f64::NEG_INFINITY }),
            )
            .expect("64 arms");
            let found = search(&ctx, &exec, base, &cfg.with_seed(qseed), None)?;
            Ok(usize::from(found.chosen_arm == oracle))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?
        .into_iter()
        .sum();
    Ok((agree, queries.len(), start.elapsed().as_secs_f64()))
}

fn median_of(report: &MetricsReport, m: Method) -> Option<f64> {
    report.method(m).map(|x| x.median_latency_ms)
}

/// Criteria read off a finished run: method ladder, CSR ladder, cost model,
/// distillation and speedup.
pub fn check_run(report: &MetricsReport, timing: &TimingReport) -> Vec<Criterion> {
    let mut out = Vec::new();

    let ladder = (|| {
        let b = median_of(report, Method::Baseline)?;
        let t = median_of(report, Method::Teacher)?;
        let k = median_of(report, Method::Bandit)?;
        Some((b, t, k))
    })();
    out.push(match ladder {
        Some((b, t, k)) => {
            let total = 100.0 * (b - k) / b;
            let n = report.workload.n_queries;
            let schemas = report.workload.per_schema.len();
            Criterion::new(
                3,
                "method ladder",
                b > t && t > k && total >= 15.0 && n >= 60 && schemas >= 2,
                format!(
                    "median latency baseline {b:.2} > teacher {t:.2} > teacher+bandit {k:.2} ms, \
                     {total:.1}% total over {n} queries on {schemas} schemas"
                ),
            )
        }
        None => Criterion::error(3, "method ladder", "baseline, teacher or bandit not evaluated"),
    });

    out.push(match (report.method(Method::Baseline), report.method(Method::BanditCost)) {
        (Some(b), Some(c)) => {
            let gain = c.csr - b.csr;
            Criterion::new(
                4,
                "CSR ladder",
                gain >= 10.0,
                format!("teacher+bandit+cost CSR {:.1}% vs baseline {:.1}% (+{gain:.1} points)", c.csr, b.csr),
            )
        }
        _ => Criterion::error(4, "CSR ladder", "baseline or bandit+cost not evaluated"),
    });

    out.push(match &report.cost_model {
        Some(cm) => {
            let r2 = cm.r_squared.unwrap_or(f64::NAN);
            Criterion::new(
                5,
                "cost model",
                cm.n_traces >= 2000 && r2 >= 0.80 && cm.mae_ratio <= 0.10,
                format!(
                    "{} traces ({} held out): R2 {r2:.3}, MAE {:.2} ms = {:.1}% of median {:.2} ms (depth {})",
                    cm.n_traces,
                    cm.n_test,
                    cm.mae_ms,
                    100.0 * cm.mae_ratio,
                    cm.median_latency_ms,
                    cm.max_depth
                ),
            )
        }
        None => Criterion::error(5, "cost model", "phase 3 did not run"),
    });

    out.push(match &report.students {
        Some(s) => Criterion::new(
            6,
            "distillation",
            s.boosted_test_accuracy >= 0.80 && s.linear_test_accuracy >= 0.70,
            format!(
                "held-out top-1 agreement boosted {:.3}, linear {:.3} on {} queries",
                s.boosted_test_accuracy, s.linear_test_accuracy, s.n_test
            ),
        ),
        None => Criterion::error(6, "distillation", "phase 4 did not run"),
    });

    out.push(match timing.min_speedup() {
        Some(min) => {
            let all: Vec<String> = timing.speedups.iter().map(|(k, v)| format!("{k} {v:.1}x")).collect();
            Criterion::new(7, "speedup", min >= 10.0, format!("median planning speedups {}", all.join(", ")))
        }
        None => Criterion::error(7, "speedup", "students or searches were not timed"),
    });
    out
}

/// Gradient, softmax, boosted-loss and regret checks through the public API.
pub fn check_numerics() -> Criterion {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n, d, k) = (30, 5, 4);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let y: Vec<usize> = (0..n).map(|i| i % k).collect();
    let w: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect();
    let b: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let l2 = 1e-2;
    let (_, gw, gb) = linear_loss_and_grad(&w, &b, &x, &y, l2);
    let h = 1e-5;
    let rel = |a: f64, num: f64| (a - num).abs() / a.abs().max(num.abs()).max(1e-8);
    let mut grad_err: f64 = 0.0;
    for c in 0..k {
        for j in 0..d {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[c][j] += h;
            wm[c][j] -= h;
            let num = (linear_loss_and_grad(&wp, &b, &x, &y, l2).0 - linear_loss_and_grad(&wm, &b, &x, &y, l2).0)
                / (2.0 * h);
            grad_err = grad_err.max(rel(gw[c][j], num));
        }
        let (mut bp, mut bm) = (b.clone(), b.clone());
        bp[c] += h;
        bm[c] -= h;
        let num = (linear_loss_and_grad(&w, &bp, &x, &y, l2).0 - linear_loss_and_grad(&w, &bm, &x, &y, l2).0) / (2.0 * h);
        grad_err = grad_err.max(rel(gb[c], num));
    }

    let mut softmax_err: f64 = 0.0;
    for scale in [1e-3, 1.0, 50.0, 700.0] {
        let s: Vec<f64> = (0..ARM_COUNT).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        softmax_err = softmax_err.max((softmax(&s).iter().sum::<f64>() - 1.0).abs());
    }

    let hyper = BoostedHyper {
        rounds: 20,
        ..BoostedHyper::default()
    };
    let monotone = match train_boosted(&x, &y, ARM_COUNT, hyper, 3) {
        Ok(m) => m.loss_history.windows(2).all(|p| p[1] <= p[0]),
        Err(_) => false,
    };

    // two Bernoulli arms with gap 0.2, pseudo-regret averaged over seeds
    let regret = |t: usize| {
        let reps = 200;
        (0..reps)
            .map(|s| {
                let means = [0.7, 0.5];
                let mut r = ChaCha8Rng::seed_from_u64(1000 + s as u64);
                let mut ucb = Ucb1::<f64>::new(2);
                let mut expected = Vec::with_capacity(t);
                for _ in 0..t {
                    let arm = ucb.select();
                    ucb.update(arm, if r.gen::<f64>() < means[arm] { 1.0 } else { 0.0 });
                    expected.push(means[arm]);
                }
                *regret_curve(&expected, 0.7).last().expect("t > 0")
            })
            .sum::<f64>()
            / reps as f64
    };
    let (r1, r2) = (regret(256), regret(512));
    let ratio = r2 / r1;

    let passed = grad_err < 1e-5 && softmax_err <= 1e-9 && monotone && ratio < 2.0;
    Criterion::new(
        8,
        "numerical checks",
        passed,
        format!(
            "gradient rel err {grad_err:.2e}, softmax err {softmax_err:.1e}, boosted loss monotone {monotone}, \
             regret(512)/regret(256) {ratio:.3}"
        ),
    )
}

fn artifact_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(io_err(&d))? {
            let path = entry.map_err(io_err(&d))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n != "timing.json") {
                out.push(path.strip_prefix(dir).expect("under dir").to_path_buf());
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Compares two run directories byte for byte, ignoring `timing.json`.
pub fn check_determinism(a: &Path, b: &Path) -> Criterion {
    const NAME: &str = "determinism";
    let compare = || -> Result<(usize, Vec<String>), HarnessError> {
        let (fa, fb) = (artifact_files(a)?, artifact_files(b)?);
        if fa != fb {
            return Ok((0, vec!["different file sets".into()]));
        }
        let mut differ = Vec::new();
        for rel in &fa {
            let (pa, pb) = (a.join(rel), b.join(rel));
            if fs::read(&pa).map_err(io_err(&pa))? != fs::read(&pb).map_err(io_err(&pb))? {
                differ.push(rel.display().to_string());
            }
        }
        Ok((fa.len(), differ))
    };
    match compare() {
        Ok((n, differ)) => {
            let required = ["report.json", "phase3/cost_model.json", "phase4/student_lr.json", "phase4/student_gb.json"];
            let present = required.iter().all(|r| a.join(r).exists());
            let mut detail = format!("{}/{n} artifacts byte-identical across two runs", n - differ.len());
            if !differ.is_empty() {
                detail.push_str(&format!("; differing: {}", differ.join(", ")));
            }
            if !present {
                detail.push_str("; report or model files missing");
            }
            Criterion::new(9, NAME, present && n > 0 && differ.is_empty(), detail)
        }
        Err(e) => Criterion::error(9, NAME, e),
    }
}

/// Runs all nine checks, writing two full runs under `work_dir`.
pub fn run_acceptance(cfg: &RunConfig, work_dir: &Path) -> Vec<Criterion> {
    let mut out = vec![check_semantics(), check_bandit_oracle(cfg.seed)];
    let (a, b) = (work_dir.join("run_a"), work_dir.join("run_b"));
    let first = run_pipeline(cfg, &a);
    match &first {
        Ok(art) => out.extend(check_run(&art.report, &art.timing)),
        Err(e) => {
            for (id, name) in [
                (3, "method ladder"),
                (4, "CSR ladder"),
                (5, "cost model"),
                (6, "distillation"),
                (7, "speedup"),
            ] {
                out.push(Criterion::error(id, name, e));
            }
        }
    }
    out.push(check_numerics());
    out.push(match first {
        Err(e) => Criterion::error(9, "determinism", e),
        Ok(_) => match run_pipeline(cfg, &b) {
            Ok(_) => check_determinism(&a, &b),
            Err(e) => Criterion::error(9, "determinism", e),
        },
    });
    out
}
