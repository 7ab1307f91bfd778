use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sqlbandit::harness::{
    generate_workload, load_report, load_timing, make_executor, run_acceptance, run_pipeline_with, Backend,
    ConstraintProfile, Method, MetricsReport, RunConfig, TimingReport, Workload, WorkloadProfile,
};

#[derive(Parser)]
#[command(name = "sqlbandit", version, about = "Constraint-aware SQL plan selection with a teacher-bandit planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded workload and write it as JSON.
    Generate {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 240)]
        n_queries: usize,
        #[arg(long, default_value = "workload.json")]
        out: PathBuf,
    },
    /// Run every phase and write the run directory.
    Run(RunArgs),
    /// Print the summary of a finished run.
    Report {
        #[arg(long, default_value = "runs/latest")]
        run: PathBuf,
    },
    /// Run the acceptance suite; exits non-zero if any criterion fails.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Scratch directory for the two full runs.
        #[arg(long, default_value = "runs/verify")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Search budget per query.
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    /// Constraint profile: default, tight or loose.
    #[arg(long, default_value = "default")]
    constraints: ConstraintProfile,
    /// sim or adapter.
    #[arg(long, default_value = "sim")]
    backend: Backend,
    /// Methods to evaluate, comma-separated: baseline, teacher, bandit,
    /// bandit+cost, student-lr, student-gb. All by default.
    #[arg(long, value_delimiter = ',')]
    ablation: Vec<Method>,
    /// Choose the forest depth by 5-fold cross-validation.
    #[arg(long)]
    cv_depth: bool,
    /// Use a workload written by `generate` instead of generating one.
    #[arg(long)]
    workload: Option<PathBuf>,
    #[arg(long, default_value = "runs/latest")]
    out: PathBuf,
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = RunConfig {
        seed: args.seed,
        iterations: args.iterations,
        profile: args.constraints,
        backend: args.backend,
        methods: if args.ablation.is_empty() {
            Method::ALL.to_vec()
        } else {
            args.ablation
        },
        cv_depth: args.cv_depth,
        ..RunConfig::default()
    };
    let workload = match &args.workload {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let w: Workload = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            w.validate()?;
            w
        }
        None => generate_workload(&cfg.workload, cfg.seed)?,
    };
    let executor = make_executor(cfg.backend);
    let art = run_pipeline_with(&cfg, &workload, executor.as_ref(), &args.out)?;
    print_summary(&art.report, Some(&art.timing));
    println!("\nrun directory: {}", args.out.display());
    Ok(())
}

fn print_summary(report: &MetricsReport, timing: Option<&TimingReport>) {
    let c = &report.constraints;
    println!(
        "seed {}  queries {}  caps: memory {:.0} B, latency {:.2} ms ({}x median arm 0)",
        report.seed, report.workload.n_queries, c.c_mem_bytes, c.c_lat_ms, c.factor
    );
    println!(
        "\n{:<12} {:>12} {:>10} {:>8} {:>8} {:>8} {:>10}",
        "method", "median ms", "reduction", "CSR", "mem", "lat", "plan exec"
    );
    for m in &report.methods {
        println!(
            "{:<12} {:>12.2} {:>9.1}% {:>7.1}% {:>7.1}% {:>7.1}% {:>10.1}",
            m.method.name(),
            m.median_latency_ms,
            m.latency_reduction_pct,
            m.csr,
            m.memory_csr,
            m.latency_csr,
            m.plan_executions_mean
        );
    }
    if let Some(cm) = &report.cost_model {
        println!(
            "\ncost model: R2 {:.3}, MAE {:.2} ms ({:.1}% of median), depth {}, {} traces",
            cm.r_squared.unwrap_or(f64::NAN),
            cm.mae_ms,
            100.0 * cm.mae_ratio,
            cm.max_depth,
            cm.n_traces
        );
    }
    if let Some(s) = &report.students {
        println!(
            "students: held-out agreement linear {:.3}, boosted {:.3}",
            s.linear_test_accuracy, s.boosted_test_accuracy
        );
    }
    if let Some(t) = timing {
        println!("\n{:<22} {:>12} {:>12} {:>12}", "component", "mean ms", "std ms", "median ms");
        for comp in &t.components {
            println!(
                "{:<22} {:>12.5} {:>12.5} {:>12.5}",
                comp.component, comp.mean_ms, comp.std_ms, comp.median_ms
            );
        }
        for (k, v) in &t.speedups {
            println!("speedup {k}: {v:.1}x");
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Generate { seed, n_queries, out } => {
            if n_queries == 0 {
                bail!("--n-queries must be at least 1");
            }
            let profile = WorkloadProfile {
                n_queries,
                ..WorkloadProfile::default()
            };
            let w = generate_workload(&profile, seed)?;
            fs::write(&out, serde_json::to_string_pretty(&w)? + "\n")
                .with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} queries to {}", w.queries.len(), out.display());
        }
        Command::Run(args) => run(args)?,
        Command::Report { run } => {
            let report = load_report(&run)?;
            let timing = load_timing(&run).ok();
            print_summary(&report, timing.as_ref());
        }
        Command::Verify { seed, out } => {
            let cfg = RunConfig {
                seed,
                ..RunConfig::acceptance()
            };
            let results = run_acceptance(&cfg, &out);
            for c in &results {
                println!("{c}");
            }
            let failed = results.iter().filter(|c| !c.passed).count();
            println!("{} passed, {failed} failed", results.len() - failed);
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
