//! Workload generation, the four-phase protocol and reporting.
//!
//! A run directory holds one subdirectory per phase plus the report:
//!
//! ```text
//! run/
//!   workload.json
//!   phase1/  schema_<name>.jsonl, queries.jsonl
//!   phase2/  constraints.json, search.jsonl, traces.jsonl
//!   phase3/  cost_model.json, evaluation.json
//!   phase4/  student_lr.json, student_gb.json, evaluation.json
//!   eval/    search_cost.jsonl, outcomes.jsonl
//!   report.json, fig3_schemas.csv, fig4_calibration.csv, fig5_ablation.csv
//!   timing.json
//! ```
//!
//! Everything except `timing.json` is a pure function of the run config.
//! Wall-clock measurements live in `timing.json` alone.

pub mod fixtures;
mod io;
pub mod metrics;
pub mod phases;
pub mod timing;
pub mod verify;
pub mod workload;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::BanditError;
use crate::cost_model::{CostModelError, ForestParams};
use crate::engine::EngineError;
use crate::ir::IrError;
use crate::student::{BoostedHyper, LinearHyper, StudentError};
use crate::teacher::{PlanConfig, Strategy};

pub use metrics::{compute_metrics, emit_report, MethodMetrics, MetricsReport};
pub use phases::{
    load_config, load_outcomes, load_report, load_timing, make_executor, run_phase1, run_phase2, run_phase3, run_phase4,
    run_pipeline, run_pipeline_with, RunArtifacts,
};
pub use timing::{measure_timing, ComponentTiming, TimingReport};
pub use verify::{run_acceptance, Criterion};
pub use workload::{
    generate_workload, largest_remainder, schema_model, template_catalogue, SchemaKind, Template, TemplateShape,
    Workload, WorkloadProfile, WorkloadQuery,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid workload profile: {0}")]
    InvalidProfile(String),
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error("{phase} needs at least one query")]
    EmptyWorkload { phase: &'static str },
    #[error("query `{query_id}` does not parse: {source}")]
    Parse {
        query_id: String,
        #[source]
        source: IrError,
    },
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error(transparent)]
    CostModel(#[from] CostModelError),
    #[error(transparent)]
    Student(#[from] StudentError),
}

/// Caps as multiples of the workload's median arm-0 latency and memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintProfile {
    #[default]
    Default,
    Tight,
    Loose,
}

impl ConstraintProfile {
    pub fn factor(self) -> f64 {
        match self {
            ConstraintProfile::Default => 2.0,
            ConstraintProfile::Tight => 1.5,
            ConstraintProfile::Loose => 3.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConstraintProfile::Default => "default",
            ConstraintProfile::Tight => "tight",
            ConstraintProfile::Loose => "loose",
        }
    }
}

impl FromStr for ConstraintProfile {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(ConstraintProfile::Default),
            "tight" => Ok(ConstraintProfile::Tight),
            "loose" => Ok(ConstraintProfile::Loose),
            other => Err(HarnessError::InvalidConfig(format!("unknown constraint profile `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// The simulator called directly, searches in parallel.
    #[default]
    Sim,
    /// The simulator behind the serialized adapter interface.
    Adapter,
}

impl FromStr for Backend {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sim" => Ok(Backend::Sim),
            "adapter" => Ok(Backend::Adapter),
            other => Err(HarnessError::InvalidConfig(format!("unknown backend `{other}`"))),
        }
    }
}

/// The planners compared in the report, in ladder order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "teacher")]
    Teacher,
    #[serde(rename = "bandit")]
    Bandit,
    #[serde(rename = "bandit+cost")]
    BanditCost,
    #[serde(rename = "student-lr")]
    StudentLr,
    #[serde(rename = "student-gb")]
    StudentGb,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Baseline,
        Method::Teacher,
        Method::Bandit,
        Method::BanditCost,
        Method::StudentLr,
        Method::StudentGb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Teacher => "teacher",
            Method::Bandit => "bandit",
            Method::BanditCost => "bandit+cost",
            Method::StudentLr => "student-lr",
            Method::StudentGb => "student-gb",
        }
    }

    fn needs_search(self) -> bool {
        !matches!(self, Method::Baseline | Method::Teacher)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HarnessError::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// The search-free teacher: early filter, projection pushdown and join
/// reordering on, everything else off.
pub fn teacher_config() -> PlanConfig {
    PlanConfig::from_strategies(&[Strategy::EarlyFilter, Strategy::ProjectionPushdown, Strategy::JoinReorder])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Search budget per query.
    pub iterations: usize,
    pub profile: ConstraintProfile,
    pub backend: Backend,
    /// Methods to evaluate; phases they do not need are skipped.
    pub methods: Vec<Method>,
    pub workload: WorkloadProfile,
    /// Pick the forest depth by 5-fold cross-validation over {4, 8, 16}.
    pub cv_depth: bool,
    pub forest: ForestParams,
    pub linear: LinearHyper,
    pub boosted: BoostedHyper,
    /// Timed repetitions per query and component.
    pub timing_reps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            iterations: 100,
            profile: ConstraintProfile::Default,
            backend: Backend::Sim,
            methods: Method::ALL.to_vec(),
            workload: WorkloadProfile::default(),
            cv_depth: false,
            forest: ForestParams::default(),
            linear: LinearHyper::default(),
            boosted: BoostedHyper::default(),
            timing_reps: 5,
        }
    }
}

impl RunConfig {
    /// The configuration the acceptance suite runs: defaults plus the
    /// cross-validated forest depth.
    pub fn acceptance() -> Self {
        Self {
            cv_depth: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.iterations < crate::teacher::ARM_COUNT {
            return Err(HarnessError::InvalidConfig(format!(
                "iterations must be at least {} to pull every arm once",
                crate::teacher::ARM_COUNT
            )));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::InvalidConfig("no methods selected".into()));
        }
        if self.timing_reps == 0 {
            return Err(HarnessError::InvalidConfig("timing_reps must be positive".into()));
        }
        Ok(())
    }

    pub fn wants(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }

    pub(crate) fn needs_search(&self) -> bool {
        self.methods.iter().any(|m| m.needs_search())
    }

    pub(crate) fn needs_cost_model(&self) -> bool {
        self.wants(Method::BanditCost)
    }

    pub(crate) fn needs_students(&self) -> bool {
        self.wants(Method::StudentLr) || self.wants(Method::StudentGb)
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Executor seed of one query within a run.
pub fn query_seed(run_seed: u64, query_id: &str) -> u64 {
    run_seed.wrapping_add(fnv1a(query_id.as_bytes()))
}

/// Seeded 80/20 split by query id: true for the held-out fifth.
pub fn is_held_out(query_id: &str, seed: u64) -> bool {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(query_id.as_bytes());
    fnv1a(&bytes).is_multiple_of(5)
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn split_is_roughly_a_fifth() {
        let held = (0..1000).filter(|i| is_held_out(&format!("q{i:04}"), 7)).count();
        assert!((150..=250).contains(&held), "{held}");
    }

    #[test]
    fn teacher_arm_is_eleven() {
        assert_eq!(teacher_config().index(), 11);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[]), 0.0);
    }
}
