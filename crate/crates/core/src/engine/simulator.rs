//! Deterministic cost simulator.
//!
//! Cost law (version [`COST_LAW_VERSION`]):
//!
//! ```text
//! base_work  = Σ rows scanned + Σ_k card(prefix_k) · (1 + λ · width(prefix_k))
//! latency_ms = α · base_work · (1 + β · cpu_load) · (1 + ε),  ε ~ U[-noise, noise]
//! memory     = γ · max_intermediate_rows · 8 · widest_intermediate_columns + memory_in_use
//! ```
//!
//! Cardinalities come from the teacher's estimator in pipeline scope, so
//! predicates left above the joins do not shrink join inputs. Join work grows
//! with the number of columns carried through each prefix. The noise draw is
//! seeded from the caller's seed mixed with the plan's work, so under one seed
//! a plan always measures the same and equal-work plans measure identically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::constraints::ResourceSnapshot;
use crate::ir::{QueryIR, SchemaModel};
use crate::teacher::cardinality::{estimate_with_scope, relation_rows, scan_rows, CardinalityScope};
use crate::teacher::PlanCandidate;

pub const COST_LAW_VERSION: u32 = 1;
pub const BYTES_PER_COLUMN: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatorParams {
    /// Milliseconds per unit of work.
    pub alpha: f64,
    /// CPU-load slowdown factor.
    pub beta: f64,
    /// Memory scale.
    pub gamma: f64,
    /// Per-column join cost, relative to one row.
    pub lambda: f64,
    /// Half-width of the multiplicative latency noise band.
    pub noise: f64,
    pub version: u32,
}

impl Default for SimulatorParams {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta: 0.5,
            gamma: 1.0,
            lambda: 0.1,
            noise: 0.05,
            version: COST_LAW_VERSION,
        }
    }
}

impl SimulatorParams {
    pub fn noiseless() -> Self {
        Self {
            noise: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub latency_ms: f64,
    pub memory_bytes: f64,
}

/// Work decomposition of a plan under the cost law.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanWork {
    pub scanned_rows: f64,
    pub join_rows: f64,
    /// Join rows weighted by carried width: Σ card · width.
    pub join_cells: f64,
    pub max_intermediate_rows: f64,
    pub widest_columns: usize,
}

impl PlanWork {
    /// Rounded to 1e-3 rows so plans equal up to summation order tie exactly.
    pub fn base_work(&self, lambda: f64) -> f64 {
        ((self.scanned_rows + self.join_rows + lambda * self.join_cells) * 1e3).round() / 1e3
    }
}

pub fn plan_work(ir: &QueryIR, schema: &SchemaModel) -> PlanWork {
    let mut scanned = 0.0;
    let mut max_rows: f64 = 0.0;
    let mut widest = 0usize;
    let mut prefix_width = 0usize;
    let mut join_rows = 0.0;
    let mut join_cells = 0.0;
    for (k, tref) in ir.base_tables.iter().enumerate() {
        scanned += scan_rows(tref, schema);
        max_rows = max_rows.max(relation_rows(tref, schema));
        let width = tref.output_columns(schema).len();
        widest = widest.max(width);
        prefix_width += width;
        if k >= 1 {
            let prefix: Vec<&str> = ir.base_tables[..=k].iter().map(|t| t.alias.as_str()).collect();
            let card = estimate_with_scope(&prefix, ir, schema, CardinalityScope::Pipeline);
            join_rows += card;
            join_cells += card * prefix_width as f64;
            max_rows = max_rows.max(card);
            widest = widest.max(prefix_width);
        }
    }
    PlanWork {
        scanned_rows: scanned,
        join_rows,
        join_cells,
        max_intermediate_rows: max_rows,
        widest_columns: widest,
    }
}

fn noise_seed(seed: u64, base_work: f64) -> u64 {
    // splitmix64 finalizer over the seed and the work fingerprint
    let mut z = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ base_work.to_bits().rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Simulated latency and memory of running `candidate`.
///
/// `original` is the query the candidate was derived from; the cost law only
/// looks at the rewritten plan, but both must reference the same tables.
pub fn simulate_execution(
    candidate: &PlanCandidate,
    original: &QueryIR,
    schema: &SchemaModel,
    resources: &ResourceSnapshot,
    seed: u64,
    params: &SimulatorParams,
) -> Measurement {
    debug_assert_eq!(candidate.ir.base_tables.len(), original.base_tables.len());
    let work = plan_work(&candidate.ir, schema);
    let base_work = work.base_work(params.lambda);
    let epsilon = if params.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed(seed, base_work));
        rng.gen_range(-params.noise..=params.noise)
    } else {
        0.0
    };
    let latency_ms =
        params.alpha * base_work * (1.0 + params.beta * resources.cpu_load) * (1.0 + epsilon);
    let memory_bytes = params.gamma
        * work.max_intermediate_rows
        * BYTES_PER_COLUMN
        * work.widest_columns as f64
        + resources.memory_in_use;
    Measurement {
        latency_ms: latency_ms.max(0.0),
        memory_bytes: memory_bytes.max(0.0),
    }
}
