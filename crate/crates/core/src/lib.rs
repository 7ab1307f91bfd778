//! Constraint-aware SQL plan selection.
//!
//! A rule-based rewriter produces one candidate plan per 6-bit strategy
//! configuration, a UCB1 search picks among the 64 candidates under memory
//! and latency caps, a random forest learns latency from execution traces,
//! and small classifiers are distilled from the search's decisions.
//!
//! The learned models are generic over [`Float`]; the aliases at the crate
//! root fix them to `f64`.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandit;
pub mod cost_model;
pub mod engine;
pub mod harness;
pub mod ir;
pub mod student;
pub mod teacher;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Scalar type for the numeric modules.
pub trait Float:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("finite conversion")
    }

    fn f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Float for f32 {}
impl Float for f64 {}

pub type ForestModel = cost_model::ForestModel<f64>;
pub type RegressionTree = cost_model::RegressionTree<f64>;
pub type LinearStudent = student::LinearStudent<f64>;
pub type BoostedStudent = student::BoostedStudent<f64>;
pub type Ucb1 = bandit::Ucb1<f64>;

pub use bandit::{search, SearchConfig, SearchResult, TerminationReason};
pub use engine::{check_feasible, Constraints, EngineAdapter, ResourceSnapshot, SimulatorAdapter};
pub use ir::{parse_sql, render_sql, QueryIR, SchemaModel};
pub use teacher::{apply_plan, PlanCandidate, PlanConfig, Strategy};
