use std::fmt;

use serde::{Deserialize, Serialize};

/// Number of plan configurations (bandit arms).
pub const ARM_COUNT: usize = 64;

/// One of the six rewrite strategies, identified by its bit in the arm index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    EarlyFilter,
    ProjectionPushdown,
    PreAggregation,
    JoinReorder,
    Sampling,
    LimitPushdown,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::EarlyFilter,
        Strategy::ProjectionPushdown,
        Strategy::PreAggregation,
        Strategy::JoinReorder,
        Strategy::Sampling,
        Strategy::LimitPushdown,
    ];

    /// Order in which enabled strategies are applied.
    pub const APPLICATION_ORDER: [Strategy; 6] = [
        Strategy::EarlyFilter,
        Strategy::ProjectionPushdown,
        Strategy::PreAggregation,
        Strategy::JoinReorder,
        Strategy::LimitPushdown,
        Strategy::Sampling,
    ];

    pub fn bit(self) -> u8 {
        match self {
            Strategy::EarlyFilter => 0,
            Strategy::ProjectionPushdown => 1,
            Strategy::PreAggregation => 2,
            Strategy::JoinReorder => 3,
            Strategy::Sampling => 4,
            Strategy::LimitPushdown => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::EarlyFilter => "early_filter",
            Strategy::ProjectionPushdown => "projection_pushdown",
            Strategy::PreAggregation => "pre_aggregation",
            Strategy::JoinReorder => "join_reorder",
            Strategy::Sampling => "sampling",
            Strategy::LimitPushdown => "limit_pushdown",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A 6-bit strategy vector; bit `i` of [`PlanConfig::index`] is
/// [`Strategy::ALL`]`[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct PlanConfig(u8);

impl PlanConfig {
    pub const BASELINE: PlanConfig = PlanConfig(0);

    pub fn from_index(index: usize) -> Option<Self> {
        (index < ARM_COUNT).then_some(PlanConfig(index as u8))
    }

    pub fn from_strategies(strategies: &[Strategy]) -> Self {
        PlanConfig(strategies.iter().fold(0, |acc, s| acc | (1 << s.bit())))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_enabled(self, s: Strategy) -> bool {
        self.0 & (1 << s.bit()) != 0
    }

    pub fn with(self, s: Strategy, on: bool) -> Self {
        if on {
            PlanConfig(self.0 | (1 << s.bit()))
        } else {
            PlanConfig(self.0 & !(1 << s.bit()))
        }
    }

    pub fn early_filter(self) -> bool {
        self.is_enabled(Strategy::EarlyFilter)
    }

    pub fn projection_pushdown(self) -> bool {
        self.is_enabled(Strategy::ProjectionPushdown)
    }

    pub fn pre_aggregation(self) -> bool {
        self.is_enabled(Strategy::PreAggregation)
    }

    pub fn join_reorder(self) -> bool {
        self.is_enabled(Strategy::JoinReorder)
    }

    pub fn sampling(self) -> bool {
        self.is_enabled(Strategy::Sampling)
    }

    pub fn limit_pushdown(self) -> bool {
        self.is_enabled(Strategy::LimitPushdown)
    }

    pub fn enabled(self) -> impl Iterator<Item = Strategy> {
        Strategy::ALL.into_iter().filter(move |s| self.is_enabled(*s))
    }

    /// Flags as 0/1 values in bit order.
    pub fn flags(self) -> [u8; 6] {
        let mut out = [0; 6];
        for (i, s) in Strategy::ALL.iter().enumerate() {
            out[i] = self.is_enabled(*s) as u8;
        }
        out
    }

    /// Binary rendering of the arm index, most significant bit first
    /// (`limit_pushdown` … `early_filter`).
    pub fn bitstring(self) -> String {
        format!("{:06b}", self.0)
    }

    pub fn from_bitstring(s: &str) -> Option<Self> {
        if s.len() != 6 {
            return None;
        }
        u8::from_str_radix(s, 2).ok().and_then(|v| PlanConfig::from_index(v as usize))
    }
}

impl fmt::Display for PlanConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arm {} ({})", self.0, self.bitstring())
    }
}

/// All 64 configurations; position `i` holds the configuration with index `i`.
pub fn enumerate_configs() -> Vec<PlanConfig> {
    (0..ARM_COUNT as u8).map(PlanConfig).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_four_configs_in_index_order() {
        let all = enumerate_configs();
        assert_eq!(all.len(), 64);
        for (i, c) in all.iter().enumerate() {
            assert_eq!(c.index(), i);
            for s in Strategy::ALL {
                assert_eq!(c.is_enabled(s), (i >> s.bit()) & 1 == 1);
            }
        }
    }

    #[test]
    fn boundary_configs() {
        let all = enumerate_configs();
        assert_eq!(all[0].enabled().count(), 0);
        assert_eq!(all[63].enabled().count(), 6);
    }

    #[test]
    fn index_five_is_filter_and_preagg() {
        let c = PlanConfig::from_index(5).unwrap();
        assert_eq!(
            c.enabled().collect::<Vec<_>>(),
            vec![Strategy::EarlyFilter, Strategy::PreAggregation]
        );
        assert_eq!(c.bitstring(), "000101");
        assert_eq!(c.flags(), [1, 0, 1, 0, 0, 0]);
        assert_eq!(PlanConfig::from_bitstring("000101"), Some(c));
    }

    #[test]
    fn out_of_range_index() {
        assert!(PlanConfig::from_index(64).is_none());
    }
}
