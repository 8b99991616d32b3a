//! Sandbox models: misinformation spread over a directed follower graph and
//! the platform-profit extension, with an exact enumeration oracle.
//!
//! The spread model is a synchronous independent-cascade variant. Tick 0 is
//! the initial state with the seeds sharing. Every later tick:
//!
//! 1. each sharing node passes moderation with probability `1 - moderation_rate`,
//!    otherwise it is removed before transmitting;
//! 2. each surviving sharer exposes every unaware out-neighbour (exposure on
//!    contact is certain);
//! 3. surviving sharers go dormant (one sharing tick per node);
//! 4. nodes exposed this tick decide whether to share next tick, with
//!    probability `bot_share` for bots and
//!    `clamp01(base_share + affinity_weight * affinity)` otherwise; the rest
//!    go dormant.
//!
//! Random draws are consumed in node-id order within each phase.

mod cascade;
mod export;
mod graph;
mod montecarlo;
mod oracle;
mod profit;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cascade::{run_cascade, run_cascade_traced, CascadeResult, NodeStatus, NodeTrace, TickStats};
pub use export::{write_mean_csv, write_tick_csv};
pub use graph::{generate_graph, Node, SocialGraph};
pub use montecarlo::{
    run_monte_carlo, run_monte_carlo_weighted, MonteCarloResult, Summary, TickAggregate,
};
pub use oracle::{brute_force_expectation, ExpectedSeries, ExpectedTickStats, ORACLE_DECISION_LIMIT};
pub use profit::{mean_profit_series, profit_series, run_profit, ProfitResult, ProfitTick};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid `{field}`: {message}")]
    InvalidParam { field: String, message: String },
    #[error("cascade needs more than {limit} Bernoulli decisions on some path; too large to enumerate")]
    TooLarge { limit: usize },
}

impl SimError {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        SimError::InvalidParam {
            field: field.to_owned(),
            message: message.into(),
        }
    }

    /// The offending parameter name, or `""` for non-parameter errors.
    pub fn field(&self) -> &str {
        match self {
            SimError::InvalidParam { field, .. } => field,
            SimError::TooLarge { .. } => "",
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            SimError::InvalidParam { .. } => "INVALID_PARAM",
            SimError::TooLarge { .. } => "TOO_LARGE",
        }
    }
}

/// Preferential-attachment graph recipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub bots: usize,
    #[serde(default)]
    pub seed: u64,
}

impl GraphSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.m < 1 {
            return Err(SimError::invalid("m", "m must be at least 1"));
        }
        if self.n < self.m + 1 {
            return Err(SimError::invalid("n", format!("n must be at least m + 1 = {}", self.m + 1)));
        }
        if self.bots > self.n {
            return Err(SimError::invalid("bots", "bots cannot exceed n"));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<SocialGraph, SimError> {
        generate_graph(self.n, self.m, self.bots, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationParams {
    pub base_share: f64,
    #[serde(default)]
    pub affinity_weight: f64,
    #[serde(default)]
    pub bot_share: f64,
    #[serde(default)]
    pub moderation_rate: f64,
    pub ticks: u32,
    pub seeds: BTreeSet<usize>,
}

impl PropagationParams {
    /// Checks ranges against a graph of `n` nodes.
    pub fn validate(&self, n: usize) -> Result<(), SimError> {
        for (field, p) in [
            ("base_share", self.base_share),
            ("bot_share", self.bot_share),
            ("moderation_rate", self.moderation_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::invalid(field, format!("probability must lie in [0, 1], got {p}")));
            }
        }
        if !(self.affinity_weight.is_finite() && self.affinity_weight >= 0.0) {
            return Err(SimError::invalid("affinity_weight", "must be a non-negative number"));
        }
        if self.ticks == 0 {
            return Err(SimError::invalid("ticks", "ticks must be positive"));
        }
        if let Some(&bad) = self.seeds.iter().find(|&&s| s >= n) {
            return Err(SimError::invalid("seeds", format!("seed node {bad} is not in a graph of {n} nodes")));
        }
        Ok(())
    }

    /// Probability that a freshly exposed node shares.
    pub fn share_probability(&self, node: &Node) -> f64 {
        if node.is_bot {
            self.bot_share
        } else {
            (self.base_share + self.affinity_weight * node.affinity).clamp(0.0, 1.0)
        }
    }
}

/// Relative engagement value of an exposure and of a share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngagementWeights {
    pub exposure: f64,
    pub share: f64,
}

impl Default for EngagementWeights {
    fn default() -> Self {
        EngagementWeights {
            exposure: 1.0,
            share: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfitParams {
    /// Revenue per unit of engagement.
    pub ad_rate: f64,
    /// Cost per moderation check (one per sharer per sharing tick).
    pub moderation_cost_rate: f64,
    #[serde(default)]
    pub engagement_weights: EngagementWeights,
}

impl ProfitParams {
    pub fn validate(&self) -> Result<(), SimError> {
        for (field, v) in [
            ("ad_rate", self.ad_rate),
            ("moderation_cost_rate", self.moderation_cost_rate),
            ("engagement_weights.exposure", self.engagement_weights.exposure),
            ("engagement_weights.share", self.engagement_weights.share),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::invalid(field, "must be a non-negative number"));
            }
        }
        Ok(())
    }
}
