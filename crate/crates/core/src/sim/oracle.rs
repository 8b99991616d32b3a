//! Exact expectations by exhaustive enumeration of every Bernoulli outcome.
//!
//! The oracle drives the same [`Cascade`] step function as the sampler, but
//! with a scripted decider. Each run follows a prefix of fixed outcomes and
//! defaults every later decision to `false`; the next prefix flips the last
//! `false` to `true`. This walks every leaf of the decision tree exactly once.

use serde::{Deserialize, Serialize};

use super::cascade::{Cascade, Decider};
use super::{EngagementWeights, PropagationParams, SimError, SocialGraph};

/// Maximum number of non-degenerate Bernoulli decisions on any single
/// outcome path.
pub const ORACLE_DECISION_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpectedTickStats {
    pub tick: u32,
    pub newly_exposed: f64,
    pub sharing: f64,
    pub removed_this_tick: f64,
    pub cumulative_informed: f64,
    pub shares_executed: f64,
    pub moderation_checks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedSeries {
    pub per_tick: Vec<ExpectedTickStats>,
    /// Number of distinct outcome paths enumerated.
    pub leaves: usize,
}

impl ExpectedSeries {
    pub fn total_shares(&self) -> f64 {
        self.per_tick.iter().map(|t| t.shares_executed).sum()
    }

    pub fn final_informed(&self) -> f64 {
        self.per_tick.last().map_or(0.0, |t| t.cumulative_informed)
    }

    pub fn total_engagement(&self, weights: EngagementWeights) -> f64 {
        self.per_tick
            .iter()
            .map(|t| weights.exposure * t.newly_exposed + weights.share * t.shares_executed)
            .sum()
    }
}

struct Scripted<'a> {
    prefix: &'a [bool],
    outcomes: Vec<bool>,
    weight: f64,
}

impl Decider for Scripted<'_> {
    fn decide(&mut self, p: f64) -> bool {
        let i = self.outcomes.len();
        let outcome = self.prefix.get(i).copied().unwrap_or(false);
        self.outcomes.push(outcome);
        self.weight *= if outcome { p } else { 1.0 - p };
        outcome
    }
}

/// Exact expected per-tick statistics of [`super::run_cascade`].
pub fn brute_force_expectation(
    graph: &SocialGraph,
    params: &PropagationParams,
) -> Result<ExpectedSeries, SimError> {
    let rows = params.ticks as usize + 1;
    let mut acc = vec![ExpectedTickStats::default(); rows];
    for (t, row) in acc.iter_mut().enumerate() {
        row.tick = t as u32;
    }

    let mut prefix: Vec<bool> = Vec::new();
    let mut leaves = 0;
    loop {
        let mut decider = Scripted {
            prefix: &prefix,
            outcomes: Vec::new(),
            weight: 1.0,
        };
        let stats = Cascade::new(graph, params, false).run_to_end(&mut decider);
        if decider.outcomes.len() > ORACLE_DECISION_LIMIT {
            return Err(SimError::TooLarge {
                limit: ORACLE_DECISION_LIMIT,
            });
        }
        leaves += 1;

        let w = decider.weight;
        for (row, s) in acc.iter_mut().zip(&stats) {
            row.newly_exposed += w * s.newly_exposed as f64;
            row.sharing += w * s.sharing as f64;
            row.removed_this_tick += w * s.removed_this_tick as f64;
            row.cumulative_informed += w * s.cumulative_informed as f64;
            row.shares_executed += w * s.shares_executed as f64;
            row.moderation_checks += w * s.moderation_checks as f64;
        }

        let outcomes = decider.outcomes;
        match outcomes.iter().rposition(|&o| !o) {
            Some(k) => {
                prefix.clear();
                prefix.extend_from_slice(&outcomes[..k]);
                prefix.push(true);
            }
            None => break,
        }
    }

    Ok(ExpectedSeries {
        per_tick: acc,
        leaves,
    })
}
