use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_cascade, CascadeResult, EngagementWeights, PropagationParams, SocialGraph};
use crate::rng::derive_seed;

/// Mean and sample standard deviation (n - 1 denominator; 0 for one run).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stddev: f64,
}

impl Summary {
    /// Standard error of the mean over `runs` samples.
    pub fn std_error(&self, runs: usize) -> f64 {
        self.stddev / (runs as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn summary(&self) -> Summary {
        let stddev = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary {
            mean: self.mean,
            stddev,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickAggregate {
    pub tick: u32,
    pub cumulative_informed: Summary,
    pub engagement: Summary,
    pub newly_exposed: f64,
    pub sharing: f64,
    pub removed_this_tick: f64,
    pub shares_executed: f64,
    pub moderation_checks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub runs: usize,
    pub per_tick: Vec<TickAggregate>,
    pub total_shares: Summary,
    pub total_engagement: Summary,
    pub final_informed_fraction: Summary,
}

impl MonteCarloResult {
    /// Per-run seed used by run `index` of a batch seeded with `seed`.
    pub fn run_seed(seed: u64, index: usize) -> u64 {
        derive_seed(seed, index as u64)
    }
}

/// [`run_monte_carlo_weighted`] with the default 1:3 exposure:share weights.
pub fn run_monte_carlo(
    graph: &SocialGraph,
    params: &PropagationParams,
    runs: usize,
    seed: u64,
) -> MonteCarloResult {
    run_monte_carlo_weighted(graph, params, runs, seed, EngagementWeights::default())
}

const CHUNK: usize = 512;

/// Runs `runs` independent cascades (in parallel) and aggregates them in run
/// order, so the result does not depend on scheduling.
pub fn run_monte_carlo_weighted(
    graph: &SocialGraph,
    params: &PropagationParams,
    runs: usize,
    seed: u64,
    weights: EngagementWeights,
) -> MonteCarloResult {
    let rows = params.ticks as usize + 1;
    let mut informed = vec![Welford::default(); rows];
    let mut engagement = vec![Welford::default(); rows];
    let mut means = vec![[0.0f64; 5]; rows];
    let mut total_shares = Welford::default();
    let mut total_engagement = Welford::default();
    let mut fraction = Welford::default();

    let mut start = 0;
    while start < runs {
        let end = (start + CHUNK).min(runs);
        let batch: Vec<CascadeResult> = (start..end)
            .into_par_iter()
            .map(|i| run_cascade(graph, params, MonteCarloResult::run_seed(seed, i)))
            .collect();
        for result in &batch {
            let mut run_engagement = 0.0;
            for (t, s) in result.per_tick.iter().enumerate() {
                let e = weights.exposure * s.newly_exposed as f64
                    + weights.share * s.shares_executed as f64;
                run_engagement += e;
                informed[t].push(s.cumulative_informed as f64);
                engagement[t].push(e);
                let m = &mut means[t];
                m[0] += s.newly_exposed as f64;
                m[1] += s.sharing as f64;
                m[2] += s.removed_this_tick as f64;
                m[3] += s.shares_executed as f64;
                m[4] += s.moderation_checks as f64;
            }
            total_shares.push(result.total_shares() as f64);
            total_engagement.push(run_engagement);
            fraction.push(result.final_informed_fraction);
        }
        start = end;
    }

    let denom = runs.max(1) as f64;
    let per_tick = (0..rows)
        .map(|t| TickAggregate {
            tick: t as u32,
            cumulative_informed: informed[t].summary(),
            engagement: engagement[t].summary(),
            newly_exposed: means[t][0] / denom,
            sharing: means[t][1] / denom,
            removed_this_tick: means[t][2] / denom,
            shares_executed: means[t][3] / denom,
            moderation_checks: means[t][4] / denom,
        })
        .collect();

    MonteCarloResult {
        runs,
        per_tick,
        total_shares: total_shares.summary(),
        total_engagement: total_engagement.summary(),
        final_informed_fraction: fraction.summary(),
    }
}
