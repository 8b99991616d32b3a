use serde::{Deserialize, Serialize};

use super::{run_cascade, CascadeResult, MonteCarloResult, ProfitParams, PropagationParams, SocialGraph, TickStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitTick {
    pub tick: u32,
    pub engagement: f64,
    pub revenue: f64,
    pub cost: f64,
    pub profit: f64,
    pub cumulative_profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitResult {
    pub cascade: CascadeResult,
    pub per_tick: Vec<ProfitTick>,
}

fn tick_row(tick: u32, engagement: f64, checks: f64, profit: &ProfitParams, running: &mut f64) -> ProfitTick {
    let revenue = profit.ad_rate * engagement;
    let cost = profit.moderation_cost_rate * checks;
    let net = revenue - cost;
    *running += net;
    ProfitTick {
        tick,
        engagement,
        revenue,
        cost,
        profit: net,
        cumulative_profit: *running,
    }
}

/// Platform revenue, moderation cost and profit for each tick of a cascade.
pub fn profit_series(stats: &[TickStats], profit: &ProfitParams) -> Vec<ProfitTick> {
    let w = profit.engagement_weights;
    let mut running = 0.0;
    stats
        .iter()
        .map(|s| {
            let engagement = w.exposure * s.newly_exposed as f64 + w.share * s.shares_executed as f64;
            tick_row(s.tick, engagement, s.moderation_checks as f64, profit, &mut running)
        })
        .collect()
}

/// Profit series over Monte Carlo means (the model is linear in the counts).
pub fn mean_profit_series(mc: &MonteCarloResult, profit: &ProfitParams) -> Vec<ProfitTick> {
    let w = profit.engagement_weights;
    let mut running = 0.0;
    mc.per_tick
        .iter()
        .map(|a| {
            let engagement = w.exposure * a.newly_exposed + w.share * a.shares_executed;
            tick_row(a.tick, engagement, a.moderation_checks, profit, &mut running)
        })
        .collect()
}

pub fn run_profit(
    graph: &SocialGraph,
    params: &PropagationParams,
    profit: &ProfitParams,
    seed: u64,
) -> ProfitResult {
    let cascade = run_cascade(graph, params, seed);
    let per_tick = profit_series(&cascade.per_tick, profit);
    ProfitResult { cascade, per_tick }
}
