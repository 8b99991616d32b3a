use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PropagationParams, SocialGraph};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Unaware,
    Exposed,
    Sharing,
    Dormant,
    Removed,
}

impl NodeStatus {
    pub fn can_become(self, next: NodeStatus) -> bool {
        use NodeStatus::*;
        matches!(
            (self, next),
            (Unaware, Exposed) | (Exposed, Sharing) | (Exposed, Dormant) | (Sharing, Dormant) | (Sharing, Removed)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickStats {
    pub tick: u32,
    pub newly_exposed: usize,
    /// Nodes that will share on the next tick.
    pub sharing: usize,
    pub removed_this_tick: usize,
    /// Nodes ever exposed, seeds included.
    pub cumulative_informed: usize,
    /// Sharers that passed moderation and transmitted this tick.
    pub shares_executed: usize,
    /// Sharers examined by moderation this tick.
    pub moderation_checks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeResult {
    pub per_tick: Vec<TickStats>,
    pub final_informed_fraction: f64,
}

impl CascadeResult {
    pub fn total_shares(&self) -> usize {
        self.per_tick.iter().map(|t| t.shares_executed).sum()
    }

    pub fn final_informed(&self) -> usize {
        self.per_tick.last().map_or(0, |t| t.cumulative_informed)
    }
}

/// When each node changed state in one run (for drawing the graph at a tick).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub exposed_at: Option<u32>,
    pub shared_at: Option<u32>,
    pub removed_at: Option<u32>,
}

/// Source of Bernoulli outcomes. Degenerate probabilities (0 or 1) never
/// reach the decider, so they consume no randomness and create no branch in
/// the enumeration oracle.
pub(crate) trait Decider {
    fn decide(&mut self, p: f64) -> bool;
}

pub(crate) fn bernoulli<D: Decider + ?Sized>(decider: &mut D, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        decider.decide(p)
    }
}

struct RngDecider<R>(R);

impl<R: Rng> Decider for RngDecider<R> {
    fn decide(&mut self, p: f64) -> bool {
        self.0.random::<f64>() < p
    }
}

/// One cascade in progress. The step function is shared by the sampler and
/// the enumeration oracle.
pub(crate) struct Cascade<'a> {
    graph: &'a SocialGraph,
    params: &'a PropagationParams,
    status: Vec<NodeStatus>,
    sharing: Vec<usize>,
    tick: u32,
    cumulative: usize,
    trace: Option<Vec<NodeTrace>>,
}

impl<'a> Cascade<'a> {
    pub(crate) fn new(graph: &'a SocialGraph, params: &'a PropagationParams, traced: bool) -> Self {
        let mut status = vec![NodeStatus::Unaware; graph.len()];
        let sharing: Vec<usize> = params.seeds.iter().copied().collect();
        let mut trace = traced.then(|| vec![NodeTrace::default(); graph.len()]);
        for &s in &sharing {
            status[s] = NodeStatus::Sharing;
            if let Some(trace) = trace.as_mut() {
                trace[s].exposed_at = Some(0);
            }
        }
        Cascade {
            graph,
            params,
            status,
            cumulative: sharing.len(),
            sharing,
            tick: 0,
            trace,
        }
    }

    pub(crate) fn initial_stats(&self) -> TickStats {
        TickStats {
            tick: 0,
            newly_exposed: self.sharing.len(),
            sharing: self.sharing.len(),
            removed_this_tick: 0,
            cumulative_informed: self.cumulative,
            shares_executed: 0,
            moderation_checks: 0,
        }
    }

    fn set(&mut self, node: usize, next: NodeStatus) {
        let current = self.status[node];
        assert!(
            current.can_become(next),
            "illegal node transition {current:?} -> {next:?} for node {node}"
        );
        self.status[node] = next;
    }

    pub(crate) fn step<D: Decider + ?Sized>(&mut self, decider: &mut D) -> TickStats {
        self.tick += 1;
        let tick = self.tick;
        let sharers = std::mem::take(&mut self.sharing);
        let checks = sharers.len();

        let mut survivors = Vec::with_capacity(sharers.len());
        let mut removed = 0;
        for s in sharers {
            if bernoulli(decider, self.params.moderation_rate) {
                self.set(s, NodeStatus::Removed);
                if let Some(trace) = self.trace.as_mut() {
                    trace[s].removed_at = Some(tick);
                }
                removed += 1;
            } else {
                survivors.push(s);
            }
        }

        let mut exposed = Vec::new();
        for &s in &survivors {
            for &t in self.graph.out_neighbors(s) {
                if self.status[t] == NodeStatus::Unaware {
                    self.set(t, NodeStatus::Exposed);
                    exposed.push(t);
                }
            }
        }
        for &s in &survivors {
            self.set(s, NodeStatus::Dormant);
            if let Some(trace) = self.trace.as_mut() {
                trace[s].shared_at = Some(tick);
            }
        }

        exposed.sort_unstable();
        for &t in &exposed {
            let p = self.params.share_probability(&self.graph.nodes()[t]);
            if bernoulli(decider, p) {
                self.set(t, NodeStatus::Sharing);
                self.sharing.push(t);
            } else {
                self.set(t, NodeStatus::Dormant);
            }
            if let Some(trace) = self.trace.as_mut() {
                trace[t].exposed_at = Some(tick);
            }
        }
        self.cumulative += exposed.len();

        TickStats {
            tick,
            newly_exposed: exposed.len(),
            sharing: self.sharing.len(),
            removed_this_tick: removed,
            cumulative_informed: self.cumulative,
            shares_executed: survivors.len(),
            moderation_checks: checks,
        }
    }

    /// Nothing can change once no node is sharing.
    pub(crate) fn is_quiescent(&self) -> bool {
        self.sharing.is_empty()
    }

    pub(crate) fn quiet_tick(&mut self) -> TickStats {
        self.tick += 1;
        TickStats {
            tick: self.tick,
            newly_exposed: 0,
            sharing: 0,
            removed_this_tick: 0,
            cumulative_informed: self.cumulative,
            shares_executed: 0,
            moderation_checks: 0,
        }
    }

    /// Runs every tick up to `params.ticks`, returning `ticks + 1` rows.
    pub(crate) fn run_to_end<D: Decider + ?Sized>(&mut self, decider: &mut D) -> Vec<TickStats> {
        let mut rows = Vec::with_capacity(self.params.ticks as usize + 1);
        rows.push(self.initial_stats());
        while self.tick < self.params.ticks {
            let row = if self.is_quiescent() {
                self.quiet_tick()
            } else {
                self.step(decider)
            };
            rows.push(row);
        }
        rows
    }

    pub(crate) fn into_trace(self) -> Option<Vec<NodeTrace>> {
        self.trace
    }
}

fn finish(graph: &SocialGraph, per_tick: Vec<TickStats>) -> CascadeResult {
    let informed = per_tick.last().map_or(0, |t| t.cumulative_informed);
    let final_informed_fraction = if graph.is_empty() {
        0.0
    } else {
        informed as f64 / graph.len() as f64
    };
    CascadeResult {
        per_tick,
        final_informed_fraction,
    }
}

/// Runs one stochastic cascade. Parameters must already be validated
/// against the graph.
pub fn run_cascade(graph: &SocialGraph, params: &PropagationParams, seed: u64) -> CascadeResult {
    let mut decider = RngDecider(rng_from(seed));
    let rows = Cascade::new(graph, params, false).run_to_end(&mut decider);
    finish(graph, rows)
}

/// Like [`run_cascade`] but also reports when each node changed state.
pub fn run_cascade_traced(
    graph: &SocialGraph,
    params: &PropagationParams,
    seed: u64,
) -> (CascadeResult, Vec<NodeTrace>) {
    let mut decider = RngDecider(rng_from(seed));
    let mut cascade = Cascade::new(graph, params, true);
    let rows = cascade.run_to_end(&mut decider);
    let trace = cascade.into_trace().unwrap_or_default();
    (finish(graph, rows), trace)
}
