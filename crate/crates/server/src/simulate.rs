//! Simulation requests: resolution against pack presets, request limits,
//! and the computation itself. Shared by the HTTP endpoint and the CLI.

use inoculate_core::pack::ScenarioPack;
use inoculate_core::sim::{
    mean_profit_series, profit_series, run_cascade_traced, run_monte_carlo_weighted, CascadeResult,
    EngagementWeights, GraphSpec, MonteCarloResult, Node, NodeTrace, ProfitParams, ProfitTick,
    PropagationParams, SimError,
};
use serde::{Deserialize, Serialize};

pub const MAX_NODES: usize = 2_000;
pub const MAX_RUNS: u32 = 10_000;
pub const MAX_TICKS: u32 = 200;

/// Either a preset name (looked up in `pack_id`, default `default`) or an
/// explicit graph plus propagation block; explicit blocks override the
/// preset's.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationRequest {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub pack_id: Option<String>,
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub propagation: Option<PropagationParams>,
    #[serde(default)]
    pub profit: Option<ProfitParams>,
    #[serde(default)]
    pub runs: Option<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Fully resolved parameters, echoed back in the response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSimulation {
    pub graph: GraphSpec,
    pub propagation: PropagationParams,
    pub profit: Option<ProfitParams>,
    pub runs: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolveError {
    UnknownPreset(String),
    Missing(&'static str),
    Limit { field: &'static str, max: u64, got: u64 },
    Invalid(SimError),
}

impl std::fmt::Display for ResolveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResolveError::UnknownPreset(p) => write!(f, "no simulation preset named `{p}`"),
            ResolveError::Missing(field) => write!(f, "`{field}` is required without a preset"),
            ResolveError::Limit { field, max, got } => {
                write!(f, "`{field}` = {got} exceeds the request limit of {max}")
            }
            ResolveError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl ResolveError {
    pub fn code(&self) -> &'static str {
        match self {
            ResolveError::UnknownPreset(_) => "UNKNOWN_PRESET",
            ResolveError::Missing(_) => "MISSING_FIELD",
            ResolveError::Limit { .. } => "LIMIT_EXCEEDED",
            ResolveError::Invalid(e) => e.code(),
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            ResolveError::UnknownPreset(_) => Some("preset"),
            ResolveError::Missing(f) => Some(f),
            ResolveError::Limit { field, .. } => Some(field),
            ResolveError::Invalid(e) => Some(e.field()).filter(|f| !f.is_empty()),
        }
    }
}

impl From<SimError> for ResolveError {
    fn from(e: SimError) -> Self {
        ResolveError::Invalid(e)
    }
}

impl SimulationRequest {
    pub fn resolve(&self, pack: &ScenarioPack) -> Result<ResolvedSimulation, ResolveError> {
        let preset = match &self.preset {
            Some(name) => Some(
                pack.preset(name)
                    .ok_or_else(|| ResolveError::UnknownPreset(name.clone()))?,
            ),
            None => None,
        };
        let graph = self
            .graph
            .or(preset.map(|p| p.graph))
            .ok_or(ResolveError::Missing("graph"))?;
        let propagation = self
            .propagation
            .clone()
            .or_else(|| preset.map(|p| p.propagation.clone()))
            .ok_or(ResolveError::Missing("propagation"))?;
        let profit = self.profit.clone().or_else(|| preset.and_then(|p| p.profit.clone()));
        let runs = self.runs.or(preset.map(|p| p.runs)).unwrap_or(1);
        let seed = self.seed.or(preset.map(|p| p.seed)).unwrap_or(0);
        let resolved = ResolvedSimulation {
            graph,
            propagation,
            profit,
            runs,
            seed,
        };
        resolved.validate()?;
        Ok(resolved)
    }
}

impl ResolvedSimulation {
    pub fn validate(&self) -> Result<(), ResolveError> {
        self.graph.validate()?;
        self.propagation.validate(self.graph.n)?;
        if let Some(p) = &self.profit {
            p.validate()?;
        }
        if self.runs == 0 {
            return Err(SimError::invalid("runs", "runs must be positive").into());
        }
        Ok(())
    }

    /// Server-side request limits. The CLI skips these.
    pub fn check_limits(&self) -> Result<(), ResolveError> {
        for (field, max, got) in [
            ("n", MAX_NODES as u64, self.graph.n as u64),
            ("runs", MAX_RUNS as u64, self.runs as u64),
            ("ticks", MAX_TICKS as u64, self.propagation.ticks as u64),
        ] {
            if got > max {
                return Err(ResolveError::Limit { field, max, got });
            }
        }
        Ok(())
    }

    pub fn run(&self) -> Result<SimulationOutput, SimError> {
        let graph = self.graph.build()?;
        self.propagation.validate(graph.len())?;
        let weights = self
            .profit
            .as_ref()
            .map_or(EngagementWeights::default(), |p| p.engagement_weights);
        let (sample, trace) = run_cascade_traced(
            &graph,
            &self.propagation,
            MonteCarloResult::run_seed(self.seed, 0),
        );
        let summary = run_monte_carlo_weighted(&graph, &self.propagation, self.runs as usize, self.seed, weights);
        let profit = self.profit.as_ref().map(|p| ProfitOutput {
            sample: profit_series(&sample.per_tick, p),
            mean: mean_profit_series(&summary, p),
        });
        Ok(SimulationOutput {
            params: self.clone(),
            nodes: graph.nodes().to_vec(),
            edges: graph.edges().to_vec(),
            sample,
            trace,
            summary,
            profit,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitOutput {
    pub sample: Vec<ProfitTick>,
    pub mean: Vec<ProfitTick>,
}

/// `sample` and `trace` describe run 0 of the batch, for drawing the graph;
/// `summary` aggregates all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub params: ResolvedSimulation,
    pub nodes: Vec<Node>,
    pub edges: Vec<(usize, usize)>,
    pub sample: CascadeResult,
    pub trace: Vec<NodeTrace>,
    pub summary: MonteCarloResult,
    pub profit: Option<ProfitOutput>,
}
