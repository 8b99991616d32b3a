use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub node_id: usize,
    /// How receptive the account is to the content, in [0, 1].
    pub affinity: f64,
    pub is_bot: bool,
}

/// Directed follower graph. An edge `(source, target)` means shares by
/// `source` reach `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct SocialGraph {
    nodes: Vec<Node>,
    edges: Vec<(usize, usize)>,
    out: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    nodes: Vec<Node>,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawGraph> for SocialGraph {
    type Error = SimError;

    fn try_from(raw: RawGraph) -> Result<Self, Self::Error> {
        SocialGraph::new(raw.nodes, raw.edges)
    }
}

impl From<SocialGraph> for RawGraph {
    fn from(g: SocialGraph) -> Self {
        RawGraph {
            nodes: g.nodes,
            edges: g.edges,
        }
    }
}

impl SocialGraph {
    /// Builds a graph, enforcing dense ids, affinities in [0, 1], no
    /// self-loops and no duplicate edges.
    pub fn new(nodes: Vec<Node>, edges: Vec<(usize, usize)>) -> Result<Self, SimError> {
        for (i, node) in nodes.iter().enumerate() {
            if node.node_id != i {
                return Err(SimError::invalid("nodes", format!("node ids must be dense; position {i} has id {}", node.node_id)));
            }
            if !(0.0..=1.0).contains(&node.affinity) {
                return Err(SimError::invalid("nodes", format!("node {i} affinity {} outside [0, 1]", node.affinity)));
            }
        }
        let n = nodes.len();
        let mut out = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for &(s, t) in &edges {
            if s >= n || t >= n {
                return Err(SimError::invalid("edges", format!("edge ({s}, {t}) references a missing node")));
            }
            if s == t {
                return Err(SimError::invalid("edges", format!("self-loop on node {s}")));
            }
            if !seen.insert((s, t)) {
                return Err(SimError::invalid("edges", format!("duplicate edge ({s}, {t})")));
            }
            out[s].push(t);
        }
        Ok(SocialGraph { nodes, edges, out })
    }

    /// Convenience constructor for tests and examples: `n` ordinary nodes
    /// with the given affinity.
    pub fn uniform(n: usize, affinity: f64, edges: Vec<(usize, usize)>) -> Result<Self, SimError> {
        let nodes = (0..n)
            .map(|node_id| Node {
                node_id,
                affinity,
                is_bot: false,
            })
            .collect();
        SocialGraph::new(nodes, edges)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_neighbors(&self, node: usize) -> &[usize] {
        &self.out[node]
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for &(_, t) in &self.edges {
            deg[t] += 1;
        }
        deg
    }

    pub fn set_bot(&mut self, node: usize, is_bot: bool) {
        self.nodes[node].is_bot = is_bot;
    }
}

/// Preferential attachment: node `i` (for i >= 1) adds `min(m, i)` edges
/// `i -> t` to distinct earlier nodes, each chosen with probability
/// proportional to `in_degree(t) + 1`. Affinities are drawn first, in node
/// order; the last `bots` nodes are bots.
pub fn generate_graph(n: usize, m: usize, bots: usize, seed: u64) -> Result<SocialGraph, SimError> {
    super::GraphSpec { n, m, bots, seed }.validate()?;

    let mut rng = rng_from(seed);
    let nodes: Vec<Node> = (0..n)
        .map(|node_id| Node {
            node_id,
            affinity: rng.random::<f64>(),
            is_bot: node_id >= n - bots,
        })
        .collect();

    // Urn holding each node (in_degree + 1) times.
    let mut urn: Vec<usize> = Vec::with_capacity(n * (m + 1));
    urn.push(0);
    let mut edges = Vec::with_capacity(n * m);
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    for i in 1..n {
        chosen.clear();
        let k = m.min(i);
        while chosen.len() < k {
            let t = urn[rng.random_range(0..urn.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((i, t));
            urn.push(t);
        }
        urn.push(i);
    }

    SocialGraph::new(nodes, edges)
}
