//! Core retweet-graph records: users, edges, arrival events, and counters.
//!
//! The graph is a directed multigraph. An edge (source, target) records that
//! `target` retweeted a message of `source`; parallel edges are real (repeat
//! retweets) and self-loops are rejected. User ids are dense arrival-ordered
//! indices: the i-th user to appear is `UserId(i)`, which keeps every lookup
//! an array index and makes event logs replayable by construction.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Dense index of a user; assigned in arrival order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub u32);

/// Dense index of a message tree; assigned in T1-arrival order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TreeId(pub u32);

impl UserId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TreeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for UserId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for TreeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The three ways the graph grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArrivalType {
    T1,
    T2,
    T3,
}

impl std::fmt::Display for ArrivalType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArrivalType::T1 => "T1",
            ArrivalType::T2 => "T2",
            ArrivalType::T3 => "T3",
        })
    }
}

/// One growth step.
///
/// - T1: `user` enters with a fresh message, rooting a new tree.
/// - T2: fresh `user` retweets `source`, adding edge (source, user) and
///   joining `tree` as a child of `source`.
/// - T3: existing `target` retweets existing `source` in `tree`, adding edge
///   (source, target).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrivalEvent {
    T1 {
        user: UserId,
    },
    T2 {
        source: UserId,
        user: UserId,
        tree: TreeId,
    },
    T3 {
        source: UserId,
        target: UserId,
        tree: TreeId,
    },
}

impl ArrivalEvent {
    pub fn arrival_type(&self) -> ArrivalType {
        match self {
            ArrivalEvent::T1 { .. } => ArrivalType::T1,
            ArrivalEvent::T2 { .. } => ArrivalType::T2,
            ArrivalEvent::T3 { .. } => ArrivalType::T3,
        }
    }
}

/// Arrival tallies. The time index satisfies t = t1 + t2 + t3 - 1 because
/// the initial node is itself a T1 arrival at t = 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalCounters {
    pub t1: u64,
    pub t2: u64,
    pub t3: u64,
}

impl ArrivalCounters {
    pub fn record(&mut self, ty: ArrivalType) {
        match ty {
            ArrivalType::T1 => self.t1 += 1,
            ArrivalType::T2 => self.t2 += 1,
            ArrivalType::T3 => self.t3 += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.t1 + self.t2 + self.t3
    }

    /// Current time index; None before the first arrival.
    pub fn time(&self) -> Option<u64> {
        self.total().checked_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    /// Time index at which the user arrived.
    pub arrival_step: u64,
    /// How the user arrived (nodes are only created by T1 and T2).
    pub arrival: ArrivalType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub source: UserId,
    pub target: UserId,
    pub arrival_step: u64,
}

/// Node and edge store. Structural bookkeeping only; forest membership and
/// connected components live in their own modules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetweetGraph {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    pub counters: ArrivalCounters,
}

impl RetweetGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> u64 {
        self.nodes.len() as u64
    }

    pub fn edge_count(&self) -> u64 {
        self.edges.len() as u64
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn contains(&self, user: UserId) -> bool {
        user.index() < self.nodes.len()
    }

    /// Id the next arriving user will get.
    pub fn next_user(&self) -> UserId {
        UserId(self.nodes.len() as u32)
    }

    pub(crate) fn push_node(&mut self, arrival: ArrivalType, arrival_step: u64) -> UserId {
        let id = self.next_user();
        self.nodes.push(NodeRecord {
            arrival_step,
            arrival,
        });
        id
    }

    pub(crate) fn push_edge(&mut self, source: UserId, target: UserId, arrival_step: u64) {
        debug_assert_ne!(source, target, "self-loops are rejected before this point");
        self.edges.push(EdgeRecord {
            source,
            target,
            arrival_step,
        });
    }

    /// Histogram of in- and out-degrees, counting parallel edges with
    /// multiplicity. Keys are degrees, values are how many users have them.
    pub fn degree_distribution(&self) -> DegreeDistribution {
        let mut out_deg = vec![0u64; self.nodes.len()];
        let mut in_deg = vec![0u64; self.nodes.len()];
        for e in &self.edges {
            out_deg[e.source.index()] += 1;
            in_deg[e.target.index()] += 1;
        }
        let mut dist = DegreeDistribution::default();
        for d in out_deg {
            *dist.out_degree.entry(d).or_insert(0) += 1;
        }
        for d in in_deg {
            *dist.in_degree.entry(d).or_insert(0) += 1;
        }
        dist
    }
}

/// Degree histograms; BTreeMaps so iteration (and any export) is ordered.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DegreeDistribution {
    pub out_degree: BTreeMap<u64, u64>,
    pub in_degree: BTreeMap<u64, u64>,
}

/// Why an event could not be applied to a graph state.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("user {0} is not in the graph")]
    UnknownUser(UserId),
    #[error("new user {found} does not match the next dense id {expected}")]
    NonSequentialUser { expected: UserId, found: UserId },
    #[error("tree {0} does not exist")]
    UnknownTree(TreeId),
    #[error("user {user} is not a member of tree {tree}")]
    SourceNotInTree { user: UserId, tree: TreeId },
    #[error("retweeting oneself would create a self-loop at user {0}")]
    SelfLoop(UserId),
    #[error("graph is empty; the first event must be a T1 arrival")]
    EmptyGraph,
}
