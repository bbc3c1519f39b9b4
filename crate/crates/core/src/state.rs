//! Combined graph state and event application.
//!
//! `GraphState` owns the node/edge store, the message forest, and the
//! component partition, and advances them together one arrival event at a
//! time. Events are validated before anything mutates, so a rejected event
//! leaves the state untouched. Replaying an event log therefore either
//! reproduces a state exactly or fails on the first inconsistent event.

use crate::components::ComponentPartition;
use crate::forest::MessageForest;
use crate::graph::{ArrivalEvent, ArrivalType, EventError, RetweetGraph, TreeId, UserId};
use crate::progression::ProgressionRow;

/// Structural knobs that change how events mutate the state. Kept on the
/// state (not the engine) because replays must use the same settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateConfig {
    /// When true (the model's definition), a T3 retweeter joins the
    /// retweeted tree's member set and the source's child count rises.
    /// When false, T3 arrivals leave the message forest untouched and only
    /// the graph and components grow.
    pub trees_grow_on_t3: bool,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            trees_grow_on_t3: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub graph: RetweetGraph,
    pub forest: MessageForest,
    pub components: ComponentPartition,
    config: StateConfig,
}

impl Default for GraphState {
    fn default() -> Self {
        Self::new()
    }
}

impl GraphState {
    pub fn new() -> Self {
        Self::with_config(StateConfig::default())
    }

    pub fn with_config(config: StateConfig) -> Self {
        Self {
            graph: RetweetGraph::new(),
            forest: MessageForest::new(),
            components: ComponentPartition::new(),
            config,
        }
    }

    pub fn config(&self) -> StateConfig {
        self.config
    }

    /// Time index of the last applied event; None before the first.
    pub fn time(&self) -> Option<u64> {
        self.graph.counters.time()
    }

    /// Validates and applies one event, returning the time index it got.
    pub fn apply_event(&mut self, event: &ArrivalEvent) -> Result<u64, EventError> {
        self.validate(event)?;
        let t = self.graph.counters.total(); // next time index == current total
        match *event {
            ArrivalEvent::T1 { .. } => {
                let user = self.graph.push_node(ArrivalType::T1, t);
                self.components.add_node(user);
                self.forest.add_tree(user);
            }
            ArrivalEvent::T2 { source, tree, .. } => {
                let user = self.graph.push_node(ArrivalType::T2, t);
                self.graph.push_edge(source, user, t);
                self.components.add_node(user);
                self.components.add_edge(source, user);
                self.forest.attach_retweet(tree, source, user);
            }
            ArrivalEvent::T3 {
                source,
                target,
                tree,
            } => {
                self.graph.push_edge(source, target, t);
                self.components.add_edge(source, target);
                if self.config.trees_grow_on_t3 {
                    self.forest.attach_retweet(tree, source, target);
                }
            }
        }
        self.graph.counters.record(event.arrival_type());
        Ok(t)
    }

    fn validate(&self, event: &ArrivalEvent) -> Result<(), EventError> {
        let fresh = |user: UserId| -> Result<(), EventError> {
            if user != self.graph.next_user() {
                return Err(EventError::NonSequentialUser {
                    expected: self.graph.next_user(),
                    found: user,
                });
            }
            Ok(())
        };
        let existing = |user: UserId| -> Result<(), EventError> {
            if !self.graph.contains(user) {
                return Err(EventError::UnknownUser(user));
            }
            Ok(())
        };
        let in_tree = |tree: TreeId, user: UserId| -> Result<(), EventError> {
            let t = self
                .forest
                .tree(tree)
                .ok_or(EventError::UnknownTree(tree))?;
            if !t.contains(user) {
                return Err(EventError::SourceNotInTree { user, tree });
            }
            Ok(())
        };
        match *event {
            ArrivalEvent::T1 { user } => fresh(user),
            ArrivalEvent::T2 { source, user, tree } => {
                if self.graph.node_count() == 0 {
                    return Err(EventError::EmptyGraph);
                }
                existing(source)?;
                fresh(user)?;
                in_tree(tree, source)
            }
            ArrivalEvent::T3 {
                source,
                target,
                tree,
            } => {
                if self.graph.node_count() == 0 {
                    return Err(EventError::EmptyGraph);
                }
                existing(source)?;
                existing(target)?;
                if source == target {
                    return Err(EventError::SelfLoop(source));
                }
                in_tree(tree, source)
            }
        }
    }

    /// Replays a whole event sequence onto a fresh state.
    pub fn replay<'a, I>(events: I, config: StateConfig) -> Result<GraphState, EventError>
    where
        I: IntoIterator<Item = &'a ArrivalEvent>,
    {
        let mut state = GraphState::with_config(config);
        for ev in events {
            state.apply_event(ev)?;
        }
        Ok(state)
    }

    /// Current counts as one progression row. Requires a non-empty graph.
    pub fn snapshot(&self) -> ProgressionRow {
        let lcc = self
            .components
            .largest()
            .expect("snapshot of an empty graph");
        ProgressionRow {
            t: self.time().expect("snapshot of an empty graph"),
            nodes: self.graph.node_count(),
            edges: self.graph.edge_count(),
            trees: self.forest.tree_count(),
            lcc_nodes: lcc.nodes,
            lcc_edges: lcc.edges,
        }
    }
}
