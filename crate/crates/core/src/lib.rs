//! Growth model for retweet graphs.
//!
//! A retweet graph is a directed multigraph in which an edge (u, v) records
//! that user v retweeted a message of user u. The graph grows one arrival at
//! a time; every arrival is one of three types:
//!
//! - T1: a new user posts a new message (probability lambda / (lambda + 1)),
//! - T2: a new user retweets an existing message (probability p / (lambda + 1)),
//! - T3: an existing user retweets an existing message
//!   (probability (1 - p) / (lambda + 1)).
//!
//! Messages live in a forest with one tree per T1 arrival. Retweet sources
//! are drawn by first picking a tree proportionally to its size and then,
//! within the tree, picking the root with probability q or a non-root member
//! with probability proportional to its child count plus one. This "superstar"
//! bias concentrates retweets on the original author while still letting busy
//! retweeters attract followers of their own.
//!
//! The crate bundles:
//!
//! - incremental graph state: arrival counters, message forest, and a
//!   union-find component partition with per-component node/edge counts
//!   ([`graph`], [`forest`], [`components`], [`state`], [`progression`]),
//! - the growth engine itself with deterministic seeded sampling ([`engine`]),
//! - closed-form expectations, variances, a CLT normalization, and the exact
//!   one-step component-size distribution ([`theory`]),
//! - moment-based parameter estimators ([`estimation`]),
//! - Monte Carlo harnesses: repeated runs, parameter sweeps, seeded replays,
//!   and a self-verification battery ([`experiments`], [`verify`]),
//! - an ingest pipeline that classifies raw tweet records into arrival events
//!   ([`ingest`]), and a JSONL event-log format shared by the engine and
//!   ingest ([`event_log`]).

pub mod components;
pub mod engine;
pub mod estimation;
pub mod event_log;
pub mod experiments;
pub mod forest;
pub mod graph;
pub mod ingest;
pub mod progression;
pub mod sampling;
pub mod state;
pub mod stats;
pub mod theory;
pub mod verify;

pub use engine::{simulate, ModelParams, SimOptions, SimulationTrace, StopCondition};
pub use graph::{ArrivalEvent, TreeId, UserId};
pub use state::GraphState;
