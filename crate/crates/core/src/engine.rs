//! The growth engine: seeded, deterministic simulation of arrivals.
//!
//! Each step draws an arrival type (T1 with probability lambda/(lambda+1),
//! T2 with p/(lambda+1), T3 with (1-p)/(lambda+1)), fills in the concrete
//! users through the forest's weighted selections, and applies the event.
//! A T3 draw on a graph with a single node is infeasible (the target pool
//! V minus the source is empty) and the type is resampled, which conditions
//! the step on feasibility.
//!
//! Randomness comes from ChaCha12 seeded with a base seed; independent runs
//! use the generator's stream counter, so (base seed, stream) fully names a
//! run and replays are bit-identical.

use crate::event_log::TimedEvent;
use crate::graph::{ArrivalEvent, ArrivalType, EventError, UserId};
use crate::progression::{Checkpoints, Progression};
use crate::state::{GraphState, StateConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Rate of new messages relative to retweets; P(T1) = lambda/(lambda+1).
    pub lambda: f64,
    /// Share of retweets made by new users; P(T2) = p/(lambda+1).
    pub p: f64,
    /// Probability that a retweet source is the tree root.
    pub q: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, p: f64, q: f64) -> Result<Self, EngineError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(EngineError::InvalidParams(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        for (name, v) in [("p", p), ("q", q)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(EngineError::InvalidParams(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(Self { lambda, p, q })
    }
}

/// Identity of one run's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeed {
    pub base: u64,
    pub stream: u64,
}

impl RunSeed {
    pub fn new(base: u64) -> Self {
        Self { base, stream: 0 }
    }

    pub fn with_stream(base: u64, stream: u64) -> Self {
        Self { base, stream }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.base);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopCondition {
    /// Run until the time index reaches t (the initial node is t = 0).
    Steps(u64),
    /// Run until the graph first has n nodes; the step where that happens
    /// is recorded as tau_n.
    Nodes(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Progression recording cadence; the final row is always recorded.
    pub checkpoints: Checkpoints,
    /// Keep the generated events in the trace. Monte Carlo harnesses that
    /// only read final counts turn this off to save memory.
    pub keep_events: bool,
    pub state_config: StateConfig,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            checkpoints: Checkpoints::Every(1),
            keep_events: true,
            state_config: StateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub params: ModelParams,
    pub seed: RunSeed,
    pub stop: StopCondition,
    /// Events generated by this call, including the initial T1 when the run
    /// started from an empty state (seed-graph history is not repeated).
    pub events: Vec<TimedEvent>,
    pub state: GraphState,
    pub progression: Progression,
    /// Step at which a Nodes target was reached.
    pub tau_n: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("no feasible arrival type: lambda = 0 and p = 0 cannot grow or rewire this graph")]
    NoFeasibleArrival,
    #[error("node target {target} is below the current node count {current}")]
    NodeTargetBelowSeed { target: u64, current: u64 },
    #[error("node target {target} unreachable: lambda = 0 and p = 0 never add nodes")]
    NodeTargetFrozen { target: u64 },
    #[error("simulation produced a rejected event: {0}")]
    Event(#[from] EventError),
}

/// Draws an arrival type with the model probabilities.
pub fn sample_arrival_type<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> ArrivalType {
    let x = rng.gen::<f64>() * (params.lambda + 1.0);
    if x < params.lambda {
        ArrivalType::T1
    } else if x < params.lambda + params.p {
        ArrivalType::T2
    } else {
        ArrivalType::T3
    }
}

/// Uniform draw over all users except `source`; requires >= 2 nodes.
pub fn select_t3_target<R: Rng + ?Sized>(
    state: &GraphState,
    source: UserId,
    rng: &mut R,
) -> UserId {
    let n = state.graph.node_count();
    debug_assert!(n >= 2, "T3 needs a second node");
    // Draw from n-1 slots and skip over the source: exact uniform on
    // V \ {source} with a single integer draw.
    let raw = rng.gen_range(0..n - 1) as u32;
    if raw >= source.0 {
        UserId(raw + 1)
    } else {
        UserId(raw)
    }
}

/// Generates and applies one arrival, resampling the type while the drawn
/// one is infeasible (T2/T3 need an existing user, T3 needs two).
pub fn step<R: Rng + ?Sized>(
    state: &mut GraphState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<ArrivalEvent, EngineError> {
    let nodes = state.graph.node_count();
    let feasible_mass = params.lambda
        + if nodes >= 1 { params.p } else { 0.0 }
        + if nodes >= 2 { 1.0 - params.p } else { 0.0 };
    if feasible_mass <= 0.0 {
        return Err(EngineError::NoFeasibleArrival);
    }
    let event = loop {
        match sample_arrival_type(params, rng) {
            ArrivalType::T1 => {
                break ArrivalEvent::T1 {
                    user: state.graph.next_user(),
                }
            }
            ArrivalType::T2 if nodes >= 1 => {
                let tree = state.forest.select_tree(rng);
                let source = state
                    .forest
                    .tree(tree)
                    .expect("selected tree exists")
                    .select_source(params.q, rng);
                break ArrivalEvent::T2 {
                    source,
                    user: state.graph.next_user(),
                    tree,
                };
            }
            ArrivalType::T3 if nodes >= 2 => {
                let tree = state.forest.select_tree(rng);
                let source = state
                    .forest
                    .tree(tree)
                    .expect("selected tree exists")
                    .select_source(params.q, rng);
                let target = select_t3_target(state, source, rng);
                break ArrivalEvent::T3 {
                    source,
                    target,
                    tree,
                };
            }
            _ => continue, // infeasible draw: condition on feasibility
        }
    };
    state.apply_event(&event)?;
    Ok(event)
}

/// Runs the growth process from an empty graph or a seed state until the
/// stop condition holds. The returned trace is a pure function of
/// (params, start, stop, seed, options).
pub fn simulate(
    params: &ModelParams,
    start: Option<GraphState>,
    stop: StopCondition,
    seed: RunSeed,
    options: &SimOptions,
) -> Result<SimulationTrace, EngineError> {
    let mut rng = seed.rng();
    let mut events = Vec::new();
    let mut progression = Progression::new();

    let mut state = match start {
        Some(s) => s,
        None => GraphState::with_config(options.state_config),
    };
    if state.time().is_none() {
        // The initial node counts as a T1 arrival at t = 0.
        let ev = ArrivalEvent::T1 {
            user: state.graph.next_user(),
        };
        state.apply_event(&ev)?;
        if options.keep_events {
            events.push(TimedEvent { t: 0, event: ev });
        }
    }
    if let StopCondition::Nodes(n) = stop {
        let current = state.graph.node_count();
        if n < current {
            return Err(EngineError::NodeTargetBelowSeed { target: n, current });
        }
        if n > current && params.lambda == 0.0 && params.p == 0.0 {
            return Err(EngineError::NodeTargetFrozen { target: n });
        }
    }

    if options.checkpoints.wants(state.time().expect("initialized")) {
        progression.push(state.snapshot());
    }

    let done = |state: &GraphState| match stop {
        StopCondition::Steps(t) => state.time().expect("initialized") >= t,
        StopCondition::Nodes(n) => state.graph.node_count() >= n,
    };
    while !done(&state) {
        let event = step(&mut state, params, &mut rng)?;
        let t = state.time().expect("initialized");
        if options.keep_events {
            events.push(TimedEvent { t, event });
        }
        if options.checkpoints.wants(t) {
            progression.push(state.snapshot());
        }
    }
    // The final row is always present, exactly once even when the run ended
    // on a checkpoint (or ran zero steps).
    let final_t = state.time().expect("initialized");
    if progression.last().map(|r| r.t) != Some(final_t) {
        progression.push(state.snapshot());
    }

    let tau_n = match stop {
        StopCondition::Nodes(_) => state.time(),
        StopCondition::Steps(_) => None,
    };
    Ok(SimulationTrace {
        params: *params,
        seed,
        stop,
        events,
        state,
        progression,
        tau_n,
    })
}
