//! Self-check battery: the model's closed-form claims measured against
//! simulation, reported as per-claim pass/fail records.
//!
//! Each claim derives its randomness from the suite's base seed plus a fixed
//! per-claim offset, so running one claim in isolation reproduces exactly
//! what the full suite would compute for it.

use crate::engine::{simulate, ModelParams, RunSeed, SimOptions, StopCondition};
use crate::estimation::{estimate_lambda, estimate_p};
use crate::experiments::{
    monte_carlo, parameter_sweep, replay_from_events, MonteCarloConfig, ReplayConfig, RunMetrics,
    SweepConfig,
};
use crate::graph::{ArrivalEvent, TreeId, UserId};
use crate::progression::Checkpoints;
use crate::state::{GraphState, StateConfig};
use crate::stats::{chi_square_gof, empirical_moments, ks_test_standard_normal, variance_band};
use crate::theory::{
    asymptotic_variance_edges_per_tree, expected_edge_density, expected_edges_per_tree,
    normalized_ratio_statistic, one_step_component_distribution,
    one_step_component_distribution_exact, variance_edge_density, ComponentChange,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

/// Base seed used by the CLI and tests when none is given.
pub const DEFAULT_SEED: u64 = 42;

/// Acceptance window for one claim: either symmetric around the theoretical
/// value or an explicit interval the empirical value must fall in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Tolerance {
    Abs(f64),
    Band([f64; 2]),
}

impl Tolerance {
    pub fn check(&self, theoretical: f64, empirical: f64) -> bool {
        match *self {
            Tolerance::Abs(tol) => (empirical - theoretical).abs() <= tol,
            Tolerance::Band([lo, hi]) => lo <= empirical && empirical <= hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimRecord {
    pub claim: String,
    pub theoretical: f64,
    pub empirical: f64,
    pub tolerance: Tolerance,
    pub pass: bool,
}

impl ClaimRecord {
    fn checked(claim: &str, theoretical: f64, empirical: f64, tolerance: Tolerance) -> Self {
        Self {
            claim: claim.to_string(),
            theoretical,
            empirical,
            tolerance,
            pass: tolerance.check(theoretical, empirical),
        }
    }
}

fn params(lambda: f64, p: f64, q: f64) -> ModelParams {
    ModelParams::new(lambda, p, q).expect("battery parameters are valid")
}

/// Edge density at the 200th node: sample mean vs the closed form and
/// sample variance vs a 99% chi-square band around the closed-form variance.
pub fn density_at_target_claims(base_seed: u64) -> [ClaimRecord; 2] {
    let n = 200;
    let runs = 1000;
    let summary = monte_carlo(&MonteCarloConfig {
        params: params(0.5, 0.5, 0.9),
        stop: StopCondition::Nodes(n),
        runs,
        base_seed: base_seed.wrapping_add(1),
        state_config: StateConfig::default(),
    })
    .expect("density experiment");
    let m = summary
        .moments(RunMetrics::edge_density)
        .expect("1000 runs");

    let mean_theory = expected_edge_density(0.5, 0.5, n).expect("valid parameters");
    let var_theory = variance_edge_density(0.5, 0.5, n).expect("valid parameters");
    let mean_tol = 3.0 * (var_theory / runs as f64).sqrt();
    let (lo, hi) = variance_band(runs as usize, var_theory, 0.99).expect("band");

    [
        ClaimRecord::checked(
            "edge density at node 200: sample mean matches closed form",
            mean_theory,
            m.mean,
            Tolerance::Abs(mean_tol),
        ),
        ClaimRecord::checked(
            "edge density at node 200: sample variance in 99% chi-square band",
            var_theory,
            m.variance,
            Tolerance::Band([lo, hi]),
        ),
    ]
}

/// Mean of edges per message tree at t=500 vs the exact expectation.
pub fn edges_per_tree_mean_claim(base_seed: u64) -> ClaimRecord {
    let summary = monte_carlo(&MonteCarloConfig {
        params: params(1.0, 0.5, 0.9),
        stop: StopCondition::Steps(500),
        runs: 1000,
        base_seed: base_seed.wrapping_add(3),
        state_config: StateConfig::default(),
    })
    .expect("edges-per-tree experiment");
    let m = summary
        .moments(RunMetrics::edges_per_tree)
        .expect("1000 runs");
    let theory = expected_edges_per_tree(1.0, 500).expect("valid parameters");
    ClaimRecord::checked(
        "edges per tree at t=500: sample mean matches exact expectation",
        theory,
        m.mean,
        Tolerance::Abs(3.0 * m.se),
    )
}

/// Sample variance of edges per tree at t=2000, scaled by the asymptotic
/// rate, should sit near 1.
pub fn edges_per_tree_variance_claim(base_seed: u64) -> ClaimRecord {
    let lambda = 1.0;
    let t = 2000;
    let summary = monte_carlo(&MonteCarloConfig {
        params: params(lambda, 0.5, 0.9),
        stop: StopCondition::Steps(t),
        runs: 3000,
        base_seed: base_seed.wrapping_add(4),
        state_config: StateConfig::default(),
    })
    .expect("variance experiment");
    let m = summary
        .moments(RunMetrics::edges_per_tree)
        .expect("3000 runs");
    let asymptotic = asymptotic_variance_edges_per_tree(lambda, t).expect("valid parameters");
    ClaimRecord::checked(
        "edges per tree at t=2000: sample variance over asymptotic variance near 1",
        1.0,
        m.variance / asymptotic,
        Tolerance::Band([0.85, 1.15]),
    )
}

/// The normalized edges-per-tree statistic at t=5000 should look standard
/// normal under a KS test at the 1% level.
pub fn normality_claim(base_seed: u64) -> ClaimRecord {
    let lambda = 1.0;
    let t = 5000;
    let summary = monte_carlo(&MonteCarloConfig {
        params: params(lambda, 0.5, 0.9),
        stop: StopCondition::Steps(t),
        runs: 2000,
        base_seed: base_seed.wrapping_add(5),
        state_config: StateConfig::default(),
    })
    .expect("normality experiment");
    let z: Vec<f64> = summary
        .per_run
        .iter()
        .map(|m| {
            normalized_ratio_statistic(m.edges, m.trees, lambda, t)
                .expect("valid inputs")
                .value
        })
        .collect();
    let ks = ks_test_standard_normal(&z).expect("2000 samples");
    ClaimRecord::checked(
        "normalized edges-per-tree statistic at t=5000: KS vs standard normal",
        0.01,
        ks.p_value,
        Tolerance::Band([0.01, 1.0]),
    )
}

/// Two message trees spanning components of sizes 2 and 3, built from five
/// arrivals. Trees and components coincide, so the one-step component
/// distribution applies exactly.
fn two_component_fixture() -> GraphState {
    let events = [
        ArrivalEvent::T1 { user: UserId(0) },
        ArrivalEvent::T2 {
            source: UserId(0),
            user: UserId(1),
            tree: TreeId(0),
        },
        ArrivalEvent::T1 { user: UserId(2) },
        ArrivalEvent::T2 {
            source: UserId(2),
            user: UserId(3),
            tree: TreeId(1),
        },
        ArrivalEvent::T2 {
            source: UserId(2),
            user: UserId(4),
            tree: TreeId(1),
        },
    ];
    let mut state = GraphState::new();
    for event in &events {
        state.apply_event(event).expect("fixture events are valid");
    }
    state
}

/// Category of one engine step out of the (2,3) fixture. Users 0-1 form the
/// 2-component, users 2-4 the 3-component.
fn classify_step(event: &ArrivalEvent) -> usize {
    let in_small = |u: UserId| u.index() < 2;
    match *event {
        ArrivalEvent::T1 { .. } => 0,
        ArrivalEvent::T2 { source, .. } => {
            if in_small(source) {
                1
            } else {
                2
            }
        }
        ArrivalEvent::T3 { source, target, .. } => {
            if in_small(source) != in_small(target) {
                3
            } else {
                4
            }
        }
    }
}

/// One-step component distribution against 10^5 single engine steps from the
/// (2,3) fixture, plus an exact-arithmetic total-probability check.
pub fn one_step_distribution_claims(base_seed: u64) -> [ClaimRecord; 2] {
    let lambda = 1.0;
    let p = 0.5;
    let fixture = two_component_fixture();
    let start_t = fixture.time().expect("fixture has events");
    let model = params(lambda, p, 0.9);
    let options = SimOptions {
        checkpoints: Checkpoints::FinalOnly,
        keep_events: true,
        state_config: StateConfig::default(),
    };
    let samples: u64 = 100_000;
    let counts = (0..samples)
        .into_par_iter()
        .map(|i| {
            let trace = simulate(
                &model,
                Some(fixture.clone()),
                StopCondition::Steps(start_t + 1),
                RunSeed::with_stream(base_seed.wrapping_add(6), i),
                &options,
            )
            .expect("one step");
            assert_eq!(trace.events.len(), 1, "exactly one new arrival");
            classify_step(&trace.events[0].event)
        })
        .fold(
            || [0u64; 5],
            |mut acc, idx| {
                acc[idx] += 1;
                acc
            },
        )
        .reduce(|| [0u64; 5], |a, b| std::array::from_fn(|i| a[i] + b[i]));

    let dist = one_step_component_distribution(&[2, 3], &model).expect("valid sizes");
    let expected = [
        dist.probability_of(ComponentChange::NewSingleton),
        dist.probability_of(ComponentChange::Grow { component: 0 }),
        dist.probability_of(ComponentChange::Grow { component: 1 }),
        dist.probability_of(ComponentChange::Merge { a: 0, b: 1 }),
        dist.probability_of(ComponentChange::Unchanged),
    ];
    let test = chi_square_gof(&counts, &expected).expect("valid categories");

    let lambda_r = BigRational::from_integer(BigInt::from(1));
    let p_r = BigRational::new(BigInt::from(1), BigInt::from(2));
    let exact =
        one_step_component_distribution_exact(&[2, 3], &lambda_r, &p_r).expect("valid sizes");
    let total = exact
        .iter()
        .fold(BigRational::zero(), |acc, (_, prob)| acc + prob);

    [
        ClaimRecord::checked(
            "one-step component distribution: chi-square of engine step frequencies",
            0.001,
            test.p_value,
            Tolerance::Band([0.001, 1.0]),
        ),
        ClaimRecord {
            claim: "one-step component distribution: exact probabilities sum to 1".to_string(),
            theoretical: 1.0,
            empirical: total.to_f64().expect("finite"),
            tolerance: Tolerance::Abs(0.0),
            pass: total.is_one(),
        },
    ]
}

/// Plug-in estimators at t=20000 recover the true (lambda, p) in every one
/// of 20 runs; the reported value is the worst run's estimate.
pub fn estimator_recovery_claims(base_seed: u64) -> [ClaimRecord; 2] {
    let truth = (0.4, 0.6);
    let summary = monte_carlo(&MonteCarloConfig {
        params: params(truth.0, truth.1, 0.9),
        stop: StopCondition::Steps(20_000),
        runs: 20,
        base_seed: base_seed.wrapping_add(7),
        state_config: StateConfig::default(),
    })
    .expect("recovery experiment");

    let mut worst_lambda = truth.0;
    let mut worst_p = truth.1;
    for m in &summary.per_run {
        let lh = estimate_lambda(m.trees, m.edges).expect("edges exist at t=20000");
        let ph = estimate_p(m.nodes, m.trees, m.edges)
            .expect("edges exist at t=20000")
            .value;
        if (lh - truth.0).abs() > (worst_lambda - truth.0).abs() {
            worst_lambda = lh;
        }
        if (ph - truth.1).abs() > (worst_p - truth.1).abs() {
            worst_p = ph;
        }
    }

    [
        ClaimRecord::checked(
            "arrival-rate estimator at t=20000: worst of 20 runs within 0.02",
            truth.0,
            worst_lambda,
            Tolerance::Abs(0.02),
        ),
        ClaimRecord::checked(
            "new-user-retweet estimator at t=20000: worst of 20 runs within 0.015",
            truth.1,
            worst_p,
            Tolerance::Abs(0.015),
        ),
    ]
}

/// Coarse sweep: mean edge density approximates 1/(lambda+p) when
/// lambda+p >= 1, and decreases strictly in lambda at p=0.5.
pub fn sweep_claims(base_seed: u64) -> [ClaimRecord; 2] {
    let grid = vec![0.25, 0.5, 0.75, 1.0];
    let cells = parameter_sweep(&SweepConfig {
        lambda_grid: grid.clone(),
        p_grid: grid,
        q: 0.9,
        steps: 1000,
        runs: 50,
        base_seed: base_seed.wrapping_add(8),
        state_config: StateConfig::default(),
    })
    .expect("sweep experiment");

    let mut max_rel_err: f64 = 0.0;
    for cell in &cells {
        let sum = cell.lambda + cell.p;
        if sum >= 1.0 - 1e-9 {
            let mean = cell.summary.stat(RunMetrics::edge_density).mean;
            max_rel_err = max_rel_err.max((mean * sum - 1.0).abs());
        }
    }

    let column: Vec<f64> = cells
        .iter()
        .filter(|c| (c.p - 0.5).abs() < 1e-9)
        .map(|c| c.summary.stat(RunMetrics::edge_density).mean)
        .collect();
    let violations = column.windows(2).filter(|w| w[1] >= w[0]).count();

    [
        ClaimRecord::checked(
            "sweep: max relative error of mean edge density vs 1/(lambda+p) over lambda+p>=1",
            0.0,
            max_rel_err,
            Tolerance::Abs(0.05),
        ),
        ClaimRecord::checked(
            "sweep: mean edge density strictly decreasing in lambda at p=0.5 (violations)",
            0.0,
            violations as f64,
            Tolerance::Abs(0.0),
        ),
    ]
}

/// Structural behavior at the parameter extremes: p=1 keeps every component
/// a tree (and never densifies), q=1 sends every retweet to a root, and a
/// huge lambda starves the graph of edges.
pub fn degenerate_claims(base_seed: u64) -> [ClaimRecord; 3] {
    let seed = base_seed.wrapping_add(9);

    // p = 1: no T3 arrivals, so components are exactly the message trees.
    let mut p1 = simulate(
        &params(0.5, 1.0, 0.9),
        None,
        StopCondition::Steps(5000),
        RunSeed::with_stream(seed, 0),
        &SimOptions {
            checkpoints: Checkpoints::Every(1),
            keep_events: false,
            state_config: StateConfig::default(),
        },
    )
    .expect("p=1 run");
    let mut tree_violations = p1
        .state
        .components
        .all_components()
        .iter()
        .filter(|c| c.edges != c.nodes - 1)
        .count() as f64;
    if p1.progression.densification_time().is_some() {
        tree_violations += 1.0;
    }

    // q = 1: every retweet source must be the root of its tree.
    let q1 = simulate(
        &params(0.5, 0.5, 1.0),
        None,
        StopCondition::Steps(5000),
        RunSeed::with_stream(seed, 1),
        &SimOptions {
            checkpoints: Checkpoints::FinalOnly,
            keep_events: true,
            state_config: StateConfig::default(),
        },
    )
    .expect("q=1 run");
    let mut roots: Vec<UserId> = Vec::new();
    let mut root_violations = 0u64;
    for te in &q1.events {
        match te.event {
            ArrivalEvent::T1 { user } => roots.push(user),
            ArrivalEvent::T2 { source, tree, .. } | ArrivalEvent::T3 { source, tree, .. } => {
                if roots[tree.index()] != source {
                    root_violations += 1;
                }
            }
        }
    }

    // Large lambda: almost every arrival is a fresh tweet, so edges are rare.
    let sparse = simulate(
        &params(1000.0, 0.5, 0.9),
        None,
        StopCondition::Steps(10_000),
        RunSeed::with_stream(seed, 2),
        &SimOptions {
            checkpoints: Checkpoints::FinalOnly,
            keep_events: false,
            state_config: StateConfig::default(),
        },
    )
    .expect("large-lambda run");
    let sparse_density = RunMetrics::from_trace(&sparse).edge_density();

    [
        ClaimRecord::checked(
            "p=1: every component is a tree and the run never densifies (violations)",
            0.0,
            tree_violations,
            Tolerance::Abs(0.0),
        ),
        ClaimRecord::checked(
            "q=1: every retweet source is its tree's root (violations)",
            0.0,
            root_violations as f64,
            Tolerance::Abs(0.0),
        ),
        ClaimRecord::checked(
            "lambda=1000: edge density stays below 0.01 at t=10000",
            0.0,
            sparse_density,
            Tolerance::Abs(0.01),
        ),
    ]
}

/// Replay protocol closes the loop: branch a 5000-node reference at its
/// densification point with re-estimated parameters; the reference's final
/// LCC density must land inside the replays' 5-95 percentile band.
pub fn replay_claim(base_seed: u64) -> ClaimRecord {
    let seed = base_seed.wrapping_add(10);
    let truth = simulate(
        &params(0.3, 0.7, 0.9),
        None,
        StopCondition::Nodes(5000),
        RunSeed::new(seed),
        &SimOptions {
            checkpoints: Checkpoints::FinalOnly,
            keep_events: true,
            state_config: StateConfig::default(),
        },
    )
    .expect("reference run");
    let report = replay_from_events(
        &truth.events,
        &ReplayConfig {
            q: 0.9,
            params_override: None,
            branch_step: None,
            target_nodes: None,
            runs: 50,
            base_seed: seed.wrapping_add(1),
            state_config: StateConfig::default(),
        },
    )
    .expect("replay protocol");

    let reference = report.reference.lcc_density();
    let (lo, hi) = report.percentile_band(RunMetrics::lcc_density, 5.0, 95.0);
    let mean = empirical_moments(&report.per_run.iter().map(RunMetrics::lcc_density).collect::<Vec<_>>())
        .expect("50 runs")
        .mean;
    ClaimRecord::checked(
        "replay: reference LCC density inside the replays' 5-95 percentile band",
        mean,
        reference,
        Tolerance::Band([lo, hi]),
    )
}

/// The whole battery, in a fixed order.
pub fn run_full_suite(base_seed: u64) -> Vec<ClaimRecord> {
    let mut records = Vec::new();
    records.extend(density_at_target_claims(base_seed));
    records.push(edges_per_tree_mean_claim(base_seed));
    records.push(edges_per_tree_variance_claim(base_seed));
    records.push(normality_claim(base_seed));
    records.extend(one_step_distribution_claims(base_seed));
    records.extend(estimator_recovery_claims(base_seed));
    records.extend(sweep_claims(base_seed));
    records.extend(degenerate_claims(base_seed));
    records.push(replay_claim(base_seed));
    records
}
