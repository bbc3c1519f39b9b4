//! Closed-form predictions for the growth model.
//!
//! For a graph grown to a fixed node count n, the edge-to-node ratio has
//!
//! - mean 1/(lambda + p) - 1/(n (lambda + p)),
//! - variance (n - 1)(lambda + 1 - p) / (n^2 (lambda + p)^2).
//!
//! For a run of t steps, the edges-per-tree ratio |E_t|/|T_t| has exact mean
//! (1/lambda)(1 - (lambda + 1)^-t), its variance scales like
//! (1 + lambda)^2 / (lambda^3 t), and the normalized statistic
//! lambda^(3/2) sqrt(t)/(lambda + 1) (|E_t|/|T_t| - 1/lambda) converges to a
//! standard normal. These follow from the edge count being binomial in t
//! with success probability 1/(lambda + 1).
//!
//! The module also gives the exact one-step distribution of component sizes:
//! given components (|C_1|, ..., |C_m|) with |V| nodes, the next arrival
//!
//! - creates a singleton with probability lambda/(lambda + 1),
//! - grows C_i by one with probability p/(lambda + 1) * |C_i|/|V|,
//! - merges C_i and C_j with probability
//!   (1 - p)/(lambda + 1) * 2 |C_i||C_j| / (|V|^2 - |V|),
//! - changes nothing with probability
//!   (1 - p)/(lambda + 1) * sum_k (|C_k|^2 - |C_k|) / (|V|^2 - |V|).
//!
//! A rational-arithmetic twin of the one-step distribution exists so the
//! sum-to-one identity can be checked exactly.

use crate::engine::ModelParams;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

pub use crate::stats::{empirical_moments, Moments};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error("lambda + p must be positive")]
    DegenerateLambdaPlusP,
    #[error("lambda must be positive")]
    NonPositiveLambda,
    #[error("node count must be at least 1")]
    NoNodes,
    #[error("time index must be at least 1")]
    ZeroTime,
    #[error("tree count must be at least 1")]
    NoTrees,
    #[error("component list must be non-empty with positive sizes")]
    BadComponentSizes,
}

/// Expected |E|/|V| for a graph grown until it has n nodes.
pub fn expected_edge_density(lambda: f64, p: f64, n: u64) -> Result<f64, TheoryError> {
    if lambda + p <= 0.0 {
        return Err(TheoryError::DegenerateLambdaPlusP);
    }
    if n == 0 {
        return Err(TheoryError::NoNodes);
    }
    let n = n as f64;
    Ok(1.0 / (lambda + p) - 1.0 / (n * (lambda + p)))
}

/// Variance of |E|/|V| for a graph grown until it has n nodes.
pub fn variance_edge_density(lambda: f64, p: f64, n: u64) -> Result<f64, TheoryError> {
    if lambda + p <= 0.0 {
        return Err(TheoryError::DegenerateLambdaPlusP);
    }
    if n == 0 {
        return Err(TheoryError::NoNodes);
    }
    let nf = n as f64;
    Ok((nf - 1.0) * (lambda + 1.0 - p) / (nf * nf * (lambda + p) * (lambda + p)))
}

/// Exact expected |E_t|/|T_t| after t steps.
pub fn expected_edges_per_tree(lambda: f64, t: u64) -> Result<f64, TheoryError> {
    if lambda <= 0.0 {
        return Err(TheoryError::NonPositiveLambda);
    }
    Ok((1.0 - (lambda + 1.0).powf(-(t as f64))) / lambda)
}

/// Asymptotic variance of |E_t|/|T_t| after t steps.
pub fn asymptotic_variance_edges_per_tree(lambda: f64, t: u64) -> Result<f64, TheoryError> {
    if lambda <= 0.0 {
        return Err(TheoryError::NonPositiveLambda);
    }
    if t == 0 {
        return Err(TheoryError::ZeroTime);
    }
    let l1 = lambda + 1.0;
    Ok(l1 * l1 / (lambda.powi(3) * t as f64))
}

/// The CLT normalization of an observed edges-per-tree ratio:
/// lambda^(3/2) sqrt(t) / (lambda + 1) * (edges/trees - 1/lambda).
/// Approaches a standard normal as t grows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedRatio {
    pub value: f64,
}

pub fn normalized_ratio_statistic(
    edges: u64,
    trees: u64,
    lambda: f64,
    t: u64,
) -> Result<NormalizedRatio, TheoryError> {
    if lambda <= 0.0 {
        return Err(TheoryError::NonPositiveLambda);
    }
    if trees == 0 {
        return Err(TheoryError::NoTrees);
    }
    if t == 0 {
        return Err(TheoryError::ZeroTime);
    }
    let ratio = edges as f64 / trees as f64;
    let scale = lambda.powf(1.5) * (t as f64).sqrt() / (lambda + 1.0);
    Ok(NormalizedRatio {
        value: scale * (ratio - 1.0 / lambda),
    })
}

/// What one arrival does to the component-size multiset. Component labels
/// are indices into the input size list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ComponentChange {
    NewSingleton,
    Grow { component: usize },
    Merge { a: usize, b: usize },
    Unchanged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneStepDistribution {
    /// Per-label outcomes with their probabilities, in a fixed order:
    /// NewSingleton, Grow(0..m), Merge pairs (a < b), Unchanged.
    pub outcomes: Vec<(ComponentChange, f64)>,
    /// True when the sizes describe a single-node graph with p < 1: the T3
    /// mass is infeasible there and has been redistributed onto the
    /// feasible arrivals, mirroring the engine's resampling.
    pub t3_redistributed: bool,
}

impl OneStepDistribution {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|(_, p)| p).sum()
    }

    pub fn probability_of(&self, change: ComponentChange) -> f64 {
        self.outcomes
            .iter()
            .find(|(c, _)| *c == change)
            .map_or(0.0, |(_, p)| *p)
    }

    /// Collapses labeled outcomes onto successor size multisets (sorted
    /// ascending), summing probabilities of outcomes that lead to the same
    /// multiset. Useful for display; tests usually stay label-aware.
    pub fn collapse_to_multisets(&self, sizes: &[u64]) -> Vec<(Vec<u64>, f64)> {
        let mut grouped: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        for &(change, prob) in &self.outcomes {
            let mut next: Vec<u64> = match change {
                ComponentChange::NewSingleton => {
                    let mut v = sizes.to_vec();
                    v.push(1);
                    v
                }
                ComponentChange::Grow { component } => {
                    let mut v = sizes.to_vec();
                    v[component] += 1;
                    v
                }
                ComponentChange::Merge { a, b } => {
                    let mut v: Vec<u64> = sizes
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != a && *i != b)
                        .map(|(_, &s)| s)
                        .collect();
                    v.push(sizes[a] + sizes[b]);
                    v
                }
                ComponentChange::Unchanged => sizes.to_vec(),
            };
            next.sort_unstable();
            *grouped.entry(next).or_insert(0.0) += prob;
        }
        grouped.into_iter().collect()
    }
}

fn check_sizes(sizes: &[u64]) -> Result<u64, TheoryError> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(TheoryError::BadComponentSizes);
    }
    Ok(sizes.iter().sum())
}

/// Distribution of the next arrival's effect on component sizes.
pub fn one_step_component_distribution(
    sizes: &[u64],
    params: &ModelParams,
) -> Result<OneStepDistribution, TheoryError> {
    let total = check_sizes(sizes)?;
    let v = total as f64;
    let lambda = params.lambda;
    let p = params.p;
    let m = sizes.len();
    let mut outcomes = Vec::new();

    if total == 1 && p < 1.0 {
        // Single node: T3 cannot fire (no second node), so condition on the
        // feasible arrivals T1 and T2, exactly like the engine's resampling.
        if lambda + p <= 0.0 {
            return Err(TheoryError::DegenerateLambdaPlusP);
        }
        outcomes.push((ComponentChange::NewSingleton, lambda / (lambda + p)));
        outcomes.push((ComponentChange::Grow { component: 0 }, p / (lambda + p)));
        return Ok(OneStepDistribution {
            outcomes,
            t3_redistributed: true,
        });
    }

    let denom = lambda + 1.0;
    outcomes.push((ComponentChange::NewSingleton, lambda / denom));
    for (i, &s) in sizes.iter().enumerate() {
        outcomes.push((
            ComponentChange::Grow { component: i },
            p / denom * s as f64 / v,
        ));
    }
    if total >= 2 {
        let pairs = v * v - v;
        for a in 0..m {
            for b in (a + 1)..m {
                outcomes.push((
                    ComponentChange::Merge { a, b },
                    (1.0 - p) / denom * 2.0 * (sizes[a] * sizes[b]) as f64 / pairs,
                ));
            }
        }
        let within: u64 = sizes.iter().map(|&s| s * s - s).sum();
        outcomes.push((
            ComponentChange::Unchanged,
            (1.0 - p) / denom * within as f64 / pairs,
        ));
    }
    Ok(OneStepDistribution {
        outcomes,
        t3_redistributed: false,
    })
}

/// Exact-rational twin of [`one_step_component_distribution`]; lambda and p
/// arrive as rationals so the probabilities carry no rounding at all.
pub fn one_step_component_distribution_exact(
    sizes: &[u64],
    lambda: &BigRational,
    p: &BigRational,
) -> Result<Vec<(ComponentChange, BigRational)>, TheoryError> {
    let v = check_sizes(sizes)?;
    let m = sizes.len();
    let big = |x: u64| BigRational::from_integer(BigInt::from(x));
    let one = BigRational::one();
    let mut outcomes = Vec::new();

    if v == 1 && p < &one {
        let mass = lambda + p;
        if mass.is_zero() {
            return Err(TheoryError::DegenerateLambdaPlusP);
        }
        outcomes.push((ComponentChange::NewSingleton, lambda / &mass));
        outcomes.push((ComponentChange::Grow { component: 0 }, p / &mass));
        return Ok(outcomes);
    }

    let denom = lambda + &one;
    let vr = big(v);
    outcomes.push((ComponentChange::NewSingleton, lambda / &denom));
    for (i, &s) in sizes.iter().enumerate() {
        outcomes.push((
            ComponentChange::Grow { component: i },
            p / &denom * big(s) / &vr,
        ));
    }
    if v >= 2 {
        let pairs = big(v * v - v);
        let t3 = (&one - p) / &denom;
        for a in 0..m {
            for b in (a + 1)..m {
                outcomes.push((
                    ComponentChange::Merge { a, b },
                    &t3 * big(2 * sizes[a] * sizes[b]) / &pairs,
                ));
            }
        }
        let within: u64 = sizes.iter().map(|&s| s * s - s).sum();
        outcomes.push((ComponentChange::Unchanged, &t3 * big(within) / &pairs));
    }
    Ok(outcomes)
}
