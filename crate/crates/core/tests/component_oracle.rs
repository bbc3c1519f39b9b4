//! The incremental component tracker against a from-scratch recomputation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use retweet_graph::components::{ComponentPartition, ComponentStats};
use retweet_graph::engine::{simulate, ModelParams, RunSeed, SimOptions, StopCondition};
use retweet_graph::state::GraphState;
use retweet_graph::UserId;

/// Components recomputed by full traversal: per component (nodes, edges,
/// smallest member), sorted by smallest member.
fn brute_force(node_count: usize, edges: &[(UserId, UserId)]) -> Vec<ComponentStats> {
    let mut adjacency = vec![Vec::new(); node_count];
    for &(a, b) in edges {
        adjacency[a.index()].push(b.index());
        adjacency[b.index()].push(a.index());
    }
    let mut assigned = vec![usize::MAX; node_count];
    let mut stats = Vec::new();
    for start in 0..node_count {
        if assigned[start] != usize::MAX {
            continue;
        }
        let label = stats.len();
        let mut stack = vec![start];
        assigned[start] = label;
        let mut nodes = 0u64;
        while let Some(u) = stack.pop() {
            nodes += 1;
            for &v in &adjacency[u] {
                if assigned[v] == usize::MAX {
                    assigned[v] = label;
                    stack.push(v);
                }
            }
        }
        stats.push(ComponentStats {
            nodes,
            edges: 0,
            min_user: UserId(start as u32),
        });
    }
    for &(a, _) in edges {
        stats[assigned[a.index()]].edges += 1;
    }
    stats
}

fn edge_pairs(state: &GraphState) -> Vec<(UserId, UserId)> {
    state
        .graph
        .edges()
        .iter()
        .map(|e| (e.source, e.target))
        .collect()
}

#[test]
fn incremental_partition_matches_recomputation_throughout_a_run() {
    let params = ModelParams::new(0.5, 0.5, 0.9).unwrap();
    let trace = simulate(
        &params,
        None,
        StopCondition::Steps(2000),
        RunSeed::new(7),
        &SimOptions::default(),
    )
    .unwrap();

    let mut replay = GraphState::new();
    for (i, te) in trace.events.iter().enumerate() {
        replay.apply_event(&te.event).unwrap();
        if i % 100 != 0 && i + 1 != trace.events.len() {
            continue;
        }
        let expected = brute_force(
            replay.graph.node_count() as usize,
            &edge_pairs(&replay),
        );
        assert_eq!(replay.components.all_components(), expected, "at event {i}");
        assert_eq!(
            replay.components.largest().unwrap(),
            *expected
                .iter()
                .max_by_key(|c| (c.nodes, c.edges, std::cmp::Reverse(c.min_user)))
                .unwrap(),
            "largest-component tie-break at event {i}"
        );
    }
}

#[test]
fn partition_is_invariant_to_edge_insertion_order() {
    let params = ModelParams::new(0.4, 0.6, 0.9).unwrap();
    let trace = simulate(
        &params,
        None,
        StopCondition::Steps(800),
        RunSeed::new(11),
        &SimOptions::default(),
    )
    .unwrap();
    let node_count = trace.state.graph.node_count() as usize;
    let mut edges = edge_pairs(&trace.state);

    let build = |edges: &[(UserId, UserId)]| {
        let mut partition = ComponentPartition::new();
        for u in 0..node_count {
            partition.add_node(UserId(u as u32));
        }
        for &(a, b) in edges {
            partition.add_edge(a, b);
        }
        partition
    };
    let mut reference = build(&edges);
    let reference_components = reference.all_components();
    let reference_largest = reference.largest();

    let mut rng = ChaCha12Rng::seed_from_u64(99);
    for _ in 0..20 {
        edges.shuffle(&mut rng);
        let mut shuffled = build(&edges);
        assert_eq!(shuffled.all_components(), reference_components);
        assert_eq!(shuffled.largest(), reference_largest);
    }
}
