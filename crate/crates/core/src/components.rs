//! Weakly connected components, maintained incrementally.
//!
//! Union-find with path compression and union by size, carrying per-component
//! node counts, edge counts (parallel edges included), and the smallest
//! member id. The largest component is tracked incrementally: components only
//! ever grow, so comparing the touched component against the stored best on
//! every mutation keeps the maximum current without scans.
//!
//! Ordering for "largest": more nodes, then more edges, then smaller minimum
//! member id. The minimum member id is the canonical representative; unlike
//! the internal union-find root it does not depend on the merge order, which
//! lets a from-scratch recomputation agree with the incremental answer.

use crate::graph::UserId;

/// Aggregates of one component, keyed by its canonical (minimum) member id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentStats {
    pub nodes: u64,
    pub edges: u64,
    pub min_user: UserId,
}

impl ComponentStats {
    /// Edge density |E_C| / |C| of the component.
    pub fn density(&self) -> f64 {
        self.edges as f64 / self.nodes as f64
    }

    /// True when this component outranks `other` as the largest.
    fn beats(&self, other: &ComponentStats) -> bool {
        (self.nodes, self.edges, std::cmp::Reverse(self.min_user))
            > (other.nodes, other.edges, std::cmp::Reverse(other.min_user))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentPartition {
    parent: Vec<u32>,
    /// Valid at roots only.
    nodes: Vec<u64>,
    edges: Vec<u64>,
    min_user: Vec<u32>,
    component_count: u64,
    /// Snapshot of the current largest component; kept fresh by
    /// `refresh_best` after every mutation.
    best: Option<ComponentStats>,
    best_root: u32,
}

impl Default for ComponentPartition {
    fn default() -> Self {
        Self::new()
    }
}

impl ComponentPartition {
    pub fn new() -> Self {
        Self {
            parent: Vec::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
            min_user: Vec::new(),
            component_count: 0,
            best: None,
            best_root: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn component_count(&self) -> u64 {
        self.component_count
    }

    /// Adds `user` as a fresh singleton. Ids must arrive densely.
    pub fn add_node(&mut self, user: UserId) {
        debug_assert_eq!(user.index(), self.parent.len(), "ids arrive densely");
        let i = self.parent.len() as u32;
        self.parent.push(i);
        self.nodes.push(1);
        self.edges.push(0);
        self.min_user.push(user.0);
        self.component_count += 1;
        self.refresh_best(i);
    }

    /// Records an edge between two existing users, merging their components
    /// if they differ.
    pub fn add_edge(&mut self, a: UserId, b: UserId) {
        let ra = self.find(a.index() as u32);
        let rb = self.find(b.index() as u32);
        if ra == rb {
            self.edges[ra as usize] += 1;
            self.refresh_best(ra);
            return;
        }
        // Union by size keeps find paths short; aggregates move to the
        // surviving root.
        let (big, small) = if self.nodes[ra as usize] >= self.nodes[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.nodes[big as usize] += self.nodes[small as usize];
        self.edges[big as usize] += self.edges[small as usize] + 1;
        self.min_user[big as usize] =
            self.min_user[big as usize].min(self.min_user[small as usize]);
        self.component_count -= 1;
        self.refresh_best(big);
    }

    fn find(&mut self, mut i: u32) -> u32 {
        while self.parent[i as usize] != i {
            let grand = self.parent[self.parent[i as usize] as usize];
            self.parent[i as usize] = grand;
            i = grand;
        }
        i
    }

    fn stats_at(&self, root: u32) -> ComponentStats {
        ComponentStats {
            nodes: self.nodes[root as usize],
            edges: self.edges[root as usize],
            min_user: UserId(self.min_user[root as usize]),
        }
    }

    fn refresh_best(&mut self, root: u32) {
        let cand = self.stats_at(root);
        match &self.best {
            // The best component can only change through a mutation that
            // touches it; if the mutated root absorbed the old best (or is
            // it), its stats supersede the snapshot.
            Some(prev) if self.best_root != root && !cand.beats(prev) => {}
            _ => {
                self.best = Some(cand);
                self.best_root = root;
            }
        }
    }

    /// Stats of the largest component; None on an empty partition.
    pub fn largest(&self) -> Option<ComponentStats> {
        self.best
    }

    /// Stats of the component containing `user`.
    pub fn component_of(&mut self, user: UserId) -> ComponentStats {
        let r = self.find(user.index() as u32);
        self.stats_at(r)
    }

    /// True when both users are in the same component.
    pub fn connected(&mut self, a: UserId, b: UserId) -> bool {
        self.find(a.index() as u32) == self.find(b.index() as u32)
    }

    /// All component stats, sorted by canonical member id. O(n); meant for
    /// reports and tests, not the hot path.
    pub fn all_components(&mut self) -> Vec<ComponentStats> {
        let mut out = Vec::new();
        for i in 0..self.parent.len() as u32 {
            if self.find(i) == i {
                out.push(self.stats_at(i));
            }
        }
        out.sort_by_key(|c| c.min_user);
        out
    }
}
