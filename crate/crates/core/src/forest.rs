//! Message forest: one tree per original message.
//!
//! Every T1 arrival roots a new tree. A retweet attaches the retweeter to the
//! retweeted tree: T2 always adds a fresh member, T3 adds the target as a
//! member only if it is not one already (a repeat retweet adds an edge to the
//! graph and bumps the source's child count, but not the tree size). Users
//! can therefore belong to several trees, and each membership carries its own
//! parent and child count.
//!
//! Retweet sources are selected in two stages with exact integer-weight
//! draws: a tree proportional to its member count, then within the tree the
//! root with probability q or a non-root member w with probability
//! proportional to children(w) + 1.

use crate::graph::{TreeId, UserId};
use crate::sampling::WeightedIndexTree;
use rand::Rng;
use std::collections::HashMap;

/// A non-root tree member. The selection weight of a member is
/// `children + 1`, kept in sync inside the tree's weight structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeMember {
    pub user: UserId,
    /// Member the user retweeted when first joining this tree.
    pub parent: UserId,
    /// Retweets of this user's copy within this tree (with multiplicity).
    pub children: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageTree {
    pub root: UserId,
    /// Retweets attached directly to the root (with multiplicity).
    pub root_children: u64,
    members: Vec<TreeMember>,
    member_slot: HashMap<UserId, usize>,
    weights: WeightedIndexTree,
}

impl MessageTree {
    fn new(root: UserId) -> Self {
        Self {
            root,
            root_children: 0,
            members: Vec::new(),
            member_slot: HashMap::new(),
            weights: WeightedIndexTree::new(),
        }
    }

    /// Distinct users in the tree, root included.
    pub fn size(&self) -> u64 {
        1 + self.members.len() as u64
    }

    pub fn contains(&self, user: UserId) -> bool {
        user == self.root || self.member_slot.contains_key(&user)
    }

    pub fn members(&self) -> &[TreeMember] {
        &self.members
    }

    /// (parent, children) of a member; the root has no parent.
    pub fn membership(&self, user: UserId) -> Option<(Option<UserId>, u64)> {
        if user == self.root {
            return Some((None, self.root_children));
        }
        self.member_slot
            .get(&user)
            .map(|&i| (Some(self.members[i].parent), self.members[i].children))
    }

    fn add_member(&mut self, user: UserId, parent: UserId) {
        self.members.push(TreeMember {
            user,
            parent,
            children: 0,
        });
        let slot = self.weights.push(1);
        debug_assert_eq!(slot, self.members.len() - 1);
        self.member_slot.insert(user, slot);
    }

    /// Records one more retweet hanging off `source` in this tree.
    fn bump_children(&mut self, source: UserId) {
        if source == self.root {
            self.root_children += 1;
        } else {
            let slot = self.member_slot[&source];
            self.members[slot].children += 1;
            self.weights.add(slot, 1);
        }
    }

    /// Superstar draw: the root with probability q, otherwise a non-root
    /// member proportional to children + 1. A tree with no non-root members
    /// yields the root regardless of q.
    pub fn select_source<R: Rng + ?Sized>(&self, q: f64, rng: &mut R) -> UserId {
        if self.members.is_empty() {
            return self.root;
        }
        if rng.gen::<f64>() < q {
            return self.root;
        }
        self.members[self.weights.sample(rng)].user
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageForest {
    trees: Vec<MessageTree>,
    /// Trees each user belongs to, in join order; index 0 is the tree the
    /// user joined on arrival.
    memberships: HashMap<UserId, Vec<TreeId>>,
    /// Tree-selection weights: |T_i| for tree i.
    sizes: WeightedIndexTree,
}

impl MessageForest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tree_count(&self) -> u64 {
        self.trees.len() as u64
    }

    pub fn tree(&self, id: TreeId) -> Option<&MessageTree> {
        self.trees.get(id.index())
    }

    pub fn trees(&self) -> &[MessageTree] {
        &self.trees
    }

    /// Total tree size over the forest (>= node count when users belong to
    /// several trees).
    pub fn total_size(&self) -> u64 {
        self.sizes.total()
    }

    /// Trees containing `user`, in join order.
    pub fn memberships(&self, user: UserId) -> &[TreeId] {
        self.memberships.get(&user).map_or(&[], Vec::as_slice)
    }

    pub(crate) fn add_tree(&mut self, root: UserId) -> TreeId {
        let id = TreeId(self.trees.len() as u32);
        self.trees.push(MessageTree::new(root));
        self.sizes.push(1);
        self.memberships.entry(root).or_default().push(id);
        id
    }

    /// Attaches a retweet of `source` by `user` inside `tree`: `user` joins
    /// the member set if absent, and the source's child count rises either
    /// way. The caller has already validated that source is in the tree.
    pub(crate) fn attach_retweet(&mut self, tree: TreeId, source: UserId, user: UserId) {
        let t = &mut self.trees[tree.index()];
        if !t.contains(user) {
            t.add_member(user, source);
            self.sizes.add(tree.index(), 1);
            self.memberships.entry(user).or_default().push(tree);
        }
        t.bump_children(source);
    }

    /// Draws a tree proportional to its size. Panics on an empty forest;
    /// the engine never samples before the first T1.
    pub fn select_tree<R: Rng + ?Sized>(&self, rng: &mut R) -> TreeId {
        TreeId(self.sizes.sample(rng) as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn freq<F: FnMut(&mut ChaCha12Rng) -> UserId>(draws: u64, mut f: F) -> HashMap<UserId, f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut counts: HashMap<UserId, u64> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(f(&mut rng)).or_insert(0) += 1;
        }
        counts
            .into_iter()
            .map(|(k, v)| (k, v as f64 / draws as f64))
            .collect()
    }

    #[test]
    fn tree_selection_is_size_proportional() {
        // Sizes 1 and 3: probabilities 0.25 and 0.75.
        let mut forest = MessageForest::new();
        let t0 = forest.add_tree(UserId(0));
        let t1 = forest.add_tree(UserId(1));
        forest.attach_retweet(t1, UserId(1), UserId(2));
        forest.attach_retweet(t1, UserId(1), UserId(3));
        assert_eq!(forest.tree(t0).unwrap().size(), 1);
        assert_eq!(forest.tree(t1).unwrap().size(), 3);

        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let draws = 400_000;
        let mut hits = 0u64;
        for _ in 0..draws {
            if forest.select_tree(&mut rng) == t1 {
                hits += 1;
            }
        }
        let p = hits as f64 / draws as f64;
        // 4-sigma band around 0.75 for 400k draws is about +/- 0.0027.
        assert!((p - 0.75).abs() < 0.003, "observed tree-1 rate {p}");
    }

    #[test]
    fn superstar_weights_are_children_plus_one() {
        // Chain root -> a -> b with q = 0: a has one child (b), b has none,
        // so P(a) = 2/3 and P(b) = 1/3.
        let mut forest = MessageForest::new();
        let t = forest.add_tree(UserId(0));
        forest.attach_retweet(t, UserId(0), UserId(1)); // a joins under root
        forest.attach_retweet(t, UserId(1), UserId(2)); // b joins under a
        let tree = forest.tree(t).unwrap();
        assert_eq!(tree.membership(UserId(1)), Some((Some(UserId(0)), 1)));
        assert_eq!(tree.membership(UserId(2)), Some((Some(UserId(1)), 0)));

        let rates = freq(300_000, |rng| tree.select_source(0.0, rng));
        let a = rates[&UserId(1)];
        let b = rates[&UserId(2)];
        assert!((a - 2.0 / 3.0).abs() < 0.004, "P(a) observed {a}");
        assert!((b - 1.0 / 3.0).abs() < 0.004, "P(b) observed {b}");
        assert!(!rates.contains_key(&UserId(0)), "root excluded at q = 0");
    }

    #[test]
    fn root_probability_is_q() {
        let mut forest = MessageForest::new();
        let t = forest.add_tree(UserId(0));
        forest.attach_retweet(t, UserId(0), UserId(1));
        let tree = forest.tree(t).unwrap();
        let rates = freq(300_000, |rng| tree.select_source(0.9, rng));
        let root = rates[&UserId(0)];
        assert!((root - 0.9).abs() < 0.003, "P(root) observed {root}");
    }

    #[test]
    fn root_only_tree_always_yields_root() {
        let mut forest = MessageForest::new();
        let t = forest.add_tree(UserId(5));
        let tree = forest.tree(t).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(tree.select_source(0.0, &mut rng), UserId(5));
        }
    }

    #[test]
    fn repeat_retweet_grows_children_but_not_size() {
        let mut forest = MessageForest::new();
        let t = forest.add_tree(UserId(0));
        forest.attach_retweet(t, UserId(0), UserId(1));
        let before = forest.tree(t).unwrap().size();
        forest.attach_retweet(t, UserId(0), UserId(1)); // same user again
        let tree = forest.tree(t).unwrap();
        assert_eq!(tree.size(), before, "size unchanged on repeat");
        assert_eq!(tree.root_children, 2, "root child count still rises");
        assert_eq!(forest.total_size(), 2);
    }

    #[test]
    fn membership_tracks_join_order_across_trees() {
        let mut forest = MessageForest::new();
        let t0 = forest.add_tree(UserId(0));
        let t1 = forest.add_tree(UserId(1));
        forest.attach_retweet(t0, UserId(0), UserId(1)); // 1 joins tree 0 too
        assert_eq!(forest.memberships(UserId(1)), &[t1, t0]);
        assert_eq!(forest.memberships(UserId(0)), &[t0]);
        assert_eq!(forest.memberships(UserId(9)), &[] as &[TreeId]);
    }
}
