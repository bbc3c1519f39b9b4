//! Dynamic weighted sampling with exact probabilities.
//!
//! Tree selection and within-tree member selection both draw from categorical
//! distributions whose weights are small integers (tree sizes, child counts
//! plus one) and change on almost every arrival. A Fenwick tree over u64
//! weights supports append, point increment, and prefix search in O(log n),
//! and sampling reduces to one uniform integer draw in [0, total), so the
//! selection probabilities are exactly weight/total rather than an
//! approximation through floating-point cumulative sums.

use rand::Rng;

/// Append-only collection of integer weights supporting O(log n) increments
/// and exact weighted index sampling.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightedIndexTree {
    /// 1-indexed Fenwick array; entry i covers the weight sum of
    /// (i - lowbit(i), i].
    tree: Vec<u64>,
    total: u64,
}

impl WeightedIndexTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Appends an element with the given weight and returns its index.
    pub fn push(&mut self, weight: u64) -> usize {
        let i = self.tree.len() + 1;
        // tree[i] covers (i - lowbit(i), i]; all earlier entries are final,
        // so the new cell is the new weight plus the already-known gap sum.
        let low = i & (i - 1);
        let value = weight + self.prefix(i - 1) - self.prefix(low);
        self.tree.push(value);
        self.total += weight;
        i - 1
    }

    /// Adds `delta` to the weight of element `index`.
    pub fn add(&mut self, index: usize, delta: u64) {
        assert!(index < self.tree.len(), "weight index out of range");
        let mut i = index + 1;
        while i <= self.tree.len() {
            self.tree[i - 1] += delta;
            i += i & i.wrapping_neg();
        }
        self.total += delta;
    }

    /// Sum of the first `count` weights.
    fn prefix(&self, mut count: usize) -> u64 {
        let mut sum = 0;
        while count > 0 {
            sum += self.tree[count - 1];
            count &= count - 1;
        }
        sum
    }

    /// Weight of a single element.
    pub fn weight(&self, index: usize) -> u64 {
        self.prefix(index + 1) - self.prefix(index)
    }

    /// Index owning position `x` of the cumulative weight line, i.e. the
    /// unique i with prefix(i) <= x < prefix(i + 1). Requires x < total.
    pub fn locate(&self, mut x: u64) -> usize {
        assert!(x < self.total, "position beyond total weight");
        let mut pos = 0usize;
        let mut step = self.tree.len().next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= self.tree.len() && self.tree[next - 1] <= x {
                x -= self.tree[next - 1];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }

    /// Draws an index with probability weight/total. Panics if the total
    /// weight is zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        assert!(self.total > 0, "cannot sample from an empty weight set");
        self.locate(rng.gen_range(0..self.total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Plain-vector mirror used as the correctness oracle.
    #[derive(Default)]
    struct NaiveWeights(Vec<u64>);

    impl NaiveWeights {
        fn select(&self, mut x: u64) -> usize {
            for (i, &w) in self.0.iter().enumerate() {
                if x < w {
                    return i;
                }
                x -= w;
            }
            unreachable!("draw exceeded total weight");
        }
    }

    #[test]
    fn push_and_add_track_totals_and_weights() {
        let mut t = WeightedIndexTree::new();
        assert_eq!(t.push(3), 0);
        assert_eq!(t.push(1), 1);
        assert_eq!(t.push(5), 2);
        assert_eq!(t.total(), 9);
        t.add(1, 4);
        assert_eq!(t.total(), 13);
        assert_eq!(t.weight(0), 3);
        assert_eq!(t.weight(1), 5);
        assert_eq!(t.weight(2), 5);
    }

    #[test]
    fn locate_partitions_the_weight_line() {
        let mut t = WeightedIndexTree::new();
        for w in [2u64, 0, 3, 1] {
            t.push(w);
        }
        let expected = [0, 0, 2, 2, 2, 3];
        for (x, &idx) in expected.iter().enumerate() {
            assert_eq!(t.locate(x as u64), idx, "position {x}");
        }
    }

    #[test]
    fn zero_weight_elements_are_never_selected() {
        let mut t = WeightedIndexTree::new();
        t.push(0);
        t.push(4);
        t.push(0);
        for x in 0..4 {
            assert_eq!(t.locate(x), 1);
        }
    }

    #[test]
    fn sampling_frequencies_match_weights() {
        // Weights 1:2:5 over 200k draws; 4-sigma binomial bands.
        let mut t = WeightedIndexTree::new();
        t.push(1);
        t.push(2);
        t.push(5);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut counts = [0u64; 3];
        let draws = 200_000;
        for _ in 0..draws {
            counts[t.sample(&mut rng)] += 1;
        }
        for (i, &w) in [1u64, 2, 5].iter().enumerate() {
            let p = w as f64 / 8.0;
            let mean = draws as f64 * p;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            let dev = (counts[i] as f64 - mean).abs();
            assert!(
                dev < 4.0 * sigma,
                "weight {i}: observed {} expected {mean:.0} (4 sigma = {:.0})",
                counts[i],
                4.0 * sigma
            );
        }
    }

    proptest! {
        #[test]
        fn matches_naive_oracle(ops in proptest::collection::vec((0u8..2, 1u64..50), 1..120)) {
            let mut fen = WeightedIndexTree::new();
            let mut naive = NaiveWeights::default();
            for (kind, w) in ops {
                if kind == 0 || fen.is_empty() {
                    fen.push(w);
                    naive.0.push(w);
                } else {
                    let i = (w as usize * 31) % fen.len();
                    fen.add(i, w);
                    naive.0[i] += w;
                }
            }
            let total: u64 = naive.0.iter().sum();
            prop_assert_eq!(fen.total(), total);
            for i in 0..naive.0.len() {
                prop_assert_eq!(fen.weight(i), naive.0[i]);
            }
            // Every cumulative position maps to the same index in both.
            for x in 0..total.min(400) {
                prop_assert_eq!(fen.locate(x), naive.select(x));
            }
        }
    }
}
