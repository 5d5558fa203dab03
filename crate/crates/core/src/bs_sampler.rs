//! Binary sampling: the backward pass that builds the tree and yields one
//! sample, and the forward walk that yields every later sample.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use crate::model::{RngStream, UniformSource, WeightTable};
use crate::pairwise_tree::{BuildMode, PairwiseTree};
use crate::Sampler;

/// Cardinalities of the candidate set during an explicit-set backward pass.
///
/// `cardinalities[0]` is the size before any coin is tossed (the number of
/// positive leaves); entry `k` is the size after the `k`-th backward level.
/// The last entry is the size of the final set, which is always 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BbsTrace {
    pub cardinalities: Vec<usize>,
}

impl BbsTrace {
    /// Size of the set after the iteration for level `j` (`j = d+1` is the
    /// initial set, `j = 1` the final one).
    pub fn card(&self, j: usize) -> usize {
        let d = self.cardinalities.len() - 1;
        self.cardinalities[d + 1 - j]
    }

    /// Steps `j` at which `card(A_j) ≠ ⌈card(A_{j+1}) / 2⌉`.
    pub fn halving_violations(&self) -> Vec<usize> {
        let d = self.cardinalities.len() - 1;
        (1..=d)
            .filter(|&j| self.card(j) != self.card(j + 1).div_ceil(2))
            .collect()
    }
}

/// Toss one coin per positive internal node, deepest level first and in
/// ascending node order within a level, recording the chosen bits.
fn toss_backward<R: UniformSource>(tree: &mut PairwiseTree, rng: &mut R, mut on_coin: impl FnMut(u32, usize, u8)) {
    for level in (0..tree.depth()).rev() {
        for j in 0..(1usize << level) {
            if tree.node_unchecked(level, j) > 0.0 {
                let bit = rng.bernoulli(tree.rho_unchecked(level, j));
                tree.set_chosen(level, j, bit);
                on_coin(level, j, bit);
            }
        }
    }
    tree.mark_chosen_populated();
}

/// Backward binary sampling with a sequential build.
///
/// Returns the first sample together with the fully built tree. The sample is
/// the leaf reached by following the chosen bits from the root.
pub fn bbs<R: UniformSource>(table: &WeightTable, rng: &mut R) -> (usize, PairwiseTree) {
    bbs_with_mode(table, rng, BuildMode::Sequential)
}

pub fn bbs_with_mode<R: UniformSource>(
    table: &WeightTable,
    rng: &mut R,
    mode: BuildMode,
) -> (usize, PairwiseTree) {
    let mut tree = PairwiseTree::build(table, mode);
    toss_backward(&mut tree, rng, |_, _, _| {});
    let sample = tree.survivor().expect("chosen bits populated");
    (sample, tree)
}

/// Backward binary sampling that materializes the candidate set and deletes
/// the losing sibling after every coin.
///
/// Tosses exactly the same coins in the same order as [`bbs`], so for equal
/// random streams both return the same sample.
pub fn bbs_explicit<R: UniformSource>(
    table: &WeightTable,
    rng: &mut R,
) -> (usize, PairwiseTree, BbsTrace) {
    let mut tree = PairwiseTree::build(table, BuildMode::Sequential);
    let depth = tree.depth();
    let mut candidates: BTreeSet<usize> = tree
        .level(depth)
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, _)| i)
        .collect();
    let mut cardinalities = vec![candidates.len()];

    let mut current_level = None;
    let mut doomed: HashSet<usize> = HashSet::new();
    let mut flush = |level: u32, doomed: &mut HashSet<usize>, candidates: &mut BTreeSet<usize>| {
        let mask = (1usize << (level + 1)) - 1;
        candidates.retain(|a| !doomed.contains(&(a & mask)));
        doomed.clear();
        cardinalities.push(candidates.len());
    };
    // A coin at node (level, j) fixes bit `level`; the loser is the prefix
    // with that bit flipped.
    let mut pending: Vec<(u32, usize, u8)> = Vec::new();
    toss_backward(&mut tree, rng, |level, j, bit| pending.push((level, j, bit)));
    for (level, j, bit) in pending {
        if current_level != Some(level) {
            if let Some(prev) = current_level {
                flush(prev, &mut doomed, &mut candidates);
            }
            // Levels with no positive node never occur: the root is positive
            // and every positive node has a positive parent.
            current_level = Some(level);
        }
        doomed.insert(j | (((1 - bit) as usize) << level));
    }
    if let Some(prev) = current_level {
        flush(prev, &mut doomed, &mut candidates);
    }

    assert_eq!(candidates.len(), 1, "backward pass must leave a single survivor");
    let sample = *candidates.iter().next().unwrap();
    debug_assert_eq!(Some(sample), tree.survivor());
    (sample, tree, BbsTrace { cardinalities })
}

/// One forward walk: exactly `d` Bernoulli decisions from root to leaf.
pub fn fbs<R: UniformSource>(tree: &PairwiseTree, rng: &mut R) -> usize {
    let mut j = 0usize;
    for level in 0..tree.depth() {
        debug_assert!(tree.node_unchecked(level, j) > 0.0);
        let bit = rng.bernoulli(tree.rho_unchecked(level, j));
        j |= (bit as usize) << level;
    }
    debug_assert!(tree.node_unchecked(tree.depth(), j) > 0.0);
    j
}

/// One backward pass followed by `count - 1` forward walks on the same tree.
pub fn bs_stream<R: UniformSource>(table: &WeightTable, rng: &mut R, count: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    let mut sampler = BsSampler::new(table, rng);
    (0..count).map(|_| sampler.sample()).collect()
}

/// Binary sampler: the first draw is the backward-pass sample, later draws
/// are forward walks.
///
/// The tree is behind an [`Arc`], so several samplers with independent streams
/// can walk one tree concurrently (see [`BsSampler::from_shared`]).
#[derive(Debug)]
pub struct BsSampler<R = RngStream> {
    tree: Arc<PairwiseTree>,
    rng: R,
    first_sample: Option<usize>,
    pending_first: bool,
    walk_steps: u64,
}

impl<R: UniformSource> BsSampler<R> {
    pub fn new(table: &WeightTable, rng: R) -> Self {
        Self::with_mode(table, rng, BuildMode::Sequential)
    }

    pub fn with_mode(table: &WeightTable, mut rng: R, mode: BuildMode) -> Self {
        let (first, tree) = bbs_with_mode(table, &mut rng, mode);
        BsSampler {
            tree: Arc::new(tree),
            rng,
            first_sample: Some(first),
            pending_first: true,
            walk_steps: 0,
        }
    }

    /// Forward-only sampler over an already built tree.
    pub fn from_shared(tree: Arc<PairwiseTree>, rng: R) -> Self {
        BsSampler { tree, rng, first_sample: None, pending_first: false, walk_steps: 0 }
    }

    pub fn tree(&self) -> &Arc<PairwiseTree> {
        &self.tree
    }

    /// The sample emitted by the backward pass, if this sampler ran one.
    pub fn first_sample(&self) -> Option<usize> {
        self.first_sample
    }

    pub fn fbs(&mut self) -> usize {
        self.walk_steps += self.tree.depth() as u64;
        fbs(&self.tree, &mut self.rng)
    }

    /// Bernoulli decisions taken by forward walks so far.
    pub fn walk_steps(&self) -> u64 {
        self.walk_steps
    }

    pub fn rng(&self) -> &R {
        &self.rng
    }

    pub fn into_rng(self) -> R {
        self.rng
    }
}

impl<R: UniformSource> Sampler for BsSampler<R> {
    fn sample(&mut self) -> usize {
        if self.pending_first {
            self.pending_first = false;
            return self.first_sample.expect("backward sample present");
        }
        self.fbs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ScriptedCoins, UniformSource};

    fn table(ws: &[f64]) -> WeightTable {
        WeightTable::new(ws.to_vec()).unwrap()
    }

    #[test]
    fn single_point_support() {
        let t = table(&[1.0]);
        let mut rng = RngStream::new(9);
        let (s, tree) = bbs(&t, &mut rng);
        assert_eq!(s, 0);
        assert_eq!(rng.draws(), 0);
        assert_eq!(fbs(&tree, &mut rng), 0);
        assert_eq!(rng.draws(), 0);
        assert_eq!(bs_stream(&t, &mut rng, 5), vec![0; 5]);
    }

    #[test]
    fn forced_walk() {
        let t = table(&[0.5, 0.25, 0.125, 0.125]);
        let tree = PairwiseTree::build(&t, BuildMode::Sequential);
        let mut coins = ScriptedCoins::new([1, 1]);
        assert_eq!(fbs(&tree, &mut coins), 3);
        assert_eq!(coins.draws(), 2);
    }

    #[test]
    fn backward_coin_order() {
        // d = 2: level 1 nodes 0 and 1 first, then the root.
        let t = table(&[0.5, 0.25, 0.125, 0.125]);
        // node(1,0) picks 1 -> leaf 2; node(1,1) picks 0 -> leaf 1; root picks 1.
        let mut coins = ScriptedCoins::new([1, 0, 1]);
        let (s, tree) = bbs(&t, &mut coins);
        assert_eq!(tree.chosen_bit(1, 0), Some(1));
        assert_eq!(tree.chosen_bit(1, 1), Some(0));
        assert_eq!(tree.chosen_bit(0, 0), Some(1));
        assert_eq!(s, 1);
        assert_eq!(coins.remaining(), 0);
    }

    #[test]
    fn explicit_matches_implicit() {
        let t = table(&[0.3, 0.0, 0.2, 0.1, 0.15, 0.05, 0.2]);
        for seed in 0..200 {
            let mut a = RngStream::new(seed);
            let mut b = RngStream::new(seed);
            let (s1, _) = bbs(&t, &mut a);
            let (s2, _, trace) = bbs_explicit(&t, &mut b);
            assert_eq!(s1, s2);
            assert_eq!(a.draws(), b.draws());
            assert_eq!(*trace.cardinalities.last().unwrap(), 1);
        }
    }

    #[test]
    fn explicit_trace_power_of_two_halves() {
        let t = table(&[1.0; 16]);
        let (_, _, trace) = bbs_explicit(&t, &mut RngStream::new(1));
        assert_eq!(trace.cardinalities, vec![16, 8, 4, 2, 1]);
        assert!(trace.halving_violations().is_empty());
        assert_eq!(trace.card(5), 16);
        assert_eq!(trace.card(1), 1);
    }

    #[test]
    fn explicit_trace_counts_positive_nodes() {
        // Five leaves padded to eight: level 2 has four positive nodes
        // (0 collects leaves 0 and 4), so the set shrinks 5 -> 4 -> 2 -> 1.
        let t = table(&[0.2; 5]);
        let (_, _, trace) = bbs_explicit(&t, &mut RngStream::new(3));
        assert_eq!(trace.cardinalities, vec![5, 4, 2, 1]);
        assert_eq!(trace.halving_violations(), vec![3]);
    }

    #[test]
    fn bbs_fbs_agree_on_same_coins() {
        let t = table(&[0.1, 0.2, 0.3, 0.15, 0.25]);
        let tree = PairwiseTree::build(&t, BuildMode::Sequential);
        for leaf in 0..5usize {
            // Script the backward pass so every node on the root-to-leaf path
            // picks the leaf's bits and every other node picks 0.
            let mut script = Vec::new();
            for level in (0..tree.depth()).rev() {
                for j in 0..(1usize << level) {
                    if tree.node(level, j) > 0.0 {
                        let on_path = leaf & ((1 << level) - 1) == j;
                        script.push(if on_path { ((leaf >> level) & 1) as u8 } else { 0 });
                    }
                }
            }
            let (s, _) = bbs(&t, &mut ScriptedCoins::new(script));
            let path: Vec<u8> = (0..tree.depth()).map(|l| ((leaf >> l) & 1) as u8).collect();
            let f = fbs(&tree, &mut ScriptedCoins::new(path));
            assert_eq!(s, leaf);
            assert_eq!(f, leaf);
        }
    }

    #[test]
    fn stream_edges() {
        let t = table(&[1.0, 2.0, 3.0]);
        assert!(bs_stream(&t, &mut RngStream::new(1), 0).is_empty());

        let mut r1 = RngStream::new(11);
        let one = bs_stream(&t, &mut r1, 1);
        let mut r2 = RngStream::new(11);
        let (first, _) = bbs(&t, &mut r2);
        assert_eq!(one, vec![first]);
        assert_eq!(r1.draws(), r2.draws());

        let a = bs_stream(&t, &mut RngStream::new(5), 3);
        let b = bs_stream(&t, &mut RngStream::new(5), 3);
        assert_eq!(a, b);
    }

    #[test]
    fn walk_never_hits_zero_weight() {
        let t = table(&[0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 3.0, 0.0]);
        let mut s = BsSampler::new(&t, RngStream::new(8));
        for _ in 0..20_000 {
            let i = s.sample();
            assert!(t.weights()[i] > 0.0, "sampled zero-weight index {i}");
        }
    }

    #[test]
    fn fbs_draws_exactly_depth() {
        let t = table(&(1..=37).map(|i| i as f64).collect::<Vec<_>>());
        let mut s = BsSampler::new(&t, RngStream::new(2));
        let before = s.rng().draws();
        for _ in 0..100 {
            s.fbs();
        }
        assert_eq!(s.rng().draws() - before, 100 * 6);
        assert_eq!(s.walk_steps(), 600);
    }

    #[test]
    fn shared_tree_samplers() {
        let t = table(&[1.0, 2.0, 3.0, 4.0]);
        let base = BsSampler::new(&t, RngStream::new(1));
        let tree = base.tree().clone();
        let handles: Vec<_> = (0..4u64)
            .map(|k| {
                let tree = tree.clone();
                std::thread::spawn(move || {
                    let mut s = BsSampler::from_shared(tree, RngStream::with_stream(77, k));
                    (0..1000).map(|_| s.sample()).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            let xs = h.join().unwrap();
            assert!(xs.iter().all(|&i| i < 4));
        }
    }
}
