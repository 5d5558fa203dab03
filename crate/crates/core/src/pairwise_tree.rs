//! Level-indexed pairwise-summation tree.
//!
//! Leaf `j` of level `d` holds `π(j)` (zero for the padded leaves `j > N`).
//! The node `j` of level `ℓ` is the sum of its children `j` and `j + 2^ℓ` on
//! level `ℓ + 1`: children differ in bit `ℓ` of the index, so a node at level
//! `ℓ` aggregates every leaf whose `ℓ` low-order bits equal `j`.
//!
//! All levels live in one flat array, level `ℓ` at offset `2^ℓ - 1`, for a
//! total of `2^(d+1) - 1` nodes.

use std::io::Write;
use std::ops::Add;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BitPath, WeightTable};

/// Levels at least this wide are split across rayon workers.
const PARALLEL_LEVEL_MIN: usize = 1 << 14;
const PARALLEL_CHUNK: usize = 1 << 13;

const DUMP_MAGIC: &[u8; 4] = b"PWTR";
const DUMP_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BuildMode {
    #[default]
    Sequential,
    /// Parent slots of each level are partitioned across the rayon pool.
    /// Produces the same bits as `Sequential`.
    Parallel,
}

#[derive(Clone, Debug)]
pub struct PairwiseTree {
    depth: u32,
    max_index: usize,
    nodes: Vec<f64>,
    /// One bit per internal node (levels `0..d`), meaningful once populated.
    chosen: Vec<u8>,
    chosen_populated: bool,
    mode: BuildMode,
}

#[inline]
fn offset(level: u32) -> usize {
    (1usize << level) - 1
}

/// Sum by the same stride pairing as the tree: at each round, slot `j` absorbs
/// slot `j + half`. The input is virtually zero-padded to a power of two.
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + Add<Output = T> + Default,
{
    if xs.is_empty() {
        return T::default();
    }
    let width = xs.len().next_power_of_two();
    let mut buf = Vec::with_capacity(width);
    buf.extend_from_slice(xs);
    buf.resize(width, T::default());
    let mut half = width / 2;
    while half > 0 {
        let (lo, hi) = buf.split_at_mut(half);
        for (a, &b) in lo.iter_mut().zip(hi.iter()) {
            *a = *a + b;
        }
        half /= 2;
    }
    buf[0]
}

impl PairwiseTree {
    pub fn build(table: &WeightTable, mode: BuildMode) -> Self {
        let depth = table.depth();
        let width = 1usize << depth;
        let mut nodes = vec![0.0f64; 2 * width - 1];
        nodes[offset(depth)..offset(depth) + table.len()].copy_from_slice(table.weights());

        for level in (0..depth).rev() {
            let half = 1usize << level;
            let (upper, lower) = nodes.split_at_mut(offset(level + 1));
            let parents = &mut upper[offset(level)..];
            let (left, right) = lower[..2 * half].split_at(half);
            match mode {
                BuildMode::Parallel if half >= PARALLEL_LEVEL_MIN => {
                    parents
                        .par_chunks_mut(PARALLEL_CHUNK)
                        .zip(left.par_chunks(PARALLEL_CHUNK))
                        .zip(right.par_chunks(PARALLEL_CHUNK))
                        .for_each(|((p, l), r)| sum_into(p, l, r));
                }
                _ => sum_into(parents, left, right),
            }
        }

        PairwiseTree {
            depth,
            max_index: table.max_index(),
            nodes,
            chosen: vec![0; width - 1],
            chosen_populated: false,
            mode,
        }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Largest support index `N` of the source table.
    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn build_mode(&self) -> BuildMode {
        self.mode
    }

    /// Root weight, equal to the source table's total.
    pub fn total(&self) -> f64 {
        self.nodes[0]
    }

    /// The `2^level` node weights of one level.
    pub fn level(&self, level: u32) -> &[f64] {
        assert!(level <= self.depth, "level {level} exceeds depth {}", self.depth);
        &self.nodes[offset(level)..offset(level + 1)]
    }

    pub fn node(&self, level: u32, j: usize) -> f64 {
        self.level(level)[j]
    }

    /// Every level, root first, as one contiguous slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub(crate) fn rho_unchecked(&self, level: u32, j: usize) -> f64 {
        let half = 1usize << level;
        let parent = self.nodes[offset(level) + j];
        let one_child = self.nodes[offset(level + 1) + j + half];
        one_child / parent
    }

    #[inline]
    pub(crate) fn node_unchecked(&self, level: u32, j: usize) -> f64 {
        self.nodes[offset(level) + j]
    }

    /// Probability of taking the 1-child at node `(level, j)`.
    pub fn branch_prob(&self, level: u32, j: usize) -> Result<f64> {
        if level >= self.depth {
            return Err(Error::domain(format!(
                "level {level} has no children (depth {})",
                self.depth
            )));
        }
        if j >= 1usize << level {
            return Err(Error::domain(format!("node {j} does not exist on level {level}")));
        }
        if self.node_unchecked(level, j) <= 0.0 {
            return Err(Error::domain(format!("node ({level}, {j}) has zero weight")));
        }
        Ok(self.rho_unchecked(level, j))
    }

    /// Product of branch probabilities along `path`, zero as soon as the path
    /// enters a zero-weight node.
    pub fn leaf_prob_product(&self, path: &BitPath) -> Result<f64> {
        if path.depth() != self.depth {
            return Err(Error::domain(format!(
                "path depth {} does not match tree depth {}",
                path.depth(),
                self.depth
            )));
        }
        let mut prob = 1.0;
        let mut j = 0usize;
        for (level, &bit) in path.bits().iter().enumerate() {
            let level = level as u32;
            if self.node_unchecked(level, j) <= 0.0 {
                return Ok(0.0);
            }
            let rho = self.rho_unchecked(level, j);
            prob *= if bit == 1 { rho } else { 1.0 - rho };
            j |= (bit as usize) << level;
        }
        if self.node_unchecked(self.depth, j) <= 0.0 {
            return Ok(0.0);
        }
        Ok(prob)
    }

    pub fn has_chosen_bits(&self) -> bool {
        self.chosen_populated
    }

    /// Bit selected at internal node `(level, j)` by the backward pass, if
    /// one ran and the node has positive weight.
    pub fn chosen_bit(&self, level: u32, j: usize) -> Option<u8> {
        if !self.chosen_populated || level >= self.depth || j >= 1usize << level {
            return None;
        }
        if self.node_unchecked(level, j) <= 0.0 {
            return None;
        }
        Some(self.chosen[offset(level) + j])
    }

    pub(crate) fn set_chosen(&mut self, level: u32, j: usize, bit: u8) {
        self.chosen[offset(level) + j] = bit;
    }

    pub(crate) fn mark_chosen_populated(&mut self) {
        self.chosen_populated = true;
    }

    /// Leaf reached from the root by following the chosen bits.
    pub fn survivor(&self) -> Option<usize> {
        if !self.chosen_populated {
            return None;
        }
        let mut j = 0usize;
        for level in 0..self.depth {
            j |= (self.chosen[offset(level) + j] as usize) << level;
        }
        Some(j)
    }

    /// Debug dump: `"PWTR"`, version (u32), depth (u64), then every node as a
    /// little-endian f64, root level first.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&DUMP_VERSION.to_le_bytes())?;
        out.write_all(&(self.depth as u64).to_le_bytes())?;
        for v in &self.nodes {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

#[inline]
fn sum_into(parents: &mut [f64], left: &[f64], right: &[f64]) {
    for ((p, &l), &r) in parents.iter_mut().zip(left).zip(right) {
        *p = l + r;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::encode;

    fn table(ws: &[f64]) -> WeightTable {
        WeightTable::new(ws.to_vec()).unwrap()
    }

    #[test]
    fn build_examples() {
        let t = PairwiseTree::build(&table(&[0.5, 0.25, 0.125, 0.125]), BuildMode::Sequential);
        assert_eq!(t.depth(), 2);
        assert_eq!(t.level(1), &[0.625, 0.375]);
        assert_eq!(t.level(0), &[1.0]);

        let t = PairwiseTree::build(&table(&[0.25; 4]), BuildMode::Sequential);
        assert_eq!(t.level(1), &[0.5, 0.5]);
        assert_eq!(t.level(0), &[1.0]);

        let t = PairwiseTree::build(&table(&[1.0]), BuildMode::Sequential);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.as_slice(), &[1.0]);
    }

    #[test]
    fn padding_is_explicit_zeros() {
        let t = PairwiseTree::build(&table(&[0.2; 5]), BuildMode::Sequential);
        assert_eq!(t.depth(), 3);
        assert_eq!(&t.level(3)[5..], &[0.0, 0.0, 0.0]);
        assert_eq!(t.as_slice().len(), 15);
    }

    #[test]
    fn branch_prob_examples() {
        let t = PairwiseTree::build(&table(&[0.5, 0.25, 0.125, 0.125]), BuildMode::Sequential);
        assert_eq!(t.branch_prob(0, 0).unwrap(), 0.375);
        assert_eq!(t.branch_prob(1, 1).unwrap(), 0.3333333333333333);
        assert!(t.branch_prob(2, 0).is_err());
        assert!(t.branch_prob(1, 2).is_err());

        let u = PairwiseTree::build(&table(&[1.0; 8]), BuildMode::Sequential);
        for level in 0..3 {
            for j in 0..(1usize << level) {
                assert_eq!(u.branch_prob(level, j).unwrap(), 0.5);
            }
        }
    }

    #[test]
    fn branch_prob_rejects_dead_node() {
        let t = PairwiseTree::build(&table(&[1.0, 0.0, 1.0, 0.0]), BuildMode::Sequential);
        assert!(matches!(t.branch_prob(1, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn leaf_product_examples() {
        let t = PairwiseTree::build(&table(&[0.5, 0.25, 0.125, 0.125]), BuildMode::Sequential);
        let p = t.leaf_prob_product(&encode(3, 2).unwrap()).unwrap();
        assert_eq!(p, 0.375 * (0.125 / 0.375));
        assert!((p - 0.125).abs() < 1e-15);

        let padded = PairwiseTree::build(&table(&[0.2; 5]), BuildMode::Sequential);
        for leaf in 5..8 {
            assert_eq!(padded.leaf_prob_product(&encode(leaf, 3).unwrap()).unwrap(), 0.0);
        }

        let u = PairwiseTree::build(&table(&[0.25; 4]), BuildMode::Sequential);
        for leaf in 0..4 {
            assert_eq!(u.leaf_prob_product(&encode(leaf, 2).unwrap()).unwrap(), 0.25);
        }
        assert!(u.leaf_prob_product(&encode(0, 3).unwrap()).is_err());
    }

    #[test]
    fn root_matches_table_total_bitwise() {
        let ws: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0).sqrt()).collect();
        let tab = table(&ws);
        let t = PairwiseTree::build(&tab, BuildMode::Sequential);
        assert_eq!(t.total().to_bits(), tab.total().to_bits());
    }

    #[test]
    fn pairwise_sum_small() {
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
        assert_eq!(pairwise_sum(&[3.0f64]), 3.0);
        assert_eq!(pairwise_sum(&[1.0f32, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn parallel_matches_sequential() {
        let ws: Vec<f64> = (0..(1 << 16) + 17).map(|i| ((i * 7919) % 1000) as f64 + 0.5).collect();
        let tab = table(&ws);
        let a = PairwiseTree::build(&tab, BuildMode::Sequential);
        let b = PairwiseTree::build(&tab, BuildMode::Parallel);
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn dump_layout() {
        let t = PairwiseTree::build(&table(&[0.5, 0.25, 0.125, 0.125]), BuildMode::Sequential);
        let mut buf = Vec::new();
        t.write_dump(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"PWTR");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 2);
        assert_eq!(buf.len(), 16 + 7 * 8);
        let third = f64::from_le_bytes(buf[32..40].try_into().unwrap());
        assert_eq!(third, 0.375);
    }
}
