//! Inverse-transform baselines: a linear scan over a sequentially accumulated
//! CDF, and binary search over a complete tree of inorder prefix sums.
//!
//! Both accumulate one weight at a time, so their stored sums carry the
//! rounding error of sequential summation. A uniform `u` is mapped to the
//! table's scale (`u` itself for normalized tables, `u · total` otherwise) and
//! clamped to the accumulated total; a clamp is reported as an anomaly, which
//! only happens when a normalized table's accumulated sum rounds below `u`.

use crate::model::{RngStream, UniformSource, WeightTable};
use crate::Sampler;

/// Outcome of mapping one uniform through a baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lookup {
    pub index: usize,
    pub comparisons: u64,
    /// The scaled uniform exceeded the accumulated total and was clamped.
    pub clamped: bool,
}

/// `cum[i] = π(0) + … + π(i)`, accumulated left to right.
#[derive(Clone, Debug)]
pub struct CumulativeTable {
    cum: Vec<f64>,
    normalized: bool,
}

impl CumulativeTable {
    pub fn build(table: &WeightTable) -> Self {
        let cum = table
            .weights()
            .iter()
            .scan(0.0f64, |acc, &w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        CumulativeTable { cum, normalized: table.is_normalized() }
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn max_index(&self) -> usize {
        self.cum.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    fn target(&self, u: f64) -> (f64, bool) {
        let x = if self.normalized { u } else { u * self.total() };
        if x > self.total() {
            (self.total(), true)
        } else {
            (x, false)
        }
    }

    /// Smallest `i` with `x ≤ cum[i]`, scanning upward; costs `i + 1` comparisons.
    pub fn search_forward(&self, u: f64) -> Lookup {
        let (x, clamped) = self.target(u);
        let index = self
            .cum
            .iter()
            .position(|&c| x <= c)
            .expect("target clamped to total");
        Lookup { index, comparisons: index as u64 + 1, clamped }
    }

    /// Largest `i` with `x > cum[i-1]` (taking `cum[-1] = 0`), scanning
    /// downward from `N`; costs `N + 1 - i` comparisons.
    pub fn search_backward(&self, u: f64) -> Lookup {
        let (x, clamped) = self.target(u);
        let n = self.max_index();
        for i in (0..=n).rev() {
            let below = if i == 0 { 0.0 } else { self.cum[i - 1] };
            if x > below {
                return Lookup { index: i, comparisons: (n + 1 - i) as u64, clamped };
            }
        }
        unreachable!("uniforms are strictly positive")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanDirection {
    Forward,
    Backward,
}

/// Naive inverse-transform sampler with comparison counters.
#[derive(Debug)]
pub struct NaiveItsSampler<R = RngStream> {
    table: CumulativeTable,
    direction: ScanDirection,
    rng: R,
    draws: u64,
    comparisons: u64,
    anomalies: u64,
}

impl<R: UniformSource> NaiveItsSampler<R> {
    pub fn new(table: CumulativeTable, direction: ScanDirection, rng: R) -> Self {
        NaiveItsSampler { table, direction, rng, draws: 0, comparisons: 0, anomalies: 0 }
    }

    pub fn table(&self) -> &CumulativeTable {
        &self.table
    }

    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    pub fn anomalies(&self) -> u64 {
        self.anomalies
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn mean_comparisons(&self) -> f64 {
        self.comparisons as f64 / self.draws as f64
    }
}

impl<R: UniformSource> Sampler for NaiveItsSampler<R> {
    fn sample(&mut self) -> usize {
        let u = self.rng.uniform();
        let hit = match self.direction {
            ScanDirection::Forward => self.table.search_forward(u),
            ScanDirection::Backward => self.table.search_backward(u),
        };
        self.draws += 1;
        self.comparisons += hit.comparisons;
        self.anomalies += hit.clamped as u64;
        hit.index
    }
}

/// Heap-labelled inorder visiting order of a complete tree with `2n + 1` nodes.
pub fn inorder_labels(n: usize) -> Vec<usize> {
    let size = 2 * n + 1;
    let mut order = Vec::with_capacity(size);
    let mut stack = Vec::new();
    let mut cur = Some(0usize);
    loop {
        while let Some(k) = cur {
            stack.push(k);
            cur = (2 * k + 1 < size).then_some(2 * k + 1);
        }
        let Some(k) = stack.pop() else { break };
        order.push(k);
        cur = (2 * k + 2 < size).then_some(2 * k + 2);
    }
    order
}

/// Complete binary tree on labels `0..=2N`: node `k` has children `2k+1` and
/// `2k+2`, leaf `N + i` holds `π(i)`, and every internal node holds the sum of
/// the leaves that precede it in inorder.
#[derive(Clone, Debug)]
pub struct InorderCdfTree {
    values: Vec<f64>,
    n: usize,
    total: f64,
    normalized: bool,
}

impl InorderCdfTree {
    pub fn build(table: &WeightTable) -> Self {
        let n = table.max_index();
        let mut values = vec![0.0; 2 * n + 1];
        values[n..].copy_from_slice(table.weights());
        let mut running = 0.0f64;
        for k in inorder_labels(n) {
            if k >= n {
                running += values[k];
            } else {
                values[k] = running;
            }
        }
        InorderCdfTree { values, n, total: running, normalized: table.is_normalized() }
    }

    /// Stored value of every label `0..=2N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_index(&self) -> usize {
        self.n
    }

    /// Sum of all leaves in inorder accumulation order.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Root-to-leaf descent: left iff the scaled uniform is `≤` the node value.
    pub fn search(&self, u: f64) -> Lookup {
        let x = if self.normalized { u } else { u * self.total };
        let (x, clamped) = if x > self.total { (self.total, true) } else { (x, false) };
        let mut k = 0usize;
        let mut comparisons = 0u64;
        while k < self.n {
            comparisons += 1;
            k = if x <= self.values[k] { 2 * k + 1 } else { 2 * k + 2 };
        }
        Lookup { index: k - self.n, comparisons, clamped }
    }

    /// Upper bound on comparisons per draw, `⌈log₂(2N + 1)⌉`.
    pub fn max_comparisons(&self) -> u64 {
        (2 * self.n + 1).next_power_of_two().trailing_zeros() as u64
    }
}

#[derive(Debug)]
pub struct BsitsSampler<R = RngStream> {
    tree: InorderCdfTree,
    rng: R,
    draws: u64,
    comparisons: u64,
    max_comparisons: u64,
    anomalies: u64,
}

impl<R: UniformSource> BsitsSampler<R> {
    pub fn new(tree: InorderCdfTree, rng: R) -> Self {
        BsitsSampler { tree, rng, draws: 0, comparisons: 0, max_comparisons: 0, anomalies: 0 }
    }

    pub fn tree(&self) -> &InorderCdfTree {
        &self.tree
    }

    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    /// Largest comparison count of any single draw so far.
    pub fn max_comparisons_seen(&self) -> u64 {
        self.max_comparisons
    }

    pub fn anomalies(&self) -> u64 {
        self.anomalies
    }

    pub fn mean_comparisons(&self) -> f64 {
        self.comparisons as f64 / self.draws as f64
    }
}

impl<R: UniformSource> Sampler for BsitsSampler<R> {
    fn sample(&mut self) -> usize {
        let hit = self.tree.search(self.rng.uniform());
        self.draws += 1;
        self.comparisons += hit.comparisons;
        self.max_comparisons = self.max_comparisons.max(hit.comparisons);
        self.anomalies += hit.clamped as u64;
        hit.index
    }
}
