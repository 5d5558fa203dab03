//! Weighted discrete sampling on a binarized support.
//!
//! The support `{0, …, N}` of a discrete distribution is padded to `2^d`
//! leaves and summed pairwise into a binary tree whose node at level `ℓ`
//! aggregates every leaf sharing its `ℓ` low-order bits. Two procedures share
//! that tree:
//!
//! * **backward binary sampling** ([`bbs`]) builds the tree bottom-up and, on
//!   the way, tosses one biased coin per positive internal node; the unique
//!   leaf that survives every toss is an exact sample;
//! * **forward binary sampling** ([`fbs`]) walks from the root to a leaf,
//!   choosing each bit with the branch probability of the current node, and
//!   costs exactly `d` coin tosses per sample.
//!
//! [`bs_stream`] strings them together: one backward pass, then as many
//! forward walks as needed.
//!
//! For comparison the crate also ships the two inverse-transform baselines
//! (a linear scan over a sequential CDF and a binary search over a complete
//! tree of inorder prefix sums), a mixed-radix adapter for multidimensional
//! supports with a total-variation certificate for truncation, and the
//! meters used to check all of it: exact leaf enumeration, chi-square
//! goodness of fit, single-precision rounding-error shadows and
//! comparison-cost models.
//!
//! ```
//! use binary_sampling::{bs_stream, RngStream, WeightTable};
//!
//! let table = WeightTable::new(vec![0.5, 0.25, 0.125, 0.125]).unwrap();
//! let mut rng = RngStream::new(42);
//! let samples = bs_stream(&table, &mut rng, 10);
//! assert_eq!(samples.len(), 10);
//! assert!(samples.iter().all(|&i| i < 4));
//! ```

pub mod bs_sampler;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod its_baselines;
pub mod model;
pub mod multidim;
pub mod pairwise_tree;
pub mod verify;

pub use bs_sampler::{bbs, bbs_explicit, bs_stream, fbs, BbsTrace, BsSampler};
pub use error::{Error, Result};
pub use its_baselines::{
    BsitsSampler, CumulativeTable, InorderCdfTree, NaiveItsSampler, ScanDirection,
};
pub use model::{
    decode, depth_for, encode, load_weights, BitPath, RngStream, ScriptedCoins, UniformSource,
    WeightFormat, WeightTable,
};
pub use multidim::{truncated_sampler, Shape, Support, TruncatedSampler, TruncationReport};
pub use pairwise_tree::{BuildMode, PairwiseTree};

/// Anything that emits indices of a discrete distribution, one call at a time.
pub trait Sampler {
    fn sample(&mut self) -> usize;
}
