//! Shared data types: weight tables, the LSB-first bit-path codec, and the
//! random-number contract every sampler draws from.

use std::collections::VecDeque;
use std::io::Read;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::pairwise_tree::pairwise_sum;

/// Identity of the pinned generator, recorded in every output header.
pub const GENERATOR_ID: &str = "ChaCha8 (rand_chacha 0.3), 52-bit open-interval uniforms";

/// Tolerance on `|total - 1|` when a caller marks a table as normalized.
const NORMALIZED_TOLERANCE: f64 = 1e-6;

/// Least `d` with `2^d ≥ n_max + 1`; zero for a single-point support.
pub fn depth_for(n_max: usize) -> u32 {
    let size = n_max as u128 + 1;
    size.next_power_of_two().trailing_zeros()
}

/// A target distribution over `{0, …, N}` given by non-negative weights.
///
/// The weights need not sum to one. The stored total is the pairwise sum of the
/// weights in the same pairing order as [`crate::PairwiseTree`], so it is
/// bit-identical to the root of a tree built from this table.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    weights: Vec<f64>,
    total: f64,
    normalized: bool,
}

impl WeightTable {
    /// Unnormalized table. Zero weights are allowed as long as the total is positive.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::build(weights, false, false)
    }

    /// Table whose caller asserts the weights sum to one (checked to 1e-6).
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        Self::build(weights, true, false)
    }

    /// Like [`WeightTable::new`] but rejects zero weights, as in the classical
    /// setting where every support point has positive mass.
    pub fn strict(weights: Vec<f64>) -> Result<Self> {
        Self::build(weights, false, true)
    }

    fn build(weights: Vec<f64>, normalized: bool, strict: bool) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::validation("weight table is empty"));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::validation(format!("weight {i} is not finite ({w})")));
            }
            if w < 0.0 {
                return Err(Error::validation(format!("weight {i} is negative ({w})")));
            }
            if strict && w == 0.0 {
                return Err(Error::validation(format!("weight {i} is zero")));
            }
        }
        let total = pairwise_sum(&weights);
        if total <= 0.0 {
            return Err(Error::validation("all weights are zero"));
        }
        if !total.is_finite() {
            return Err(Error::validation("weight total overflows"));
        }
        if normalized && (total - 1.0).abs() > NORMALIZED_TOLERANCE {
            return Err(Error::validation(format!(
                "table marked normalized but sums to {total}"
            )));
        }
        Ok(WeightTable { weights, total, normalized })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Support size `N + 1`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest support index `N`.
    pub fn max_index(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn depth(&self) -> u32 {
        depth_for(self.max_index())
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `π(i) / total`.
    pub fn probability(&self, i: usize) -> f64 {
        self.weights[i] / self.total
    }

    /// Same table with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::build(self.weights.iter().map(|w| w * factor).collect(), false, false)
    }
}

/// Binary digits `(n₁, …, n_d)`, least significant first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitPath {
    bits: Vec<u8>,
}

impl BitPath {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::domain(format!("bit {pos} is {} (not 0 or 1)", bits[pos])));
        }
        if bits.len() > 63 {
            return Err(Error::domain("bit paths longer than 63 digits are not supported"));
        }
        Ok(BitPath { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn depth(&self) -> u32 {
        self.bits.len() as u32
    }

    /// `Σ n_j 2^(j-1)`.
    pub fn value(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &b)| acc | ((b as usize) << j))
    }
}

/// LSB-first binary expansion of `i` with exactly `depth` digits.
pub fn encode(i: usize, depth: u32) -> Result<BitPath> {
    if depth > 63 {
        return Err(Error::domain(format!("depth {depth} exceeds 63")));
    }
    if (i as u128) >= (1u128 << depth) {
        return Err(Error::domain(format!("index {i} does not fit in {depth} bits")));
    }
    let bits = (0..depth).map(|j| ((i >> j) & 1) as u8).collect();
    Ok(BitPath { bits })
}

pub fn decode(path: &BitPath) -> usize {
    path.value()
}

/// Source of uniform variates in the open interval `(0, 1)`.
///
/// Every Bernoulli decision in the crate goes through [`UniformSource::bernoulli`],
/// which consumes exactly one variate and returns 1 iff `u < rho`.
pub trait UniformSource {
    fn uniform(&mut self) -> f64;

    /// Number of variates (or scripted coins) consumed so far.
    fn draws(&self) -> u64;

    fn bernoulli(&mut self, rho: f64) -> u8 {
        (self.uniform() < rho) as u8
    }
}

impl<S: UniformSource + ?Sized> UniformSource for &mut S {
    fn uniform(&mut self) -> f64 {
        (**self).uniform()
    }

    fn draws(&self) -> u64 {
        (**self).draws()
    }

    fn bernoulli(&mut self, rho: f64) -> u8 {
        (**self).bernoulli(rho)
    }
}

/// Seeded, platform-independent stream of uniforms in `(0, 1)`.
///
/// Each variate is `(k + 1/2) · 2^-52` for the top 52 bits `k` of one ChaCha8
/// output word, so it is exactly representable and never 0 or 1.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    draws: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent substream `stream` of the generator keyed by `seed`.
    /// Parallel workers take distinct stream numbers under one seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng, draws: 0 }
    }

    /// Substream derived from this stream's seed.
    pub fn split(&self, stream: u64) -> Self {
        Self::with_stream(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Raw 64-bit output, counted as one draw.
    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.rng.next_u64()
    }
}

impl UniformSource for RngStream {
    fn uniform(&mut self) -> f64 {
        let k = self.next_u64() >> 12;
        (k as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }

    fn draws(&self) -> u64 {
        self.draws
    }
}

/// Replays a fixed list of coin outcomes, ignoring the requested bias.
///
/// Only [`UniformSource::bernoulli`] is meaningful; asking it for a raw
/// uniform panics. Running out of scripted coins also panics.
#[derive(Clone, Debug, Default)]
pub struct ScriptedCoins {
    coins: VecDeque<u8>,
    used: u64,
}

impl ScriptedCoins {
    pub fn new(coins: impl IntoIterator<Item = u8>) -> Self {
        ScriptedCoins { coins: coins.into_iter().collect(), used: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.coins.len()
    }
}

impl UniformSource for ScriptedCoins {
    fn uniform(&mut self) -> f64 {
        panic!("ScriptedCoins only supplies coin outcomes");
    }

    fn draws(&self) -> u64 {
        self.used
    }

    fn bernoulli(&mut self, _rho: f64) -> u8 {
        self.used += 1;
        self.coins.pop_front().expect("scripted coin sequence exhausted")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightFormat {
    /// One decimal weight per line; blank lines and `#` comments are skipped.
    Plain,
    /// `{"weights": [...], "normalized": bool}`.
    Json,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonWeights {
    weights: Vec<f64>,
    #[serde(default)]
    normalized: bool,
}

/// Parses and validates a weight table.
pub fn load_weights<R: Read>(mut source: R, format: WeightFormat) -> Result<WeightTable> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::format("input is not valid UTF-8"),
            _ => Error::Io(e),
        })?;
    match format {
        WeightFormat::Plain => {
            let mut weights = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let w: f64 = line.parse().map_err(|_| {
                    Error::format(format!("line {}: cannot parse {line:?} as a number", lineno + 1))
                })?;
                if !w.is_finite() {
                    return Err(Error::format(format!(
                        "line {}: non-finite token {line:?}",
                        lineno + 1
                    )));
                }
                weights.push(w);
            }
            WeightTable::new(weights)
        }
        WeightFormat::Json => {
            let parsed: JsonWeights =
                serde_json::from_str(&text).map_err(|e| Error::format(e.to_string()))?;
            if parsed.normalized {
                WeightTable::normalized(parsed.weights)
            } else {
                WeightTable::new(parsed.weights)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_examples() {
        assert_eq!(depth_for(7), 3);
        assert_eq!(depth_for(0), 0);
        assert_eq!(depth_for(4), 3);
        assert_eq!(depth_for(1), 1);
        assert_eq!(depth_for(8), 4);
    }

    #[test]
    fn depth_brackets_support_size() {
        let mut prev = 0;
        for n in 1..5000usize {
            let d = depth_for(n);
            assert!(d >= prev);
            assert!((1usize << (d - 1)) < n + 1 && n + 1 <= (1usize << d));
            prev = d;
        }
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(5, 3).unwrap().bits(), &[1, 0, 1]);
        assert_eq!(encode(0, 4).unwrap().bits(), &[0, 0, 0, 0]);
        assert_eq!(encode(6, 3).unwrap().bits(), &[0, 1, 1]);
        assert!(matches!(encode(8, 3), Err(Error::Domain(_))));
        assert_eq!(encode(0, 0).unwrap().depth(), 0);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode(&BitPath::new(vec![1, 0, 1]).unwrap()), 5);
        assert_eq!(decode(&BitPath::new(vec![0, 0, 0]).unwrap()), 0);
        assert_eq!(decode(&BitPath::new(vec![1, 1, 1, 1]).unwrap()), 15);
        assert!(BitPath::new(vec![0, 2]).is_err());
    }

    #[test]
    fn codec_bijection_small_depths() {
        for d in 0..=12 {
            for i in 0..(1usize << d) {
                assert_eq!(decode(&encode(i, d).unwrap()), i);
            }
        }
    }

    #[test]
    fn plain_weights() {
        let t = load_weights("0.5\n0.25\n0.125\n0.125\n".as_bytes(), WeightFormat::Plain).unwrap();
        assert_eq!(t.max_index(), 3);
        assert_eq!(t.total(), 1.0);

        let t = load_weights("1\n1\n1\n".as_bytes(), WeightFormat::Plain).unwrap();
        assert_eq!(t.max_index(), 2);
        assert_eq!(t.total(), 3.0);
        assert!(!t.is_normalized());

        let t = load_weights("# header\n\n2\n  # indented comment\n3\n".as_bytes(), WeightFormat::Plain)
            .unwrap();
        assert_eq!(t.weights(), &[2.0, 3.0]);
    }

    #[test]
    fn plain_weights_rejections() {
        assert!(matches!(
            load_weights("-1\n2\n".as_bytes(), WeightFormat::Plain),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            load_weights("0\n0\n".as_bytes(), WeightFormat::Plain),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            load_weights("1\nabc\n".as_bytes(), WeightFormat::Plain),
            Err(Error::Format(_))
        ));
        for tok in ["NaN", "inf", "-inf", "infinity"] {
            let src = format!("1\n{tok}\n");
            assert!(matches!(
                load_weights(src.as_bytes(), WeightFormat::Plain),
                Err(Error::Format(_))
            ));
        }
    }

    #[test]
    fn json_weights() {
        let t = load_weights(
            r#"{"weights":[0.25,0.25,0.5],"normalized":true}"#.as_bytes(),
            WeightFormat::Json,
        )
        .unwrap();
        assert!(t.is_normalized());
        assert_eq!(t.len(), 3);

        let t = load_weights(r#"{"weights":[1,2]}"#.as_bytes(), WeightFormat::Json).unwrap();
        assert!(!t.is_normalized());

        assert!(matches!(
            load_weights(r#"{"weights":[1,2],"normalized":true}"#.as_bytes(), WeightFormat::Json),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            load_weights(r#"{"weights":[1,NaN]}"#.as_bytes(), WeightFormat::Json),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn strict_rejects_zero() {
        assert!(WeightTable::strict(vec![1.0, 0.0]).is_err());
        assert!(WeightTable::new(vec![1.0, 0.0]).is_ok());
    }

    #[test]
    fn uniform_open_interval_and_reproducible() {
        let mut a = RngStream::new(7);
        let mut b = RngStream::new(7);
        for _ in 0..100_000 {
            let u = a.uniform();
            assert!(u > 0.0 && u < 1.0);
            assert_eq!(u.to_bits(), b.uniform().to_bits());
        }
        assert_eq!(a.draws(), 100_000);
    }

    #[test]
    fn extreme_uniforms_stay_inside() {
        let lo = 0.5 * (1.0 / (1u64 << 52) as f64);
        let hi = ((1u64 << 52) - 1) as f64 * (1.0 / (1u64 << 52) as f64) + lo;
        assert!(lo > 0.0);
        assert!(hi < 1.0);
    }

    #[test]
    fn bernoulli_degenerate_biases() {
        let mut r = RngStream::new(1);
        for _ in 0..10_000 {
            assert_eq!(r.bernoulli(0.0), 0);
            assert_eq!(r.bernoulli(1.0), 1);
        }
        assert_eq!(r.draws(), 20_000);
    }

    #[test]
    fn substreams_differ() {
        let mut a = RngStream::with_stream(3, 0);
        let mut b = RngStream::with_stream(3, 1);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn scripted_coins_replay() {
        let mut s = ScriptedCoins::new([1, 0, 1]);
        assert_eq!(s.bernoulli(0.0), 1);
        assert_eq!(s.bernoulli(1.0), 0);
        assert_eq!(s.draws(), 2);
        assert_eq!(s.remaining(), 1);
    }
}
