//! Named weight tables used by the benchmarks, examples and acceptance checks.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};
use crate::model::{RngStream, UniformSource, WeightTable};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NamedDistribution {
    Uniform,
    /// `π(i) ∝ (i+1)^-s`.
    Zipf(f64),
    /// `π(i) ∝ (N-i+1)^-s`, nondecreasing in `i`.
    ReversedZipf(f64),
    /// Binomial(N, γ).
    Binomial(f64),
    /// `π(0) = 1 - 2ε/(N+1)`, `π(i) = 2ε/(N(N+1))` otherwise; mean `ε`.
    TwoLevel(f64),
}

impl NamedDistribution {
    pub fn table(&self, n_max: usize) -> Result<WeightTable> {
        match *self {
            NamedDistribution::Uniform => WeightTable::new(vec![1.0; n_max + 1]),
            NamedDistribution::Zipf(s) => zipf(n_max, s),
            NamedDistribution::ReversedZipf(s) => reversed_zipf(n_max, s),
            NamedDistribution::Binomial(g) => binomial(n_max, g),
            NamedDistribution::TwoLevel(eps) => two_level(n_max, eps),
        }
    }
}

impl fmt::Display for NamedDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedDistribution::Uniform => write!(f, "uniform"),
            NamedDistribution::Zipf(s) => write!(f, "zipf:{s}"),
            NamedDistribution::ReversedZipf(s) => write!(f, "reversed-zipf:{s}"),
            NamedDistribution::Binomial(g) => write!(f, "binomial:{g}"),
            NamedDistribution::TwoLevel(e) => write!(f, "two-level:{e}"),
        }
    }
}

impl FromStr for NamedDistribution {
    type Err = Error;

    /// `uniform`, `zipf:S`, `reversed-zipf:S`, `binomial:GAMMA`, `two-level:EPS`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let param = |default: Option<f64>| -> Result<f64> {
            match (arg, default) {
                (Some(a), _) => a
                    .parse::<f64>()
                    .map_err(|_| Error::format(format!("bad parameter {a:?} in {s:?}"))),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(Error::format(format!("{name} needs a parameter"))),
            }
        };
        match name {
            "uniform" => Ok(NamedDistribution::Uniform),
            "zipf" => Ok(NamedDistribution::Zipf(param(Some(3.0))?)),
            "reversed-zipf" => Ok(NamedDistribution::ReversedZipf(param(Some(3.0))?)),
            "binomial" => Ok(NamedDistribution::Binomial(param(Some(0.5))?)),
            "two-level" => Ok(NamedDistribution::TwoLevel(param(Some(0.5))?)),
            _ => Err(Error::format(format!("unknown distribution {name:?}"))),
        }
    }
}

pub fn zipf(n_max: usize, s: f64) -> Result<WeightTable> {
    WeightTable::new((0..=n_max).map(|i| (i as f64 + 1.0).powf(-s)).collect())
}

pub fn reversed_zipf(n_max: usize, s: f64) -> Result<WeightTable> {
    WeightTable::new((0..=n_max).map(|i| ((n_max - i) as f64 + 1.0).powf(-s)).collect())
}

pub fn binomial(n_max: usize, gamma: f64) -> Result<WeightTable> {
    let b = Binomial::new(gamma, n_max as u64)
        .map_err(|e| Error::validation(format!("binomial parameters: {e}")))?;
    WeightTable::new((0..=n_max).map(|i| b.pmf(i as u64)).collect())
}

pub fn two_level(n_max: usize, eps: f64) -> Result<WeightTable> {
    let n = n_max as f64;
    if n_max == 0 || !(eps > 0.0 && eps < (n + 1.0) / 2.0) {
        return Err(Error::validation(format!(
            "two-level table needs N ≥ 1 and 0 < ε < (N+1)/2, got N={n_max}, ε={eps}"
        )));
    }
    let mut w = vec![2.0 * eps / (n * (n + 1.0)); n_max + 1];
    w[0] = 1.0 - 2.0 * eps / (n + 1.0);
    WeightTable::new(w)
}

/// Weights drawn uniformly from `(0, 1)`.
pub fn random(n_max: usize, rng: &mut RngStream) -> WeightTable {
    WeightTable::new((0..=n_max).map(|_| rng.uniform()).collect()).expect("positive weights")
}

/// Mean `μ = Σ i π(i) / total`.
pub fn mean_index(table: &WeightTable) -> f64 {
    table
        .weights()
        .iter()
        .enumerate()
        .map(|(i, &w)| i as f64 * w)
        .sum::<f64>()
        / table.total()
}
