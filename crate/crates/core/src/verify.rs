//! Oracles and meters: exact leaf enumeration, chi-square goodness of fit,
//! single-precision rounding-error shadows and comparison-cost models.

use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::distributions::mean_index;
use crate::error::{Error, Result};
use crate::its_baselines::{CumulativeTable, NaiveItsSampler, ScanDirection};
use crate::model::{RngStream, UniformSource, WeightTable};
use crate::pairwise_tree::{pairwise_sum, PairwiseTree};
use crate::Sampler;

/// Largest depth [`exact_leaf_distribution`] will enumerate.
pub const MAX_ENUMERATION_DEPTH: u32 = 24;

/// Unit roundoff of IEEE single precision, `2^-24`.
pub const SINGLE_UNIT_ROUNDOFF: f64 = 1.0 / (1u64 << 24) as f64;

/// Minimum expected count per chi-square cell; sparser bins are pooled.
pub const MIN_EXPECTED_PER_CELL: f64 = 5.0;

/// Minimum samples per support point accepted by [`gof_test`].
pub const MIN_SAMPLES_PER_BIN: usize = 50;

/// Probability of every leaf (padding included) under the forward walk,
/// i.e. the product of branch probabilities along each root-to-leaf path.
///
/// Products are accumulated root first, in the same order as
/// [`PairwiseTree::leaf_prob_product`], so the two agree bit for bit.
pub fn exact_leaf_distribution(tree: &PairwiseTree) -> Result<Vec<f64>> {
    let depth = tree.depth();
    if depth > MAX_ENUMERATION_DEPTH {
        return Err(Error::precondition(format!(
            "depth {depth} exceeds the enumeration budget of {MAX_ENUMERATION_DEPTH}"
        )));
    }
    let mut probs = vec![1.0f64];
    for level in 0..depth {
        let half = 1usize << level;
        let mut next = vec![0.0f64; 2 * half];
        for (j, &p) in probs.iter().enumerate() {
            if tree.node_unchecked(level, j) > 0.0 {
                let rho = tree.rho_unchecked(level, j);
                next[j] = p * (1.0 - rho);
                next[j + half] = p * rho;
            }
        }
        probs = next;
    }
    Ok(probs)
}

/// Samples by inverting the exact leaf distribution; the meter's self-test.
#[derive(Debug)]
pub struct ExactSampler<R = RngStream> {
    cum: Vec<f64>,
    rng: R,
}

impl<R: UniformSource> ExactSampler<R> {
    pub fn new(tree: &PairwiseTree, rng: R) -> Result<Self> {
        let probs = exact_leaf_distribution(tree)?;
        let cum = probs
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Ok(ExactSampler { cum, rng })
    }
}

impl<R: UniformSource> Sampler for ExactSampler<R> {
    fn sample(&mut self) -> usize {
        let x = self.rng.uniform() * self.cum[self.cum.len() - 1];
        let i = self.cum.partition_point(|&c| c < x);
        i.min(self.cum.len() - 1)
    }
}

/// Always returns the same index. Used to check that the GOF meter rejects.
#[derive(Clone, Copy, Debug)]
pub struct ConstantSampler(pub usize);

impl Sampler for ConstantSampler {
    fn sample(&mut self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GofReport {
    pub sample_count: usize,
    /// Observed count per support index.
    pub bins: Vec<u64>,
    /// Samples that fell outside the support or on a zero-weight index.
    pub impossible: u64,
    /// Chi-square cells after pooling sparse bins.
    pub cells: usize,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub passed: bool,
}

/// Pearson chi-square test of `count` draws from `sampler` against the table.
///
/// Positive-weight bins are visited in index order and pooled until each cell
/// expects at least [`MIN_EXPECTED_PER_CELL`] samples; a short trailing cell is
/// merged into its predecessor. Any draw on a zero-weight or out-of-range index
/// fails the test outright.
pub fn gof_test<S: Sampler + ?Sized>(
    sampler: &mut S,
    table: &WeightTable,
    count: usize,
    alpha: f64,
) -> Result<GofReport> {
    let bins_len = table.len();
    let min_count = MIN_SAMPLES_PER_BIN * bins_len;
    if count < min_count {
        return Err(Error::precondition(format!(
            "need at least {min_count} samples for {bins_len} bins, got {count}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::precondition(format!("alpha must lie in (0, 1), got {alpha}")));
    }

    let mut bins = vec![0u64; bins_len];
    let mut impossible = 0u64;
    for _ in 0..count {
        let i = sampler.sample();
        match bins.get_mut(i) {
            Some(b) if table.weights()[i] > 0.0 => *b += 1,
            _ => impossible += 1,
        }
    }

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0f64, 0.0f64);
    for (i, &w) in table.weights().iter().enumerate() {
        if w > 0.0 {
            acc.0 += bins[i] as f64;
            acc.1 += count as f64 * w / table.total();
            if acc.1 >= MIN_EXPECTED_PER_CELL {
                cells.push(acc);
                acc = (0.0, 0.0);
            }
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => cells.push(acc),
        }
    }

    let degrees_of_freedom = cells.len().saturating_sub(1);
    let (chi_square, p_value) = if impossible > 0 {
        (f64::INFINITY, 0.0)
    } else if degrees_of_freedom == 0 {
        (0.0, 1.0)
    } else {
        let chi: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
        let dist = ChiSquared::new(degrees_of_freedom as f64).expect("positive dof");
        (chi, dist.sf(chi))
    };
    Ok(GofReport {
        sample_count: count,
        bins,
        impossible,
        cells: cells.len(),
        chi_square,
        degrees_of_freedom,
        p_value,
        alpha,
        passed: p_value > alpha,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SumMethod {
    Pairwise,
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    SingleShadow,
    Double,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    pub trial: usize,
    pub n: usize,
    pub method: SumMethod,
    pub precision: Precision,
    /// `|computed - reference| / reference`.
    pub relative_error: f64,
}

/// Neumaier-compensated double-precision sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Per trial: `n` weights in `(0, 1)` representable in single precision,
/// summed in single precision once pairwise and once sequentially, each
/// compared with a compensated double-precision reference of the same values.
pub fn rounding_error_experiment(
    n: usize,
    trials: usize,
    rng: &mut RngStream,
) -> Result<Vec<(ErrorReport, ErrorReport)>> {
    if !n.is_power_of_two() {
        return Err(Error::precondition(format!("size {n} is not a power of two")));
    }
    if trials == 0 {
        return Err(Error::precondition("need at least one trial"));
    }
    let mut out = Vec::with_capacity(trials);
    let mut xs = vec![0.0f32; n];
    for trial in 0..trials {
        for x in xs.iter_mut() {
            *x = ((rng.next_u64() >> 40) as f32 + 0.5) * (1.0 / (1u32 << 24) as f32);
        }
        let reference = compensated_sum(xs.iter().map(|&x| x as f64));
        let pairwise = pairwise_sum(&xs) as f64;
        let sequential = xs.iter().fold(0.0f32, |a, &x| a + x) as f64;
        let report = |method, value: f64| ErrorReport {
            trial,
            n,
            method,
            precision: Precision::SingleShadow,
            relative_error: (value - reference).abs() / reference,
        };
        out.push((report(SumMethod::Pairwise, pairwise), report(SumMethod::Sequential, sequential)));
    }
    Ok(out)
}

pub fn write_error_csv<W: Write>(mut out: W, reports: &[(ErrorReport, ErrorReport)]) -> Result<()> {
    writeln!(out, "trial,n,method,precision,relative_error")?;
    for (a, b) in reports {
        for r in [a, b] {
            let method = match r.method {
                SumMethod::Pairwise => "pairwise",
                SumMethod::Sequential => "sequential",
            };
            let precision = match r.precision {
                Precision::SingleShadow => "single_shadow",
                Precision::Double => "double",
            };
            writeln!(out, "{},{},{},{},{:e}", r.trial, r.n, method, precision, r.relative_error)?;
        }
    }
    Ok(())
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostCheck {
    pub measured_forward: f64,
    pub predicted_forward: f64,
    pub measured_backward: f64,
    pub predicted_backward: f64,
}

impl CostCheck {
    pub fn forward_rel_error(&self) -> f64 {
        (self.measured_forward - self.predicted_forward).abs() / self.predicted_forward
    }

    pub fn backward_rel_error(&self) -> f64 {
        (self.measured_backward - self.predicted_backward).abs() / self.predicted_backward
    }
}

/// Mean comparisons of both naive scans against `1 + μ` and `N + 1 - μ`.
pub fn cost_model_check(table: &WeightTable, draws: usize, rng: &mut RngStream) -> Result<CostCheck> {
    if draws < 10_000 {
        return Err(Error::precondition(format!("need at least 10000 draws, got {draws}")));
    }
    let mu = mean_index(table);
    let ct = CumulativeTable::build(table);
    let mut measure = |direction| {
        let mut s = NaiveItsSampler::new(ct.clone(), direction, &mut *rng);
        for _ in 0..draws {
            s.sample();
        }
        s.mean_comparisons()
    };
    let measured_forward = measure(ScanDirection::Forward);
    let measured_backward = measure(ScanDirection::Backward);
    Ok(CostCheck {
        measured_forward,
        predicted_forward: 1.0 + mu,
        measured_backward,
        predicted_backward: table.max_index() as f64 + 1.0 - mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairwise_tree::BuildMode;
    use crate::BsSampler;

    fn tree(ws: &[f64]) -> PairwiseTree {
        PairwiseTree::build(&WeightTable::new(ws.to_vec()).unwrap(), BuildMode::Sequential)
    }

    #[test]
    fn exact_examples() {
        let e = exact_leaf_distribution(&tree(&[0.5, 0.25, 0.125, 0.125])).unwrap();
        let want = [0.5, 0.25, 0.125, 0.125];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(exact_leaf_distribution(&tree(&[0.25; 4])).unwrap(), vec![0.25; 4]);

        let e = exact_leaf_distribution(&tree(&[0.2; 5])).unwrap();
        assert_eq!(e.len(), 8);
        for (i, p) in e.iter().enumerate() {
            let want = if i < 5 { 0.2 } else { 0.0 };
            assert!((p - want).abs() < 1e-12, "leaf {i}: {p}");
        }
        assert_eq!(&e[5..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn exact_refuses_deep_trees() {
        let t = tree(&vec![1.0; (1 << 24) + 1]);
        assert!(matches!(exact_leaf_distribution(&t), Err(Error::Precondition(_))));
    }

    #[test]
    fn gof_accepts_bs_and_rejects_constant() {
        let t = WeightTable::new(vec![1.0; 10]).unwrap();
        let mut bs = BsSampler::new(&t, RngStream::new(2024));
        let r = gof_test(&mut bs, &t, 100_000, 0.001).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.bins.iter().sum::<u64>(), 100_000);
        assert_eq!(r.degrees_of_freedom, 9);

        let r = gof_test(&mut ConstantSampler(0), &t, 100_000, 0.001).unwrap();
        assert!(!r.passed);
        assert!(r.p_value < 1e-12);
    }

    #[test]
    fn gof_preconditions() {
        let t = WeightTable::new(vec![1.0; 10]).unwrap();
        assert!(matches!(gof_test(&mut ConstantSampler(0), &t, 499, 0.001), Err(Error::Precondition(_))));
        assert!(gof_test(&mut ConstantSampler(0), &t, 500, 1.5).is_err());
    }

    #[test]
    fn gof_flags_zero_weight_hits() {
        let t = WeightTable::new(vec![1.0, 0.0, 1.0]).unwrap();
        let r = gof_test(&mut ConstantSampler(1), &t, 1000, 0.001).unwrap();
        assert_eq!(r.impossible, 1000);
        assert!(!r.passed);
        let r = gof_test(&mut ConstantSampler(7), &t, 1000, 0.001).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn gof_pools_sparse_tail() {
        let t = crate::distributions::zipf(1000, 3.0).unwrap();
        let mut s = ExactSampler::new(&PairwiseTree::build(&t, BuildMode::Sequential), RngStream::new(5)).unwrap();
        let r = gof_test(&mut s, &t, 100_000, 0.001).unwrap();
        assert!(r.cells < 1001);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn two_element_sums_agree() {
        let r = rounding_error_experiment(2, 50, &mut RngStream::new(1)).unwrap();
        for (p, s) in r {
            assert_eq!(p.relative_error, s.relative_error);
        }
        assert!(rounding_error_experiment(3, 1, &mut RngStream::new(1)).is_err());
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        assert_eq!(compensated_sum([1.0, 1e100, 1.0, -1e100]), 2.0);
    }

    #[test]
    fn error_csv_rows() {
        let r = rounding_error_experiment(16, 3, &mut RngStream::new(1)).unwrap();
        let mut buf = Vec::new();
        write_error_csv(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 6);
        assert!(text.lines().nth(1).unwrap().starts_with("0,16,pairwise,single_shadow,"));
    }

    #[test]
    fn cost_predictions() {
        let b = crate::distributions::binomial(100, 0.3).unwrap();
        let c = cost_model_check(&b, 10_000, &mut RngStream::new(3)).unwrap();
        assert!((c.predicted_forward - 31.0).abs() < 1e-9);
        assert!((c.predicted_backward - 71.0).abs() < 1e-9);

        let a = crate::distributions::two_level(1000, 0.5).unwrap();
        let c = cost_model_check(&a, 10_000, &mut RngStream::new(3)).unwrap();
        assert!((c.predicted_forward - 1.5).abs() < 1e-9);

        assert!(cost_model_check(&a, 9_999, &mut RngStream::new(3)).is_err());
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
