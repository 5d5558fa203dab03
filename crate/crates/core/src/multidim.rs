//! Multidimensional supports and truncated approximate sampling.
//!
//! A box `{0..=M_1} × … × {0..=M_K}` is flattened onto `{0, …, Π(M_k+1) - 1}`
//! with the first coordinate varying fastest. For distributions known only up
//! to a constant (and possibly with unbounded support), the sampler is built on
//! a caller-chosen finite support; the kept mass `L̃` comes out of the tree root
//! and, given an upper bound `T` on the excluded mass, `2T / L̃` bounds the
//! total-variation distance (`Σ|p - q|` convention) between target and
//! truncation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bs_sampler::BsSampler;
use crate::error::{Error, Result};
use crate::model::{RngStream, UniformSource, WeightTable};
use crate::Sampler;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    extents: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Shape {
    /// `extents[k] = M_k + 1`; each must be at least 1 and their product must
    /// fit in `usize`.
    pub fn new(extents: Vec<usize>) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::validation("shape needs at least one dimension"));
        }
        let mut strides = Vec::with_capacity(extents.len());
        let mut len = 1usize;
        for (k, &e) in extents.iter().enumerate() {
            if e == 0 {
                return Err(Error::validation(format!("extent {k} is zero")));
            }
            strides.push(len);
            len = len
                .checked_mul(e)
                .ok_or_else(|| Error::validation("shape size overflows the index type"))?;
        }
        Ok(Shape { extents, strides, len })
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn ndim(&self) -> usize {
        self.extents.len()
    }

    /// Number of cells, `Π extents`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn flatten(&self, m: &[usize]) -> Result<usize> {
        if m.len() != self.ndim() {
            return Err(Error::domain(format!(
                "multi-index has {} components, shape has {}",
                m.len(),
                self.ndim()
            )));
        }
        m.iter()
            .zip(&self.extents)
            .zip(&self.strides)
            .enumerate()
            .try_fold(0usize, |acc, (k, ((&mk, &e), &s))| {
                if mk >= e {
                    Err(Error::domain(format!("component {k} = {mk} out of range 0..{e}")))
                } else {
                    Ok(acc + mk * s)
                }
            })
    }

    pub fn unflatten(&self, mut i: usize) -> Result<Vec<usize>> {
        if i >= self.len {
            return Err(Error::domain(format!("index {i} out of range 0..{}", self.len)));
        }
        Ok(self
            .extents
            .iter()
            .map(|&e| {
                let m = i % e;
                i /= e;
                m
            })
            .collect())
    }

    /// Every multi-index in lexicographic order (last coordinate fastest).
    pub fn lexicographic(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let mut next = Some(vec![0usize; self.ndim()]);
        std::iter::from_fn(move || {
            let cur = next.take()?;
            let mut succ = cur.clone();
            for k in (0..succ.len()).rev() {
                succ[k] += 1;
                if succ[k] < self.extents[k] {
                    next = Some(succ);
                    break;
                }
                succ[k] = 0;
            }
            Some(cur)
        })
    }
}

/// Which cells of a shape the truncated distribution keeps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Support {
    All,
    Explicit(Vec<Vec<usize>>),
}

impl Support {
    /// Cells in canonical (lexicographic) order, validated against `shape`.
    pub fn cells(&self, shape: &Shape) -> Result<Vec<Vec<usize>>> {
        match self {
            Support::All => Ok(shape.lexicographic().collect()),
            Support::Explicit(list) => {
                if list.is_empty() {
                    return Err(Error::validation("support is empty"));
                }
                for m in list {
                    shape.flatten(m)?;
                }
                let mut cells = list.clone();
                cells.sort();
                if let Some(w) = cells.windows(2).find(|w| w[0] == w[1]) {
                    return Err(Error::validation(format!("support lists {:?} twice", w[0])));
                }
                Ok(cells)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationReport {
    /// `L̃`, the root weight of the tree over the kept support.
    pub kept_mass: f64,
    /// Caller's upper bound `T` on the excluded unnormalized mass.
    pub tail_bound_input: Option<f64>,
    /// `2T / L̃`.
    pub tv_bound: Option<f64>,
}

impl TruncationReport {
    /// `2T / (L̃ + T)`: the distance itself when `T` is the exact excluded mass.
    pub fn tv_exact(&self) -> Option<f64> {
        self.tail_bound_input.map(|t| 2.0 * t / (self.kept_mass + t))
    }
}

/// `Σ_i |p_i - q_i|` over two mass vectors on the same index set.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must share an index set");
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Binary sampler over a finite support of a multidimensional distribution.
#[derive(Debug)]
pub struct TruncatedSampler<R = RngStream> {
    shape: Shape,
    cells: Vec<Vec<usize>>,
    inner: BsSampler<R>,
}

impl<R: UniformSource> TruncatedSampler<R> {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Kept cells in canonical order; sampler position `i` is `cells()[i]`.
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn inner(&self) -> &BsSampler<R> {
        &self.inner
    }

    pub fn sample_multi(&mut self) -> Vec<usize> {
        self.cells[self.inner.sample()].clone()
    }
}

impl<R: UniformSource> Sampler for TruncatedSampler<R> {
    /// Flattened index of the sampled cell.
    fn sample(&mut self) -> usize {
        let pos = self.inner.sample();
        self.shape.flatten(&self.cells[pos]).expect("support validated against shape")
    }
}

/// Evaluates `weight_fn` on the support (in parallel, gathered in canonical
/// order) and runs the backward pass over the resulting unnormalized table.
pub fn truncated_sampler<F, R>(
    shape: &Shape,
    support: &Support,
    weight_fn: F,
    tail_bound: Option<f64>,
    rng: R,
) -> Result<(TruncatedSampler<R>, TruncationReport)>
where
    F: Fn(&[usize]) -> f64 + Sync,
    R: UniformSource,
{
    if let Some(t) = tail_bound {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::validation(format!("tail bound must be finite and ≥ 0, got {t}")));
        }
    }
    let cells = support.cells(shape)?;
    let weights: Vec<f64> = cells.par_iter().map(|m| weight_fn(m)).collect();
    if let Some((m, w)) = cells.iter().zip(&weights).find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::validation(format!("weight at {m:?} is {w}, expected finite and > 0")));
    }
    let table = WeightTable::new(weights)?;
    let inner = BsSampler::new(&table, rng);
    let kept_mass = inner.tree().total();
    let report = TruncationReport {
        kept_mass,
        tail_bound_input: tail_bound,
        tv_bound: tail_bound.map(|t| 2.0 * t / kept_mass),
    };
    Ok((TruncatedSampler { shape: shape.clone(), cells, inner }, report))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SupportSpec {
    Keyword(String),
    List(Vec<Vec<usize>>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescriptor {
    extents: Vec<usize>,
    #[serde(default = "default_support")]
    support: SupportSpec,
    #[serde(default)]
    tail_bound: Option<f64>,
}

fn default_support() -> SupportSpec {
    SupportSpec::Keyword("all".into())
}

/// Parsed `{"extents": [...], "support": "all" | [[...], ...], "tail_bound": x | null}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultidimDescriptor {
    pub shape: Shape,
    pub support: Support,
    pub tail_bound: Option<f64>,
}

impl MultidimDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawDescriptor =
            serde_json::from_str(text).map_err(|e| Error::format(e.to_string()))?;
        let shape = Shape::new(raw.extents)?;
        let support = match raw.support {
            SupportSpec::Keyword(k) if k == "all" => Support::All,
            SupportSpec::Keyword(k) => {
                return Err(Error::format(format!("unknown support keyword {k:?}")))
            }
            SupportSpec::List(list) => Support::Explicit(list),
        };
        support.cells(&shape)?;
        Ok(MultidimDescriptor { shape, support, tail_bound: raw.tail_bound })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_examples() {
        let s = Shape::new(vec![2, 3]).unwrap();
        assert_eq!(s.strides(), &[1, 2]);
        assert_eq!(s.flatten(&[1, 2]).unwrap(), 5);
        assert_eq!(s.flatten(&[0, 0]).unwrap(), 0);
        assert!(matches!(s.flatten(&[2, 0]), Err(Error::Domain(_))));
        assert!(s.flatten(&[0]).is_err());
    }

    #[test]
    fn unflatten_examples() {
        assert_eq!(Shape::new(vec![2, 3]).unwrap().unflatten(5).unwrap(), vec![1, 2]);
        assert_eq!(Shape::new(vec![2, 3]).unwrap().unflatten(0).unwrap(), vec![0, 0]);
        let cube = Shape::new(vec![10, 10, 10]).unwrap();
        assert_eq!(cube.unflatten(999).unwrap(), vec![9, 9, 9]);
        assert!(cube.unflatten(1000).is_err());
    }

    #[test]
    fn shape_validation() {
        assert!(Shape::new(vec![]).is_err());
        assert!(Shape::new(vec![3, 0]).is_err());
        assert!(Shape::new(vec![usize::MAX, 2]).is_err());
    }

    #[test]
    fn lexicographic_order() {
        let s = Shape::new(vec![2, 3]).unwrap();
        let all: Vec<_> = s.lexicographic().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[1], vec![0, 1]);
        assert_eq!(all[5], vec![1, 2]);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn geometric_truncation() {
        let shape = Shape::new(vec![4]).unwrap();
        let (_, report) = truncated_sampler(
            &shape,
            &Support::All,
            |m| 0.5f64.powi(m[0] as i32 + 1),
            Some(1.0 / 16.0),
            RngStream::new(1),
        )
        .unwrap();
        assert_eq!(report.kept_mass, 15.0 / 16.0);
        assert_eq!(report.tv_bound.unwrap(), 2.0 / 15.0);
        assert_eq!(report.tv_exact().unwrap(), 0.125);
    }

    #[test]
    fn no_truncation() {
        let shape = Shape::new(vec![2, 2]).unwrap();
        let (mut s, report) =
            truncated_sampler(&shape, &Support::All, |_| 1.0, Some(0.0), RngStream::new(2)).unwrap();
        assert_eq!(report.tv_bound, Some(0.0));
        for _ in 0..100 {
            let m = s.sample_multi();
            assert!(m[0] < 2 && m[1] < 2);
        }
    }

    #[test]
    fn rejects_bad_weights_and_support() {
        let shape = Shape::new(vec![3]).unwrap();
        assert!(truncated_sampler(&shape, &Support::All, |m| m[0] as f64, None, RngStream::new(0)).is_err());
        assert!(truncated_sampler(&shape, &Support::All, |_| f64::NAN, None, RngStream::new(0)).is_err());
        let dup = Support::Explicit(vec![vec![1], vec![1]]);
        assert!(truncated_sampler(&shape, &dup, |_| 1.0, None, RngStream::new(0)).is_err());
        let out = Support::Explicit(vec![vec![3]]);
        assert!(truncated_sampler(&shape, &out, |_| 1.0, None, RngStream::new(0)).is_err());
        assert!(truncated_sampler(&shape, &Support::All, |_| 1.0, Some(-1.0), RngStream::new(0)).is_err());
    }

    #[test]
    fn explicit_support_is_canonicalized() {
        let shape = Shape::new(vec![3, 3]).unwrap();
        let sup = Support::Explicit(vec![vec![2, 0], vec![0, 1], vec![1, 1]]);
        let (s, _) = truncated_sampler(&shape, &sup, |_| 1.0, None, RngStream::new(0)).unwrap();
        assert_eq!(s.cells(), &[vec![0, 1], vec![1, 1], vec![2, 0]]);
    }

    #[test]
    fn descriptor_parsing() {
        let d = MultidimDescriptor::from_json(r#"{"extents":[2,3],"support":"all","tail_bound":null}"#)
            .unwrap();
        assert_eq!(d.shape.len(), 6);
        assert_eq!(d.support, Support::All);
        assert_eq!(d.tail_bound, None);

        let d = MultidimDescriptor::from_json(r#"{"extents":[2,3],"support":[[0,1],[1,2]],"tail_bound":0.5}"#)
            .unwrap();
        assert_eq!(d.support, Support::Explicit(vec![vec![0, 1], vec![1, 2]]));
        assert_eq!(d.tail_bound, Some(0.5));

        assert!(MultidimDescriptor::from_json(r#"{"extents":[2],"support":"some"}"#).is_err());
        assert!(MultidimDescriptor::from_json(r#"{"extents":[2],"support":[[5]]}"#).is_err());
    }
}
