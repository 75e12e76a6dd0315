use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::netgen::EmbeddingSpec;
use crate::vecnorm::{sorted_abs, NormKind, NormSpec};

/// A distance between two points of the same dimension.
pub trait DistanceOracle: Sync {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;

    /// Whether the triangle inequality is expected to hold.
    fn is_metric(&self) -> bool {
        true
    }

    /// Rough relative cost of one evaluation.
    fn cost(&self) -> f64 {
        1.0
    }

    fn label(&self) -> String;
}

impl<T: DistanceOracle + ?Sized> DistanceOracle for &T {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        (**self).distance(a, b)
    }
    fn is_metric(&self) -> bool {
        (**self).is_metric()
    }
    fn cost(&self) -> f64 {
        (**self).cost()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// `||a - b||` under a symmetric norm.
#[derive(Debug, Clone)]
pub struct NormOracle {
    norm: NormSpec,
    linf: bool,
}

impl NormOracle {
    pub fn new(norm: NormSpec) -> Self {
        let linf = matches!(norm.kind(), NormKind::Lp { p } if p.is_infinite());
        Self { norm, linf }
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }
}

impl DistanceOracle for NormOracle {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.linf {
            let m = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            return self.norm.scale() * m;
        }
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm.eval_sorted(&sorted_abs(&diff))
    }

    fn cost(&self) -> f64 {
        a_cost(self.norm.dim())
    }

    fn label(&self) -> String {
        self.norm.label()
    }
}

fn a_cost(d: usize) -> f64 {
    d as f64 * (d as f64).log2().max(1.0)
}

/// One factor of a product space: coordinates `start..start + len` measured
/// by `weight * top_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductFactor {
    pub start: usize,
    pub len: usize,
    pub k: usize,
    pub weight: f64,
}

/// How factor distances are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductCombine {
    Max,
    Sum,
}

/// Weighted product of top-k norms over blocks of coordinates, optionally
/// with each factor distance divided by a per-factor scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductOracle {
    factors: Vec<ProductFactor>,
    combine: ProductCombine,
    divisors: Option<Vec<f64>>,
    dim: usize,
}

impl ProductOracle {
    pub fn new(factors: Vec<ProductFactor>, combine: ProductCombine) -> Result<Self> {
        if factors.is_empty() {
            return Err(invalid("product needs at least one factor"));
        }
        let mut dim = 0;
        for f in &factors {
            if f.len == 0 || f.k == 0 || f.k > f.len {
                return Err(invalid(format!("factor needs 1 <= k <= len, got {f:?}")));
            }
            if !(f.weight.is_finite() && f.weight >= 0.0) {
                return Err(invalid("factor weights must be finite and non-negative"));
            }
            dim = dim.max(f.start + f.len);
        }
        if factors.iter().all(|f| f.weight == 0.0) {
            return Err(invalid("all factor weights are zero"));
        }
        Ok(Self {
            factors,
            combine,
            divisors: None,
            dim,
        })
    }

    /// `m` consecutive blocks of length `block`; factor `i` uses `top_{k_i}`
    /// with weight `w_i`.
    pub fn blocks(
        block: usize,
        spec: &[(usize, f64)],
        combine: ProductCombine,
    ) -> Result<Self> {
        let factors = spec
            .iter()
            .enumerate()
            .map(|(i, &(k, weight))| ProductFactor {
                start: i * block,
                len: block,
                k,
                weight,
            })
            .collect();
        Self::new(factors, combine)
    }

    /// The same product with factor `i` divided by `divisors[i]`.
    pub fn with_divisors(&self, divisors: Vec<f64>) -> Result<Self> {
        if divisors.len() != self.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.factors.len(),
                found: divisors.len(),
            });
        }
        if divisors.iter().any(|u| !(u.is_finite() && *u > 0.0)) {
            return Err(invalid("divisors must be positive"));
        }
        Ok(Self {
            divisors: Some(divisors),
            ..self.clone()
        })
    }

    /// The same factors combined differently.
    pub fn with_combine(&self, combine: ProductCombine) -> Self {
        Self {
            combine,
            ..self.clone()
        }
    }

    pub fn combine(&self) -> ProductCombine {
        self.combine
    }

    pub fn factors(&self) -> &[ProductFactor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Distance of factor `i` (weight and divisor applied).
    pub fn factor_distance(&self, i: usize, a: &[f64], b: &[f64]) -> f64 {
        let f = &self.factors[i];
        let mut diff: Vec<f64> = a[f.start..f.start + f.len]
            .iter()
            .zip(&b[f.start..f.start + f.len])
            .map(|(x, y)| (x - y).abs())
            .collect();
        let top = if f.k == 1 {
            diff.iter().copied().fold(0.0, f64::max)
        } else if f.k == f.len {
            diff.iter().sum()
        } else {
            diff.select_nth_unstable_by(f.k - 1, |x, y| y.total_cmp(x));
            diff[..f.k].iter().sum()
        };
        let u = self.divisors.as_ref().map_or(1.0, |d| d[i]);
        f.weight * top / u
    }
}

impl DistanceOracle for ProductOracle {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let parts = (0..self.factors.len()).map(|i| self.factor_distance(i, a, b));
        match self.combine {
            ProductCombine::Max => parts.fold(0.0, f64::max),
            ProductCombine::Sum => parts.sum(),
        }
    }

    fn cost(&self) -> f64 {
        self.dim as f64
    }

    fn label(&self) -> String {
        let c = match self.combine {
            ProductCombine::Max => "max",
            ProductCombine::Sum => "sum",
        };
        format!("{c}_product({})", self.factors.len())
    }
}

/// The embedded estimate `max_i sum_k c_{i,k} top_k(a - b)`.
#[derive(Debug, Clone)]
pub struct EmbeddedOracle {
    spec: Arc<EmbeddingSpec>,
}

impl EmbeddedOracle {
    pub fn new(spec: Arc<EmbeddingSpec>) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &EmbeddingSpec {
        &self.spec
    }
}

impl DistanceOracle for EmbeddedOracle {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.spec.eval_sorted(&sorted_abs(&diff))
    }

    fn cost(&self) -> f64 {
        a_cost(self.spec.dim()) + (self.spec.frontier_len() * self.spec.num_levels()) as f64
    }

    fn label(&self) -> String {
        format!("embedded({})", self.spec.norm().label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_distances() {
        let o = ProductOracle::blocks(2, &[(1, 1.0), (2, 0.5)], ProductCombine::Max).unwrap();
        let a = [0.0, 0.0, 0.0, 0.0];
        let b = [3.0, -1.0, 2.0, 2.0];
        assert_eq!(o.distance(&a, &b), 3.0);
        let s = ProductOracle::blocks(2, &[(1, 1.0), (2, 0.5)], ProductCombine::Sum).unwrap();
        assert_eq!(s.distance(&a, &b), 5.0);
        let u = s.with_divisors(vec![3.0, 1.0]).unwrap();
        assert_eq!(u.distance(&a, &b), 3.0);
        assert!(ProductOracle::blocks(2, &[(1, 0.0)], ProductCombine::Max).is_err());
        assert!(ProductOracle::blocks(2, &[(3, 1.0)], ProductCombine::Max).is_err());
    }

    #[test]
    fn linf_fast_path_matches_norm() {
        let o = NormOracle::new(NormSpec::linf(3).scaled(2.0).unwrap());
        assert_eq!(o.distance(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]), 6.0);
    }
}
