use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::randmap::{symmetric_g, SymmetricGSpec};
use crate::vecnorm::NormSpec;

/// One row of the single-loss distortion table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub d: usize,
    /// Largest estimate-to-norm ratio over the test vectors.
    pub max_ratio: f64,
    /// Smallest estimate-to-norm ratio over the test vectors.
    pub min_ratio: f64,
    /// `max_ratio / min_ratio`.
    pub proxy: f64,
}

/// A vector stored as runs of equal magnitudes, largest first.
type Runs = Vec<(f64, usize)>;

fn expand(runs: &Runs, d: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(d);
    for &(x, c) in runs {
        v.extend(std::iter::repeat_n(x, c));
    }
    v.resize(d, 0.0);
    v
}

/// Smallest `lambda` with `sum G(|x_i| / lambda) <= 1`, found by bisection
/// in log space. At unit mass every scaled coordinate stays at most 1, so the
/// linear tail of `G` never enters.
fn gauge(spec: &SymmetricGSpec, runs: &Runs) -> f64 {
    let bound = 1.0;
    let mass = |lambda: f64| -> f64 { runs.iter().map(|&(x, c)| c as f64 * spec.eval(x / lambda)).sum() };
    let (mut lo, mut hi) = (1e-12f64, 1.0f64);
    while mass(hi) > bound {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mass(mid) > bound {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    hi
}

/// Test vectors: the increments `sqrt(i) - sqrt(i-1)` and the flat vectors
/// with `k` ones for every `k`.
fn test_vectors(d: usize) -> Vec<Runs> {
    let mut out = Vec::with_capacity(d + 1);
    out.push(
        (1..=d)
            .map(|i| ((i as f64).sqrt() - ((i - 1) as f64).sqrt(), 1))
            .collect(),
    );
    out.extend((1..=d).map(|k| vec![(1.0, k)]));
    out
}

/// Distortion of the best single-loss gauge for `norm`.
///
/// The loss is the level table of `norm` (normalized so a basis vector has
/// norm 1). For every test vector the gauge `inf { l : sum G(|x|/l) <= 1 }`
/// is divided by the true norm; the proxy is the spread of those ratios.
pub fn single_loss_distortion(norm: &NormSpec, beta: f64) -> Result<LowerBoundRow> {
    let d = norm.dim();
    let spec = symmetric_g(norm, beta, 2.0)?;
    let (normed, _) = norm.normalized()?;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for runs in test_vectors(d) {
        let truth = normed.eval_sorted(&expand(&runs, d));
        let ratio = gauge(&spec, &runs) / truth;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(LowerBoundRow {
        d,
        max_ratio: hi,
        min_ratio: lo,
        proxy: hi / lo,
    })
}

/// The proxy for `norm_for_dim(d)` at each dimension in `dims`.
pub fn lowerbound_demo<F>(norm_for_dim: F, dims: &[usize], beta: f64) -> Result<Vec<LowerBoundRow>>
where
    F: Fn(usize) -> Result<NormSpec>,
{
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("dimensions must be strictly increasing"));
    }
    dims.iter()
        .map(|&d| single_loss_distortion(&norm_for_dim(d)?, beta))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_dimension() {
        let rows = lowerbound_demo(|d| Ok(NormSpec::l2(d)), &[4, 8, 16], 1.5).unwrap();
        assert_eq!(rows.iter().map(|r| r.d).collect::<Vec<_>>(), vec![4, 8, 16]);
        assert!(rows.iter().all(|r| r.proxy >= 1.0));
        assert!(lowerbound_demo(|d| Ok(NormSpec::l2(d)), &[8, 4], 1.5).is_err());
    }
}
