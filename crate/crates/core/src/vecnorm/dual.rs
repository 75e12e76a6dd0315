use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{lp_sorted, prefix_sums, GFunction, NormKind};
use crate::error::{Error, Result};

/// Options for the numeric dual oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericDualOptions {
    /// Target relative accuracy.
    pub tol: f64,
    /// Number of starting points.
    pub restarts: usize,
    /// Iteration cap per start.
    pub max_iters: usize,
    /// Seed for the random starts and search directions.
    pub seed: u64,
}

impl Default for GenericDualOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            restarts: 16,
            max_iters: 10_000,
            seed: 0x5eed_d0a1,
        }
    }
}

/// Exact dual of the unscaled norm on a sorted non-negative vector.
pub(super) fn closed_form(kind: &NormKind, s: &[f64]) -> Option<f64> {
    let d = s.len();
    match kind {
        NormKind::Lp { p } => Some(lp_sorted(s, conjugate(*p))),
        NormKind::Orlicz {
            g: GFunction::Power { p },
        } => Some(lp_sorted(s, conjugate(*p))),
        NormKind::TopK { k } => {
            let l1: f64 = s.iter().sum();
            Some(s[0].max(l1 / *k as f64))
        }
        NormKind::KFunctional { t } => Some(s[0].max(lp_sorted(s, 2.0) / t)),
        NormKind::Maximal { a } => {
            // the sorted part of the unit ball is the hull of 0 and xi^(j) / a_j
            let pre = prefix_sums(s);
            Some(pre.iter().zip(a).map(|(t, aj)| t / aj).fold(0.0, f64::max))
        }
        NormKind::Minimal { a } => {
            let c: Vec<f64> = (1..=d).map(|k| k as f64 / a[k - 1]).collect();
            top_k_constrained(&c, s)
        }
        NormKind::MaxOfScaledTopK { weights } => {
            if weights.contains(&0.0) {
                return None;
            }
            let c: Vec<f64> = weights.iter().map(|w| 1.0 / w).collect();
            top_k_constrained(&c, s)
        }
        NormKind::Orlicz { .. } => None,
    }
}

/// Dual of the norm whose unit ball is `{ x : top_k(x) <= c_k for all k }`.
///
/// When `c` (with `c_0 = 0`) is concave and non-decreasing the vector with
/// prefix sums exactly `c` is feasible and optimal, giving
/// `sum_k (s_k - s_{k+1}) c_k`. Otherwise there is no such simple formula.
fn top_k_constrained(c: &[f64], s: &[f64]) -> Option<f64> {
    if c.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut prev_c = 0.0;
    let mut prev_inc = f64::INFINITY;
    for &ck in c {
        let inc = ck - prev_c;
        if inc < -1e-12 * ck.abs() || inc > prev_inc * (1.0 + 1e-12) + 1e-15 {
            return None;
        }
        prev_inc = inc;
        prev_c = ck;
    }
    let d = s.len();
    let mut acc = 0.0;
    for k in 0..d {
        let next = if k + 1 < d { s[k + 1] } else { 0.0 };
        acc += (s[k] - next) * c[k];
    }
    Some(acc)
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Numeric dual norm by direct search over the sorted non-negative cone.
///
/// A point of the cone is written as `x_i = sum_{j >= i} lambda_j` with
/// `lambda` on the simplex, so `<s, x> = <lambda, T>` where `T` holds the
/// prefix sums of `s`. The ratio `<lambda, T> / N(x)` is quasi-concave in
/// `lambda`, and the search maximizes it with pair moves, random feasible
/// directions and step halving from several starts.
pub(super) fn generic<F>(norm: F, s: &[f64], opts: &GenericDualOptions) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let d = s.len();
    let t = prefix_sums(s);
    if t[d - 1] == 0.0 {
        return Ok(0.0);
    }
    let min_step = (opts.tol * 1e-3).max(1e-12);
    let mut x = vec![0.0; d];
    let mut ratio = |lambda: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in (0..d).rev() {
            acc += lambda[i];
            x[i] = acc;
        }
        let n = norm(&x);
        let num: f64 = lambda.iter().zip(&t).map(|(l, tj)| l * tj).sum();
        if n > 0.0 {
            num / n
        } else {
            0.0
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts = starting_points(s, &t, opts.restarts.max(1), &mut ratio, &mut rng);

    let mut best = 0.0f64;
    let mut converged_any = false;
    let mut dir = vec![0.0; d];
    let mut trial = vec![0.0; d];
    for mut lambda in starts {
        let mut val = ratio(&lambda);
        let mut step: f64 = 0.25;
        let mut converged = false;
        for _ in 0..opts.max_iters {
            let mut improved = false;
            // pair moves: shift mass from j to i
            for j in 0..d {
                for i in 0..d {
                    if i == j || lambda[j] <= 0.0 {
                        continue;
                    }
                    let delta = step.min(lambda[j]);
                    trial.copy_from_slice(&lambda);
                    trial[i] += delta;
                    trial[j] -= delta;
                    let v = ratio(&trial);
                    if v > val {
                        val = v;
                        lambda.copy_from_slice(&trial);
                        improved = true;
                    }
                }
            }
            // random zero-sum directions reach points pair moves cannot
            for _ in 0..2 * d {
                let mut sum = 0.0;
                for v in dir.iter_mut() {
                    *v = rng.random::<f64>() - 0.5;
                    sum += *v;
                }
                let mean = sum / d as f64;
                let mut norm1 = 0.0;
                for v in dir.iter_mut() {
                    *v -= mean;
                    norm1 += v.abs();
                }
                if norm1 == 0.0 {
                    continue;
                }
                // largest feasible multiple, capped by the current step
                let mut h = step / norm1;
                for (l, v) in lambda.iter().zip(&dir) {
                    if *v < 0.0 {
                        h = h.min(l / -v);
                    }
                }
                if h <= 0.0 {
                    continue;
                }
                for ((tr, l), v) in trial.iter_mut().zip(&lambda).zip(&dir) {
                    *tr = (l + h * v).max(0.0);
                }
                let v = ratio(&trial);
                if v > val {
                    val = v;
                    lambda.copy_from_slice(&trial);
                    improved = true;
                }
            }
            if improved {
                step = (step * 2.0).min(1.0);
            } else {
                step *= 0.5;
                if step < min_step {
                    converged = true;
                    break;
                }
            }
        }
        converged_any |= converged;
        best = best.max(val);
    }
    if converged_any {
        Ok(best)
    } else {
        Err(Error::NonConvergence {
            iterations: opts.max_iters,
            best,
        })
    }
}

fn starting_points<R: Rng>(
    s: &[f64],
    t: &[f64],
    count: usize,
    ratio: &mut impl FnMut(&[f64]) -> f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let d = s.len();
    let mut starts = Vec::with_capacity(count);

    // best flat rays
    let mut rays: Vec<(f64, usize)> = (0..d)
        .map(|j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            (ratio(&e), j)
        })
        .collect();
    rays.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, j) in rays.iter().take((count / 4).max(1)) {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        starts.push(e);
    }

    // x = s itself
    if starts.len() < count {
        let mut lambda: Vec<f64> = (0..d)
            .map(|i| s[i] - if i + 1 < d { s[i + 1] } else { 0.0 })
            .collect();
        let total: f64 = lambda.iter().sum();
        if total > 0.0 {
            lambda.iter_mut().for_each(|l| *l /= total);
            starts.push(lambda);
        }
    }

    // uniform weights on T, then random simplex points
    if starts.len() < count {
        let total: f64 = t.iter().map(|v| 1.0 / v.max(f64::MIN_POSITIVE)).sum();
        starts.push(t.iter().map(|v| 1.0 / v.max(f64::MIN_POSITIVE) / total).collect());
    }
    while starts.len() < count {
        let mut lambda: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let total: f64 = lambda.iter().sum();
        lambda.iter_mut().for_each(|l| *l /= total);
        starts.push(lambda);
    }
    starts
}

#[cfg(test)]
mod tests {
    use super::super::{sorted_abs, NormSpec};
    use super::*;

    fn forced(spec: &NormSpec, y: &[f64]) -> f64 {
        spec.generic_dual_sorted(&sorted_abs(y), &GenericDualOptions::default())
            .unwrap()
    }

    #[test]
    fn generic_matches_closed_forms() {
        let ys: [&[f64]; 4] = [
            &[1.0, 1.0, 1.0, 1.0],
            &[3.0, -0.5, 0.2, 0.0],
            &[0.1, 2.0, -2.0, 0.7],
            &[0.0, 0.0, 0.0, 1e-3],
        ];
        let specs = [
            NormSpec::l1(4),
            NormSpec::l2(4),
            NormSpec::lp(4, 3.0).unwrap(),
            NormSpec::linf(4),
            NormSpec::top_k(4, 2).unwrap(),
            NormSpec::k_functional(4, 2.0).unwrap(),
            NormSpec::minimal_sqrt(4),
            NormSpec::maximal(4, vec![1.0, 1.5, 1.8, 2.0]).unwrap(),
            NormSpec::max_of_scaled_top_k(4, vec![1.0, 1.0 / 1.8, 1.0 / 2.4, 1.0 / 2.8]).unwrap(),
        ];
        for spec in &specs {
            for y in ys {
                let exact = spec.closed_form_dual_sorted(&sorted_abs(y)).unwrap();
                let num = forced(spec, y);
                assert!(
                    (num - exact).abs() <= 1e-6 * exact.max(1e-12),
                    "{} {y:?}: {num} vs {exact}",
                    spec.label()
                );
            }
        }
    }

    #[test]
    fn zero_vector_has_zero_dual() {
        let spec = NormSpec::l2(3);
        assert_eq!(forced(&spec, &[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn non_concave_sequence_uses_search() {
        // c = (1, 1, 3) is not concave
        let spec = NormSpec::max_of_scaled_top_k(3, vec![1.0, 1.0, 1.0 / 3.0]).unwrap();
        assert!(!spec.has_closed_form_dual());
        let v = spec.dual(&[1.0, 1.0, 1.0], 1e-6).unwrap();
        // ball: x1 <= 1, x1 + x2 <= 1, x1 + x2 + x3 <= 3 on the sorted cone;
        // sorted feasibility forces x = (1/2, 1/2, 1/2) or (1, 0, 0), best sum 3/2
        assert!((v - 1.5).abs() < 1e-6, "{v}");
    }
}
