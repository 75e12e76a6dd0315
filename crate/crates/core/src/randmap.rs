//! Random coordinate scalings that embed Orlicz-type norms into `l_inf`.
//!
//! A scaling vector `u` is drawn with `Pr[u_i <= t] = 1 - mu^{G(t)}`; the map
//! `x -> (x_i / u_i)` then keeps short vectors short with probability at
//! least `mu` and makes long vectors long with high probability.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::Substreams;
use crate::vecnorm::{GFunction, NormSpec};

/// Parameters of a randomized scaling map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandMapParams {
    /// Success probability on the near side, in `(0, 1/2)`.
    pub mu: f64,
    /// Stretch `D > 1` used for the far-side threshold.
    pub d_factor: f64,
    /// Gap `alpha > 1` between near and far radii.
    pub alpha: f64,
    pub seed: u64,
}

impl RandMapParams {
    pub fn new(mu: f64, d_factor: f64, alpha: f64, seed: u64) -> Result<Self> {
        let p = RandMapParams {
            mu,
            d_factor,
            alpha,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return Err(Error::OutOfRange {
                what: "mu",
                value: self.mu,
                min: 0.0,
                max: 0.5,
            });
        }
        if !(self.d_factor > 1.0 && self.d_factor.is_finite()) {
            return Err(invalid(format!("D must exceed 1, got {}", self.d_factor)));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(invalid(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        Ok(())
    }

    /// `alpha * D`, the far-side multiple of the query radius.
    pub fn far_factor(&self) -> f64 {
        self.alpha * self.d_factor
    }
}

/// Per-coordinate divisors of a scaling map.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingVector {
    u: Vec<f64>,
}

impl ScalingVector {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.is_empty() {
            return Err(invalid("scaling vector must be non-empty"));
        }
        if let Some(i) = u.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid(format!("divisor {i} is not positive and finite")));
        }
        Ok(Self { u })
    }

    pub fn divisors(&self) -> &[f64] {
        &self.u
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `(x_i / u_i)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        apply_map(x, self)
    }
}

/// `(x_i / u_i)`.
pub fn apply_map(x: &[f64], u: &ScalingVector) -> Result<Vec<f64>> {
    if x.len() != u.u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.u.len(),
            found: x.len(),
        });
    }
    Ok(x.iter().zip(&u.u).map(|(a, b)| a / b).collect())
}

/// Divisor for the uniform draw `p`: `inf { t : G(t) / mass >= ln(1-p)/ln(mu) }`.
pub fn scaling_from_uniform(g: &GFunction, mu: f64, mass: f64, p: f64) -> f64 {
    let level = (-p).ln_1p() / mu.ln();
    g.inverse_at_least(level * mass)
}

/// Draws `d` divisors with `Pr[u <= t] = 1 - mu^{G(t)}` from substream `rep`.
pub fn sample_scalings(
    g: &GFunction,
    params: &RandMapParams,
    d: usize,
    rep: u64,
) -> Result<ScalingVector> {
    sample_scalings_with_mass(g, params, d, rep, 1.0)
}

/// As [`sample_scalings`] but for `G / mass`, i.e. `Pr[u <= t] = 1 - mu^{G(t)/mass}`.
pub fn sample_scalings_with_mass(
    g: &GFunction,
    params: &RandMapParams,
    d: usize,
    rep: u64,
    mass: f64,
) -> Result<ScalingVector> {
    params.validate()?;
    g.validate()?;
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(invalid("mass bound must be positive"));
    }
    let streams = Substreams::new(params.seed);
    let u = (0..d as u64)
        .map(|i| scaling_from_uniform(g, params.mu, mass, streams.uniform(rep, i)))
        .collect();
    ScalingVector::new(u)
}

/// The loss for top-k norms: `t` when `t >= 1/k`, else `0`.
pub fn topk_g(k: usize, d: usize) -> Result<GFunction> {
    if k == 0 || k > d {
        return Err(Error::OutOfRange {
            what: "k",
            value: k as f64,
            min: 1.0,
            max: d as f64,
        });
    }
    GFunction::step_linear(1.0 / k as f64)
}

/// Divisors for `m` product factors with `Pr[u <= t] = 1 - mu^t`.
pub fn product_l1_scalings(mu: f64, m: usize, seed: u64, rep: u64) -> Result<ScalingVector> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::OutOfRange {
            what: "mu",
            value: mu,
            min: 0.0,
            max: 1.0,
        });
    }
    if m == 0 {
        return Err(invalid("need at least one factor"));
    }
    let streams = Substreams::new(seed);
    let u = (0..m as u64)
        .map(|i| (-streams.uniform(rep, i)).ln_1p() / mu.ln())
        .collect();
    ScalingVector::new(u)
}

/// Level table and loss built from an arbitrary symmetric norm.
///
/// `levels[k]` is the least number of coordinates of value `beta^-k` whose
/// norm exceeds 1, or `None` when even `d` such coordinates stay in the unit
/// ball. The loss is a step function on `(0, 1]` plus a steep linear part
/// above 1:
/// `G(t) = 1/L_k` for `t` in `(beta^{-k-1}, beta^{-k}]`, and
/// `G(t) = alpha * bound * t` for `t > 1`, where `bound = 2 log_beta d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetricGSpec {
    pub dim: usize,
    pub beta: f64,
    pub alpha: f64,
    /// Factor applied to the source norm so that a basis vector has norm 1.
    pub normalization: f64,
    pub levels: Vec<Option<u64>>,
}

impl SymmetricGSpec {
    /// `2 log_beta d`, the mass bound on the unit ball.
    pub fn bound(&self) -> f64 {
        level_bound(self.beta, self.dim)
    }

    /// True when no level is ever reached, so the loss has no step part.
    pub fn is_degenerate(&self) -> bool {
        self.levels.iter().all(Option::is_none)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(self.beta > 1.0 && self.beta < 2.0) {
            return Err(Error::OutOfRange {
                what: "beta",
                value: self.beta,
                min: 1.0,
                max: 2.0,
            });
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha must exceed 1"));
        }
        if !(self.normalization > 0.0 && self.normalization.is_finite()) {
            return Err(invalid("normalization must be positive"));
        }
        let expected = level_count(self.beta, self.dim);
        if self.levels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.levels.len(),
            });
        }
        let mut prev = 1u64;
        let mut seen_none = false;
        for l in &self.levels {
            match l {
                Some(v) => {
                    if seen_none || *v < prev {
                        return Err(invalid("level table must be non-decreasing"));
                    }
                    prev = *v;
                }
                None => seen_none = true,
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t > 1.0 {
            return self.alpha * self.bound() * t;
        }
        if t <= 0.0 {
            return 0.0;
        }
        let k = crate::leveling::level_index(t, self.beta);
        if k < 0 {
            return 0.0;
        }
        match self.levels.get(k as usize) {
            Some(Some(l)) => 1.0 / *l as f64,
            _ => 0.0,
        }
    }

    /// The loss as a [`GFunction`].
    pub fn to_gfunction(&self) -> GFunction {
        GFunction::Composite { spec: self.clone() }
    }

    /// `sum_i G(|x_i|)`, with `x` measured in the normalized norm.
    pub fn mass(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| self.eval(v.abs())).sum()
    }
}

/// `2 log_beta d`.
pub fn level_bound(beta: f64, d: usize) -> f64 {
    2.0 * (d as f64).ln() / beta.ln()
}

/// Number of integer levels `k >= 0` with `k < 2 log_beta d`.
pub fn level_count(beta: f64, d: usize) -> usize {
    let bound = level_bound(beta, d);
    if bound <= 0.0 {
        0
    } else {
        bound.ceil() as usize
    }
}

/// Builds the level table of `norm`, rescaling it so a basis vector has norm 1.
pub fn symmetric_g(norm: &NormSpec, beta: f64, alpha: f64) -> Result<SymmetricGSpec> {
    let d = norm.dim();
    let (normed, factor) = norm.normalized()?;
    let mut levels = Vec::with_capacity(level_count(beta, d));
    let mut buf = vec![0.0; d];
    for k in 0..level_count(beta, d) {
        let v = beta.powi(-(k as i32));
        let mut value_at = |j: usize| -> f64 {
            buf.fill(0.0);
            buf[..j].fill(v);
            normed.eval_sorted(&buf)
        };
        if value_at(d) <= 1.0 {
            levels.push(None);
            continue;
        }
        // least j in [1, d] with norm > 1
        let (mut lo, mut hi) = (0usize, d);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if value_at(mid) > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        levels.push(Some(hi as u64));
    }
    let spec = SymmetricGSpec {
        dim: d,
        beta,
        alpha,
        normalization: factor,
        levels,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_scalings() {
        let lin = GFunction::power(1.0).unwrap();
        assert!((scaling_from_uniform(&lin, 0.5, 1.0, 0.5) - 1.0).abs() < 1e-15);
        assert!((scaling_from_uniform(&lin, 0.5, 1.0, 0.75) - 2.0).abs() < 1e-15);
        // the atom of the step loss sits at its threshold
        let step = topk_g(2, 4).unwrap();
        let p_atom = 1.0 - 0.3f64.powf(0.5);
        assert_eq!(scaling_from_uniform(&step, 0.3, 1.0, 0.5 * p_atom), 0.5);
        assert!(scaling_from_uniform(&step, 0.3, 1.0, 0.5 + 0.5 * p_atom) > 0.5);
    }

    #[test]
    fn same_seed_same_scalings() {
        let g = GFunction::huber(1.0).unwrap();
        let p = RandMapParams::new(0.3, 4.0, 3.0, 9).unwrap();
        let a = sample_scalings(&g, &p, 64, 2).unwrap();
        let b = sample_scalings(&g, &p, 64, 2).unwrap();
        let c = sample_scalings(&g, &p, 64, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn apply_map_examples() {
        let u = ScalingVector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(apply_map(&[2.0, 4.0], &u).unwrap(), vec![2.0, 2.0]);
        assert_eq!(apply_map(&[0.0, 0.0], &u).unwrap(), vec![0.0, 0.0]);
        assert!(apply_map(&[1.0], &u).is_err());
    }

    #[test]
    fn params_are_checked() {
        assert!(RandMapParams::new(0.5, 2.0, 2.0, 0).is_err());
        assert!(RandMapParams::new(0.3, 1.0, 2.0, 0).is_err());
        assert!(RandMapParams::new(0.3, 2.0, 1.0, 0).is_err());
        assert!(topk_g(0, 3).is_err());
        assert!(topk_g(4, 3).is_err());
    }

    #[test]
    fn level_tables() {
        let l1 = symmetric_g(&NormSpec::l1(16), 1.5, 2.0).unwrap();
        assert_eq!(l1.levels[0], Some(2));
        for k in 0..l1.levels.len() {
            // linear scan oracle
            let v = 1.5f64.powi(-(k as i32));
            let want = (1..=16).find(|&j| j as f64 * v > 1.0).map(|j| j as u64);
            assert_eq!(l1.levels[k], want, "level {k}");
        }
        let linf = symmetric_g(&NormSpec::linf(16), 1.5, 2.0).unwrap();
        assert!(linf.is_degenerate());
        let g = l1.to_gfunction();
        g.validate().unwrap();
        assert_eq!(g.eval(1.0), 0.5);
    }
}
