//! Geometric levels of a vector and the rounding maps built on them.
//!
//! Coordinate `x_i` sits at level `k` when `beta^{-k-1} < |x_i| <= beta^{-k}`.
//! The maps here are `C` (cut small entries), `V` (round each entry up to its
//! level top), `W` (round per-level counts to `floor(beta^j)`), their
//! composite `R = W V C`, and the simplification `S` that drops a level when
//! some much larger level is at least as populated.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::randmap::{level_bound, level_count};

/// Level parameters: `beta` in `(1, 2)`, cutoff `tau > 0`, dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelParams {
    pub beta: f64,
    pub tau: f64,
    pub d: usize,
}

impl LevelParams {
    pub fn new(beta: f64, tau: f64, d: usize) -> Result<Self> {
        let p = LevelParams { beta, tau, d };
        p.validate()?;
        Ok(p)
    }

    /// `tau = beta / d^2`.
    pub fn with_default_tau(beta: f64, d: usize) -> Result<Self> {
        Self::new(beta, beta / (d as f64 * d as f64), d)
    }

    /// `tau = beta / d`, the looser cutoff.
    pub fn with_linear_tau(beta: f64, d: usize) -> Result<Self> {
        Self::new(beta, beta / d as f64, d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 1.0 && self.beta < 2.0) {
            return Err(Error::OutOfRange {
                what: "beta",
                value: self.beta,
                min: 1.0,
                max: 2.0,
            });
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if self.d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(())
    }

    /// `2 log_beta d`, the real-valued level bound.
    pub fn level_bound(&self) -> f64 {
        level_bound(self.beta, self.d)
    }

    /// Number of kept levels: integers `k >= 0` with `k < 2 log_beta d`.
    pub fn num_levels(&self) -> usize {
        level_count(self.beta, self.d)
    }

    /// `3 log_beta (1 / (beta - 1))`: a level is compared against levels
    /// strictly more than this far above it.
    pub fn window(&self) -> f64 {
        3.0 * (1.0 / (self.beta - 1.0)).ln() / self.beta.ln()
    }

    /// `beta^{-k}`.
    pub fn level_value(&self, k: i64) -> f64 {
        level_value(self.beta, k)
    }

    /// Distinct counts `floor(beta^j) <= d`, ascending.
    pub fn allowed_counts(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        let mut j = 0;
        loop {
            let c = floor_pow(self.beta, j);
            if c > self.d as u64 {
                break;
            }
            if out.last() != Some(&(c as u32)) {
                out.push(c as u32);
            }
            j += 1;
        }
        out
    }

    /// `floor(beta^j)` for the least `j >= 0` with `beta^j >= b`.
    pub fn round_count(&self, b: u64) -> u64 {
        let mut j = 0;
        while self.beta.powi(j) < b as f64 * (1.0 - 1e-12) {
            j += 1;
        }
        floor_pow(self.beta, j)
    }
}

fn floor_pow(beta: f64, j: i32) -> u64 {
    (beta.powi(j) + 1e-9).floor() as u64
}

fn level_value(beta: f64, k: i64) -> f64 {
    beta.powi(-(k as i32))
}

/// Level of a positive magnitude: the integer `k` with `beta^{-k-1} < v <= beta^{-k}`.
///
/// Magnitudes within a relative 1e-9 of a level top are assigned to that level.
pub fn level_index(v: f64, beta: f64) -> i64 {
    debug_assert!(v > 0.0);
    let r = -v.ln() / beta.ln();
    let nearest = r.round();
    if (r - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest as i64
    } else {
        r.floor() as i64
    }
}

fn checked_level(v: f64, beta: f64) -> Result<i64> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::LevelOverflow(v));
    }
    let k = level_index(v, beta);
    if k.abs() > i32::MAX as i64 / 2 {
        return Err(Error::LevelOverflow(v));
    }
    Ok(k)
}

/// Per-level counts `b_k` of a vector; only non-zero counts are stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LevelProfile {
    counts: BTreeMap<i64, usize>,
}

impl LevelProfile {
    pub fn get(&self, k: i64) -> usize {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    /// `(level, count)` pairs in increasing level order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, usize)> + '_ {
        self.counts.iter().map(|(k, b)| (*k, *b))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Counts on levels `0..len` as a dense array; other levels are dropped.
    pub fn dense(&self, len: usize) -> Vec<u32> {
        let mut out = vec![0u32; len];
        for (k, b) in self.iter() {
            if k >= 0 && (k as usize) < len {
                out[k as usize] = b as u32;
            }
        }
        out
    }
}

impl fmt::Display for LevelProfile {
    /// One `level:count` pair per entry, space separated, e.g. `0:2 1:1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, b) in self.iter() {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{k}:{b}")?;
            first = false;
        }
        Ok(())
    }
}

/// Level sizes of `x`; zero entries are not counted.
pub fn levels(x: &[f64], p: &LevelParams) -> Result<LevelProfile> {
    let mut counts = BTreeMap::new();
    for &v in x {
        if v != 0.0 {
            *counts.entry(checked_level(v.abs(), p.beta)?).or_insert(0) += 1;
        }
    }
    Ok(LevelProfile { counts })
}

/// `C(x)`: zero every entry with `|x_i| < tau`.
pub fn cut_small(x: &[f64], p: &LevelParams) -> Vec<f64> {
    x.iter()
        .map(|&v| if v.abs() >= p.tau { v } else { 0.0 })
        .collect()
}

/// `V(x)`: each entry rounded up to the top of its level, sorted non-increasing.
pub fn level_vector(x: &[f64], p: &LevelParams) -> Result<Vec<f64>> {
    let profile = levels(x, p)?;
    let mut out = Vec::with_capacity(x.len());
    for (k, b) in profile.iter() {
        let v = p.level_value(k);
        out.extend(std::iter::repeat_n(v, b));
    }
    out.resize(x.len(), 0.0);
    Ok(out)
}

/// `W` on level counts: keep levels `0 <= k < 2 log_beta d` in order, rounding
/// each count up to `floor(beta^j)`; a level whose rounded count no longer fits
/// in the remaining capacity `d - (entries so far)` is dropped.
pub fn rounded_counts_of(profile: &LevelProfile, p: &LevelParams) -> Vec<u32> {
    let mut dense = profile.dense(p.num_levels());
    let mut capacity = p.d as u64;
    for b in dense.iter_mut() {
        if *b == 0 {
            continue;
        }
        let c = p.round_count(*b as u64);
        if c <= capacity {
            *b = c as u32;
            capacity -= c;
        } else {
            *b = 0;
        }
    }
    dense
}

/// `W(v)` for a level vector `v`.
pub fn rounded_counts(v: &[f64], p: &LevelParams) -> Result<Vec<f64>> {
    check_dim(v, p)?;
    let counts = rounded_counts_of(&levels(v, p)?, p);
    Ok(materialize(&counts, p))
}

/// `R(x) = W(V(C(x)))`.
pub fn rounded(x: &[f64], p: &LevelParams) -> Result<Vec<f64>> {
    Ok(materialize(&rounded_level_counts(x, p)?, p))
}

/// Level counts of `R(x)` on levels `0..num_levels`.
pub fn rounded_level_counts(x: &[f64], p: &LevelParams) -> Result<Vec<u32>> {
    check_dim(x, p)?;
    // V does not change level counts, so W can read them straight from C(x)
    Ok(rounded_counts_of(&levels(&cut_small(x, p), p)?, p))
}

/// `S` on dense level counts: sweeping `k` upwards, zero level `k` when its
/// count is at most the largest current count among levels `j < k - window`.
pub fn simplify_counts(counts: &[u32], p: &LevelParams) -> Vec<u32> {
    let w = p.window();
    let mut out = counts.to_vec();
    let mut prefix_max = Vec::with_capacity(out.len());
    let mut running = 0u32;
    for k in 0..out.len() {
        // levels j < k - w, i.e. j <= ceil(k - w) - 1
        let limit = k as f64 - w;
        let reach = limit.ceil() as i64 - 1;
        let window_max = if reach >= 0 {
            prefix_max[(reach as usize).min(k - 1)]
        } else {
            0
        };
        if out[k] > 0 && out[k] <= window_max {
            out[k] = 0;
        }
        running = running.max(out[k]);
        prefix_max.push(running);
    }
    out
}

/// `S(z)` for a rounded vector `z`.
pub fn simplify(z: &[f64], p: &LevelParams) -> Result<Vec<f64>> {
    check_dim(z, p)?;
    let profile = levels(z, p)?;
    if let Some((k, _)) = profile
        .iter()
        .find(|(k, _)| *k < 0 || *k as usize >= p.num_levels())
    {
        return Err(invalid(format!("level {k} is outside the rounded range")));
    }
    let counts = profile.dense(p.num_levels());
    Ok(materialize(&simplify_counts(&counts, p), p))
}

/// Non-increasing vector of length `d` with `counts[k]` entries equal to `beta^{-k}`.
pub fn materialize(counts: &[u32], p: &LevelParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.d);
    for (k, &b) in counts.iter().enumerate() {
        out.extend(std::iter::repeat_n(p.level_value(k as i64), b as usize));
    }
    debug_assert!(out.len() <= p.d);
    out.resize(p.d, 0.0);
    out
}

fn check_dim(x: &[f64], p: &LevelParams) -> Result<()> {
    if x.len() == p.d {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: p.d,
            found: x.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize) -> LevelParams {
        LevelParams::with_default_tau(1.5, d).unwrap()
    }

    #[test]
    fn level_examples() {
        let p = params(3);
        let prof = levels(&[1.0, 0.8, 0.5], &p).unwrap();
        assert_eq!(prof.to_string(), "0:2 1:1");
        assert!(levels(&[0.0; 3], &p).unwrap().is_empty());
        let p1 = LevelParams::new(1.5, 0.1, 1).unwrap();
        assert_eq!(levels(&[1.5], &p1).unwrap().get(-1), 1);
        // exact level tops belong to their own level
        for k in -3..12 {
            assert_eq!(level_index(1.5f64.powi(-k), 1.5), k as i64);
        }
    }

    #[test]
    fn cut_and_level_vector_examples() {
        let p = LevelParams::new(1.5, 0.1, 2).unwrap();
        assert_eq!(cut_small(&[1.0, 0.05], &p), vec![1.0, 0.0]);
        let p = params(3);
        let v = level_vector(&[1.0, 0.8, 0.5], &p).unwrap();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 1.0);
        assert!((v[2] - 2.0 / 3.0).abs() < 1e-15);
        let tops = [1.0, 1.5f64.powi(-2), 1.5f64.powi(-2)];
        assert_eq!(level_vector(&tops, &p).unwrap(), tops.to_vec());
        assert!(matches!(
            level_vector(&[f64::MIN_POSITIVE / 1e10, 0.0, 0.0], &p),
            Ok(_) | Err(Error::LevelOverflow(_))
        ));
    }

    #[test]
    fn rounded_counts_examples() {
        let p = params(8);
        let w = rounded_counts(&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &p).unwrap();
        assert_eq!(&w[..4], &[1.0, 1.0, 1.0, 0.0]);
        assert_eq!(p.round_count(1), 1);
        assert_eq!(p.round_count(4), 5);
        assert_eq!(p.allowed_counts(), vec![1, 2, 3, 5, 7]);
    }

    #[test]
    fn rounded_examples() {
        let p = params(5);
        let e1 = [1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(rounded(&e1, &p).unwrap(), e1.to_vec());
        assert_eq!(rounded(&[0.0; 5], &p).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn capacity_drops_levels_that_do_not_fit() {
        // d = 4: level 0 has 3 entries, level 1 one entry rounded to 1 -> fits;
        // with 4 entries at level 0 the count rounds to 5 > 4 and is dropped
        let p = params(4);
        let mut prof = LevelProfile::default();
        prof.counts.insert(0, 3);
        prof.counts.insert(1, 1);
        assert_eq!(&rounded_counts_of(&prof, &p)[..2], &[3, 1]);
        prof.counts.insert(0, 4);
        assert_eq!(&rounded_counts_of(&prof, &p)[..2], &[0, 1]);
    }

    #[test]
    fn simplify_examples() {
        let p = params(16);
        assert!((p.window() - 5.128_5).abs() < 1e-3);
        let mut counts = vec![0u32; p.num_levels()];
        counts[0] = 4;
        counts[6] = 3;
        let s = simplify_counts(&counts, &p);
        assert_eq!(s[0], 4);
        assert_eq!(s[6], 0);
        let mut single = vec![0u32; p.num_levels()];
        single[4] = 2;
        assert_eq!(simplify_counts(&single, &p), single);
        // level 5 is inside the window of level 0, so it survives
        let mut near = vec![0u32; p.num_levels()];
        near[0] = 4;
        near[5] = 3;
        assert_eq!(simplify_counts(&near, &p), near);
    }

    #[test]
    fn simplify_vector_rejects_out_of_range_levels() {
        let p = params(4);
        assert!(simplify(&[1.5, 0.0, 0.0, 0.0], &p).is_err());
        assert!(simplify(&[1.0, 0.0, 0.0], &p).is_err());
    }
}
