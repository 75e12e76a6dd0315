use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::randmap::SymmetricGSpec;

/// A non-decreasing loss `G: R+ -> R+` with `G(0) = 0` and `G(t) -> inf`.
///
/// Convex choices define Orlicz norms; the non-convex ones (step-linear,
/// composite) are still valid inputs for the randomized scaling maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum GFunction {
    /// `t^p`, `p >= 1`.
    Power { p: f64 },
    /// `t` for `t >= threshold`, else `0`.
    StepLinear { threshold: f64 },
    /// `t^2/2` up to `delta`, then `delta (t - delta/2)`.
    Huber { delta: f64 },
    /// Piecewise linear through `points`, starting at `(0, 0)` and
    /// extrapolated with the slope of the last segment.
    Table { points: Vec<[f64; 2]> },
    /// Level-indicator function built from a symmetric norm.
    Composite { spec: SymmetricGSpec },
}

impl GFunction {
    pub fn power(p: f64) -> Result<Self> {
        let g = GFunction::Power { p };
        g.validate()?;
        Ok(g)
    }

    pub fn huber(delta: f64) -> Result<Self> {
        let g = GFunction::Huber { delta };
        g.validate()?;
        Ok(g)
    }

    pub fn step_linear(threshold: f64) -> Result<Self> {
        let g = GFunction::StepLinear { threshold };
        g.validate()?;
        Ok(g)
    }

    pub fn table(points: Vec<[f64; 2]>) -> Result<Self> {
        let g = GFunction::Table { points };
        g.validate()?;
        Ok(g)
    }

    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            GFunction::Power { p } => {
                if *p == 1.0 {
                    t
                } else if *p == 2.0 {
                    t * t
                } else {
                    t.powf(*p)
                }
            }
            GFunction::StepLinear { threshold } => {
                if t >= *threshold {
                    t
                } else {
                    0.0
                }
            }
            GFunction::Huber { delta } => {
                if t <= *delta {
                    0.5 * t * t
                } else {
                    delta * (t - 0.5 * delta)
                }
            }
            GFunction::Table { points } => table_eval(points, t),
            GFunction::Composite { spec } => spec.eval(t),
        }
    }

    /// Structural checks plus a sampled check of monotonicity and growth.
    pub fn validate(&self) -> Result<()> {
        match self {
            GFunction::Power { p } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(invalid(format!("power exponent must be >= 1, got {p}")));
                }
            }
            GFunction::StepLinear { threshold } => {
                if !(threshold.is_finite() && *threshold >= 0.0) {
                    return Err(invalid(format!("step threshold must be >= 0, got {threshold}")));
                }
            }
            GFunction::Huber { delta } => {
                if !(delta.is_finite() && *delta > 0.0) {
                    return Err(invalid(format!("huber delta must be > 0, got {delta}")));
                }
            }
            GFunction::Table { points } => {
                if points.len() < 2 {
                    return Err(invalid("table needs at least two breakpoints"));
                }
                if points[0] != [0.0, 0.0] {
                    return Err(invalid("table must start at (0, 0)"));
                }
                for w in points.windows(2) {
                    if !(w[1][0] > w[0][0] && w[1][1] >= w[0][1]) || !w[1][1].is_finite() {
                        return Err(invalid("table breakpoints must be increasing in t and non-decreasing in G"));
                    }
                }
                let n = points.len();
                if points[n - 1][1] <= points[n - 2][1] {
                    return Err(invalid("last table segment must have positive slope"));
                }
            }
            GFunction::Composite { spec } => spec.validate()?,
        }
        if self.eval(0.0) != 0.0 {
            return Err(invalid("G(0) must be 0"));
        }
        let mut prev = 0.0;
        for i in 0..=400 {
            let t = 10f64.powf(-6.0 + 12.0 * i as f64 / 400.0);
            let v = self.eval(t);
            if !(v >= prev) || !v.is_finite() {
                return Err(invalid(format!("G is not non-decreasing near t = {t}")));
            }
            prev = v;
        }
        if !(self.eval(1e9) > 1e3) {
            return Err(invalid("G does not grow without bound"));
        }
        Ok(())
    }

    /// Generalized inverse `inf { t >= 0 : G(t) >= level }`.
    pub fn inverse_at_least(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        match self {
            GFunction::Power { p } => level.powf(1.0 / p),
            GFunction::StepLinear { threshold } => level.max(*threshold),
            GFunction::Huber { delta } => {
                if level <= 0.5 * delta * delta {
                    (2.0 * level).sqrt()
                } else {
                    level / delta + 0.5 * delta
                }
            }
            GFunction::Table { points } => table_inverse(points, level),
            GFunction::Composite { .. } => self.bisect_inverse(level),
        }
    }

    /// Monotone bisection to absolute tolerance 1e-12.
    pub fn bisect_inverse(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.eval(hi) < level {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) >= level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Whether `G` is convex by construction (so `sum G(|x_i|) <= 1` is a norm ball).
    pub fn is_convex(&self) -> bool {
        match self {
            GFunction::Power { .. } | GFunction::Huber { .. } => true,
            GFunction::StepLinear { threshold } => *threshold == 0.0,
            GFunction::Table { points } => {
                let slopes: Vec<f64> = points
                    .windows(2)
                    .map(|w| (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]))
                    .collect();
                slopes.windows(2).all(|s| s[1] >= s[0])
            }
            GFunction::Composite { .. } => false,
        }
    }
}

fn table_eval(points: &[[f64; 2]], t: f64) -> f64 {
    let n = points.len();
    let idx = points.partition_point(|p| p[0] <= t);
    let (a, b) = if idx >= n {
        (points[n - 2], points[n - 1])
    } else {
        (points[idx - 1], points[idx])
    };
    a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
}

fn table_inverse(points: &[[f64; 2]], level: f64) -> f64 {
    let n = points.len();
    // first breakpoint whose value reaches the level
    let idx = points.partition_point(|p| p[1] < level);
    let (a, b) = if idx >= n {
        (points[n - 2], points[n - 1])
    } else {
        (points[idx - 1], points[idx])
    };
    if b[1] == a[1] {
        return a[0];
    }
    a[0] + (level - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_linear_matches_definition() {
        let g = GFunction::step_linear(0.5).unwrap();
        assert_eq!(g.eval(0.4), 0.0);
        assert_eq!(g.eval(0.5), 0.5);
        assert_eq!(g.eval(3.0), 3.0);
    }

    #[test]
    fn inverses_are_generalized() {
        let gs = [
            GFunction::power(1.0).unwrap(),
            GFunction::power(2.0).unwrap(),
            GFunction::power(3.5).unwrap(),
            GFunction::huber(0.7).unwrap(),
            GFunction::step_linear(0.25).unwrap(),
            GFunction::table(vec![[0.0, 0.0], [1.0, 0.5], [2.0, 3.0]]).unwrap(),
        ];
        for g in &gs {
            for &lv in &[1e-6, 0.01, 0.2, 0.5, 1.0, 2.5, 40.0] {
                let t = g.inverse_at_least(lv);
                let b = g.bisect_inverse(lv);
                assert!(g.eval(t) >= lv * (1.0 - 1e-12), "{g:?} {lv}");
                assert!((t - b).abs() <= 1e-9 * (1.0 + t), "{g:?} {lv}: {t} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_functions() {
        assert!(GFunction::power(0.5).is_err());
        assert!(GFunction::huber(0.0).is_err());
        assert!(GFunction::table(vec![[0.0, 0.0], [1.0, 1.0], [2.0, 1.0]]).is_err());
        assert!(GFunction::table(vec![[0.0, 0.1], [1.0, 1.0]]).is_err());
    }
}
