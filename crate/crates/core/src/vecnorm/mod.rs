//! Dense vectors and a catalog of symmetric norms.
//!
//! Every norm here is evaluated on the sorted absolute values of its input,
//! which makes evaluation exactly invariant under permutations and sign flips.

mod dual;
mod gfunction;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use dual::GenericDualOptions;
pub use gfunction::GFunction;

/// Rejects empty vectors and non-finite entries.
pub fn check_vector(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(invalid("vector must have at least one entry"));
    }
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `|x|` sorted non-increasing; ties keep their original order.
pub fn sorted_abs(x: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    // stable sort, so equal magnitudes stay in index order
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Prefix sums of a sorted vector: entry `k - 1` is the top-k norm.
pub fn prefix_sums(sorted: &[f64]) -> Vec<f64> {
    sorted
        .iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Sum of the `k` largest absolute entries.
pub fn top_k_norm(x: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > x.len() {
        return Err(Error::OutOfRange {
            what: "k",
            value: k as f64,
            min: 1.0,
            max: x.len() as f64,
        });
    }
    Ok(sorted_abs(x)[..k].iter().sum())
}

/// `x` weakly majorizes `y`: every prefix sum of `x*` dominates that of `y*`.
///
/// Prefix sums are compared with a relative slack of 1e-12 so that vectors
/// equal up to summation order compare as majorizing each other.
pub fn weakly_majorizes(x: &[f64], y: &[f64]) -> Result<bool> {
    check_dims(x.len(), y.len())?;
    let px = prefix_sums(&sorted_abs(x));
    let py = prefix_sums(&sorted_abs(y));
    Ok(px
        .iter()
        .zip(&py)
        .all(|(a, b)| *a >= *b - 1e-12 * a.abs().max(b.abs())))
}

/// The vector with `i` leading ones followed by `d - i` zeros.
pub fn flat_vector(i: usize, d: usize) -> Result<Vec<f64>> {
    if i == 0 || i > d {
        return Err(Error::OutOfRange {
            what: "i",
            value: i as f64,
            min: 1.0,
            max: d as f64,
        });
    }
    let mut v = vec![0.0; d];
    v[..i].fill(1.0);
    Ok(v)
}

/// The shape of a symmetric norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormKind {
    /// `l_p`, `p` in `[1, inf]`.
    Lp { p: f64 },
    /// Sum of the `k` largest magnitudes.
    TopK { k: usize },
    /// Luxemburg gauge of `{ x : sum G(|x_i|) <= 1 }`.
    Orlicz { g: GFunction },
    /// `max_k a_k * (average of the top k)`, with `a` listing `a_1..a_d`.
    Minimal { a: Vec<f64> },
    /// `sum_k (a_k - a_{k-1}) x*_k`.
    Maximal { a: Vec<f64> },
    /// `min { |x1|_1 + t |x2|_2 : x1 + x2 = x }`.
    KFunctional { t: f64 },
    /// `max_k w_k * top_k(x)`.
    MaxOfScaledTopK { weights: Vec<f64> },
}

/// A symmetric norm on `R^dim`, optionally multiplied by a positive scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormSpecFile", into = "NormSpecFile")]
pub struct NormSpec {
    dim: usize,
    scale: f64,
    kind: NormKind,
}

impl NormSpec {
    pub fn new(dim: usize, kind: NormKind) -> Result<Self> {
        let spec = NormSpec {
            dim,
            scale: 1.0,
            kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn l1(dim: usize) -> Self {
        Self::new(dim, NormKind::Lp { p: 1.0 }).expect("valid l1")
    }

    pub fn l2(dim: usize) -> Self {
        Self::new(dim, NormKind::Lp { p: 2.0 }).expect("valid l2")
    }

    pub fn linf(dim: usize) -> Self {
        Self::new(dim, NormKind::Lp { p: f64::INFINITY }).expect("valid linf")
    }

    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        Self::new(dim, NormKind::Lp { p })
    }

    pub fn top_k(dim: usize, k: usize) -> Result<Self> {
        Self::new(dim, NormKind::TopK { k })
    }

    pub fn orlicz(dim: usize, g: GFunction) -> Result<Self> {
        Self::new(dim, NormKind::Orlicz { g })
    }

    pub fn minimal(dim: usize, a: Vec<f64>) -> Result<Self> {
        Self::new(dim, NormKind::Minimal { a })
    }

    pub fn maximal(dim: usize, a: Vec<f64>) -> Result<Self> {
        Self::new(dim, NormKind::Maximal { a })
    }

    /// Minimal norm of the sequence `a_k = sqrt(k)`.
    pub fn minimal_sqrt(dim: usize) -> Self {
        Self::minimal(dim, sqrt_sequence(dim)).expect("sqrt sequence is valid")
    }

    pub fn k_functional(dim: usize, t: f64) -> Result<Self> {
        Self::new(dim, NormKind::KFunctional { t })
    }

    pub fn max_of_scaled_top_k(dim: usize, weights: Vec<f64>) -> Result<Self> {
        Self::new(dim, NormKind::MaxOfScaledTopK { weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    /// The same norm multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(invalid(format!("scale factor must be positive, got {factor}")));
        }
        Ok(NormSpec {
            dim: self.dim,
            scale: self.scale * factor,
            kind: self.kind.clone(),
        })
    }

    /// Short human-readable label, e.g. `top_k(3)`.
    pub fn label(&self) -> String {
        let base = match &self.kind {
            NormKind::Lp { p } if p.is_infinite() => "linf".to_string(),
            NormKind::Lp { p } => format!("l{p}"),
            NormKind::TopK { k } => format!("top_k({k})"),
            NormKind::Orlicz { g } => match g {
                GFunction::Power { p } => format!("orlicz_power({p})"),
                GFunction::StepLinear { threshold } => format!("orlicz_step({threshold})"),
                GFunction::Huber { delta } => format!("orlicz_huber({delta})"),
                GFunction::Table { .. } => "orlicz_table".to_string(),
                GFunction::Composite { .. } => "orlicz_composite".to_string(),
            },
            NormKind::Minimal { .. } => "minimal".to_string(),
            NormKind::Maximal { .. } => "maximal".to_string(),
            NormKind::KFunctional { t } => format!("k_functional({t})"),
            NormKind::MaxOfScaledTopK { .. } => "max_scaled_top_k".to_string(),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{}*{base}", self.scale)
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(invalid("scale must be positive and finite"));
        }
        match &self.kind {
            NormKind::Lp { p } => {
                if !(*p >= 1.0) {
                    return Err(Error::OutOfRange {
                        what: "p",
                        value: *p,
                        min: 1.0,
                        max: f64::INFINITY,
                    });
                }
            }
            NormKind::TopK { k } => {
                if *k == 0 || *k > d {
                    return Err(Error::OutOfRange {
                        what: "k",
                        value: *k as f64,
                        min: 1.0,
                        max: d as f64,
                    });
                }
            }
            NormKind::Orlicz { g } => g.validate()?,
            NormKind::Minimal { a } | NormKind::Maximal { a } => validate_sequence(a, d)?,
            NormKind::KFunctional { t } => {
                if !(t.is_finite() && *t > 0.0) {
                    return Err(invalid(format!("K-functional parameter must be positive, got {t}")));
                }
            }
            NormKind::MaxOfScaledTopK { weights } => {
                check_dims(d, weights.len())?;
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(invalid("weights must be finite and non-negative"));
                }
                if weights.iter().all(|w| *w == 0.0) {
                    return Err(invalid("at least one weight must be positive"));
                }
            }
        }
        Ok(())
    }

    /// `||x||`, checking dimension and finiteness.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dims(self.dim, x.len())?;
        check_vector(x)?;
        Ok(self.eval_sorted(&sorted_abs(x)))
    }

    /// Norm of a vector already sorted non-increasing and non-negative.
    pub fn eval_sorted(&self, s: &[f64]) -> f64 {
        debug_assert_eq!(s.len(), self.dim);
        self.scale * self.base_sorted(s)
    }

    fn base_sorted(&self, s: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Lp { p } => lp_sorted(s, *p),
            NormKind::TopK { k } => s[..*k].iter().sum(),
            NormKind::Orlicz { g } => orlicz_sorted(g, s),
            NormKind::Minimal { a } => {
                let mut acc = 0.0;
                let mut best: f64 = 0.0;
                for (k, (&v, &ak)) in s.iter().zip(a).enumerate() {
                    acc += v;
                    best = best.max(ak * acc / (k + 1) as f64);
                }
                best
            }
            NormKind::Maximal { a } => {
                let mut prev = 0.0;
                let mut acc = 0.0;
                for (&v, &ak) in s.iter().zip(a) {
                    acc += (ak - prev) * v;
                    prev = ak;
                }
                acc
            }
            NormKind::KFunctional { t } => k_functional_sorted(s, *t),
            NormKind::MaxOfScaledTopK { weights } => {
                let mut acc = 0.0;
                let mut best: f64 = 0.0;
                for (&v, &w) in s.iter().zip(weights) {
                    acc += v;
                    best = best.max(w * acc);
                }
                best
            }
        }
    }

    /// `||xi^(1)||`, the norm of a standard basis vector.
    pub fn unit_vector_norm(&self) -> f64 {
        let mut e = vec![0.0; self.dim];
        e[0] = 1.0;
        self.eval_sorted(&e)
    }

    /// Rescales so that `||xi^(1)|| = 1`, returning the new spec and the factor applied.
    pub fn normalized(&self) -> Result<(Self, f64)> {
        let n1 = self.unit_vector_norm();
        if !(n1.is_finite() && n1 > 0.0) {
            return Err(invalid("norm of a basis vector is not positive"));
        }
        let factor = 1.0 / n1;
        if (factor - 1.0).abs() <= 1e-15 {
            Ok((self.clone(), 1.0))
        } else {
            Ok((self.scaled(factor)?, factor))
        }
    }

    /// Dual norm `sup { <x, y> : ||x|| <= 1 }` to relative accuracy `tol`.
    pub fn dual(&self, y: &[f64], tol: f64) -> Result<f64> {
        check_dims(self.dim, y.len())?;
        check_vector(y)?;
        self.dual_sorted(&sorted_abs(y), tol)
    }

    /// Dual norm of a sorted non-negative vector.
    pub fn dual_sorted(&self, s: &[f64], tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(invalid("dual tolerance must be positive"));
        }
        match self.closed_form_dual_sorted(s) {
            Some(v) => Ok(v),
            None => self.generic_dual_sorted(
                s,
                &GenericDualOptions {
                    tol,
                    ..GenericDualOptions::default()
                },
            ),
        }
    }

    /// Whether `dual` uses an exact formula rather than numeric ascent.
    pub fn has_closed_form_dual(&self) -> bool {
        let probe = vec![1.0; self.dim];
        self.closed_form_dual_sorted(&probe).is_some()
    }

    /// Exact dual where a formula is known, `None` otherwise.
    pub fn closed_form_dual_sorted(&self, s: &[f64]) -> Option<f64> {
        dual::closed_form(&self.kind, s).map(|v| v / self.scale)
    }

    /// Dual by projected ascent over the sorted cone, ignoring closed forms.
    pub fn generic_dual_sorted(&self, s: &[f64], opts: &GenericDualOptions) -> Result<f64> {
        dual::generic(|x| self.eval_sorted(x), s, opts)
    }

    /// Serializes to the versioned key-value text format.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file_form()).expect("norm spec serializes")
    }

    /// Parses and validates the versioned key-value text format.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: NormSpecFile =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_file_form(file)
    }

    pub(crate) fn file_form(&self) -> NormSpecFile {
        NormSpecFile {
            version: NORM_SPEC_VERSION,
            dim: self.dim,
            scale: (self.scale != 1.0).then_some(self.scale),
            norm: self.kind.clone(),
        }
    }

    pub(crate) fn from_file_form(file: NormSpecFile) -> Result<Self> {
        if file.version != NORM_SPEC_VERSION {
            return Err(Error::Config(format!(
                "unsupported norm spec version {}",
                file.version
            )));
        }
        let spec = NormSpec {
            dim: file.dim,
            scale: file.scale.unwrap_or(1.0),
            kind: file.norm,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<NormSpecFile> for NormSpec {
    type Error = Error;

    fn try_from(file: NormSpecFile) -> Result<Self> {
        Self::from_file_form(file)
    }
}

impl From<NormSpec> for NormSpecFile {
    fn from(spec: NormSpec) -> Self {
        spec.file_form()
    }
}

pub(crate) const NORM_SPEC_VERSION: u32 = 1;

/// On-disk form of a [`NormSpec`].
///
/// ```toml
/// version = 1
/// dim = 12
/// [norm]
/// kind = "top_k"
/// k = 3
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct NormSpecFile {
    pub version: u32,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    pub norm: NormKind,
}

/// `a_k = sqrt(k)` for `k = 1..=d`.
pub fn sqrt_sequence(d: usize) -> Vec<f64> {
    (1..=d).map(|k| (k as f64).sqrt()).collect()
}

fn validate_sequence(a: &[f64], d: usize) -> Result<()> {
    check_dims(d, a.len())?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid("sequence entries must be finite"));
    }
    if !(a[0] > 0.0) {
        return Err(invalid("sequence must have a_1 > 0"));
    }
    if a.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("sequence must be non-decreasing"));
    }
    // a_{n+m} <= a_n + a_m, indices 1-based
    for n in 1..=d {
        for m in n..=d - n {
            let lhs = a[n + m - 1];
            let rhs = a[n - 1] + a[m - 1];
            if lhs > rhs * (1.0 + 1e-12) {
                return Err(invalid(format!("sequence is not sub-additive at ({n}, {m})")));
            }
        }
    }
    Ok(())
}

fn lp_sorted(s: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return s[0];
    }
    if p == 1.0 {
        return s.iter().sum();
    }
    let m = s[0];
    if m == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return m * s.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt();
    }
    m * s.iter().map(|v| (v / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Luxemburg gauge `inf { lambda > 0 : sum G(s_i / lambda) <= 1 }` by bisection.
fn orlicz_sorted(g: &GFunction, s: &[f64]) -> f64 {
    if let GFunction::Power { p } = g {
        return lp_sorted(s, *p);
    }
    let top = s[0];
    if top == 0.0 {
        return 0.0;
    }
    let mass = |lambda: f64| -> f64 { s.iter().map(|&v| g.eval(v / lambda)).sum() };
    let mut hi = top;
    while mass(hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    loop {
        let next = lo * 0.5;
        if mass(next) > 1.0 || next < f64::MIN_POSITIVE {
            lo = next;
            break;
        }
        hi = next;
        lo = next;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-16 * hi {
            break;
        }
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Exact K-functional of a sorted vector.
///
/// The optimal split keeps `min(|x_i|, lambda)` in the `l2` part; on each
/// segment of clipped counts the optimal `lambda` solves a scalar equation,
/// so the minimum over these candidates (and the breakpoints) is exact.
fn k_functional_sorted(s: &[f64], t: f64) -> f64 {
    let d = s.len();
    let t2 = t * t;
    // prefix sums of values, suffix sums of squares
    let mut pre = vec![0.0; d + 1];
    for i in 0..d {
        pre[i + 1] = pre[i] + s[i];
    }
    let mut tail_sq = vec![0.0; d + 1];
    for i in (0..d).rev() {
        tail_sq[i] = tail_sq[i + 1] + s[i] * s[i];
    }
    // objective with exactly m clipped coordinates (s_m >= lambda >= s_{m+1})
    let objective = |m: usize, lambda: f64| -> f64 {
        let l1_part = pre[m] - m as f64 * lambda;
        let l2_part = (m as f64 * lambda * lambda + tail_sq[m]).max(0.0).sqrt();
        l1_part + t * l2_part
    };
    let mut best = pre[d].min(t * tail_sq[0].sqrt());
    for m in 0..=d {
        let upper = if m == 0 { f64::INFINITY } else { s[m - 1] };
        let lower = if m == d { 0.0 } else { s[m] };
        if upper < lower {
            continue;
        }
        best = best.min(objective(m, lower));
        if upper.is_finite() {
            best = best.min(objective(m, upper));
        }
        if t2 > m as f64 {
            let lambda = (tail_sq[m] / (t2 - m as f64)).sqrt();
            if lambda >= lower && lambda <= upper {
                best = best.min(objective(m, lambda));
            }
        }
    }
    best.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_abs_examples() {
        assert_eq!(sorted_abs(&[-3.0, 1.0, -2.0]), vec![3.0, 2.0, 1.0]);
        assert_eq!(sorted_abs(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn top_k_examples() {
        let x = [5.0, 1.0, 0.0, 2.0];
        let got: Vec<f64> = (1..=4).map(|k| top_k_norm(&x, k).unwrap()).collect();
        assert_eq!(got, vec![5.0, 7.0, 8.0, 8.0]);
        assert!(top_k_norm(&x, 0).is_err());
        assert!(top_k_norm(&x, 5).is_err());
        assert_eq!(top_k_norm(&[0.0; 3], 2).unwrap(), 0.0);
        let spec = NormSpec::top_k(4, 2).unwrap();
        assert_eq!(spec.eval(&[3.0, -1.0, 2.0, 0.0]).unwrap(), 5.0);
    }

    #[test]
    fn majorization_examples() {
        assert!(weakly_majorizes(&[2.0, 0.0], &[1.0, 1.0]).unwrap());
        assert!(!weakly_majorizes(&[1.0, 1.0], &[2.0, 0.0]).unwrap());
        assert!(weakly_majorizes(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn flat_vector_examples() {
        assert_eq!(flat_vector(1, 4).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(flat_vector(4, 4).unwrap(), vec![1.0; 4]);
        assert!(flat_vector(0, 4).is_err());
        assert!(flat_vector(5, 4).is_err());
    }

    #[test]
    fn minimal_sqrt_of_all_ones() {
        let spec = NormSpec::minimal_sqrt(4);
        assert!((spec.eval(&[1.0; 4]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_and_parameter_errors() {
        let spec = NormSpec::l2(3);
        assert!(matches!(
            spec.eval(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(spec.eval(&[1.0, f64::NAN, 0.0]), Err(Error::NonFinite(1))));
        assert!(NormSpec::top_k(3, 4).is_err());
        assert!(NormSpec::lp(3, 0.5).is_err());
        assert!(NormSpec::k_functional(3, 0.0).is_err());
        assert!(NormSpec::minimal(3, vec![1.0, 0.5, 2.0]).is_err());
        // not sub-additive: a_2 = 3 > a_1 + a_1
        assert!(NormSpec::maximal(3, vec![1.0, 3.0, 3.0]).is_err());
        assert!(NormSpec::max_of_scaled_top_k(2, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn k_functional_limits() {
        // large t: pure l1; tiny t: t * l2
        let x = [3.0, -1.0, 0.5];
        let big = NormSpec::k_functional(3, 100.0).unwrap();
        assert!((big.eval(&x).unwrap() - 4.5).abs() < 1e-12);
        let small = NormSpec::k_functional(3, 1e-3).unwrap();
        let l2 = (9.0f64 + 1.0 + 0.25).sqrt();
        assert!((small.eval(&x).unwrap() - 1e-3 * l2).abs() < 1e-12);
    }

    #[test]
    fn orlicz_huber_is_between_scaled_l1_and_l2() {
        let g = GFunction::huber(1.0).unwrap();
        let spec = NormSpec::orlicz(3, g.clone()).unwrap();
        let x = [0.3, -0.2, 0.1];
        let v = spec.eval(&x).unwrap();
        let mass: f64 = x.iter().map(|t: &f64| g.eval(t.abs() / v)).sum();
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn norm_spec_text_round_trip() {
        let specs = vec![
            NormSpec::top_k(5, 2).unwrap(),
            NormSpec::linf(3),
            NormSpec::minimal_sqrt(4).scaled(0.5).unwrap(),
            NormSpec::orlicz(6, GFunction::huber(0.5).unwrap()).unwrap(),
            NormSpec::k_functional(2, 2.0).unwrap(),
        ];
        for s in specs {
            let text = s.to_toml();
            assert_eq!(NormSpec::from_toml(&text).unwrap(), s, "{text}");
        }
        let bad = "version = 1\ndim = 3\nbogus = 1\n[norm]\nkind = \"top_k\"\nk = 1\n";
        assert!(NormSpec::from_toml(bad).is_err());
        let bad_kind = "version = 1\ndim = 3\n[norm]\nkind = \"top_k\"\nk = 1\nextra = 2\n";
        assert!(NormSpec::from_toml(bad_kind).is_err());
        let bad_version = "version = 9\ndim = 3\n[norm]\nkind = \"top_k\"\nk = 1\n";
        assert!(NormSpec::from_toml(bad_version).is_err());
    }
}
