//! Rounded dual vectors and the linear embedding into top-k norms.
//!
//! A symmetric norm is estimated by `max_i sum_k c_{i,k} top_k(x)`, where each
//! row `c_i` comes from a non-increasing dual vector `y_i` through
//! `c_k = y_k - y_{k+1}`. The rows are the fixed points of the simplification
//! map inside the set of rounded vectors whose dual norm is at most `beta^2`.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::leveling::{materialize, simplify_counts, LevelParams};
use crate::vecnorm::{sorted_abs, NormSpec, NormSpecFile};

/// Rejects vectors that are not non-increasing and non-negative.
pub fn check_sorted_nonneg(y: &[f64]) -> Result<()> {
    if y.iter().any(|v| !v.is_finite() || *v < 0.0) || y.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::NotSortedNonNegative);
    }
    Ok(())
}

/// `<x*, y>` for a non-increasing non-negative `y`.
pub fn maximal_seminorm_eval(y: &[f64], x: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            found: x.len(),
        });
    }
    check_sorted_nonneg(y)?;
    Ok(sorted_abs(x).iter().zip(y).map(|(a, b)| a * b).sum())
}

/// `c_k = y_k - y_{k+1}` with `y_{d+1} = 0`.
pub fn coeffs_from_net_vector(y: &[f64]) -> Result<Vec<f64>> {
    check_sorted_nonneg(y)?;
    let d = y.len();
    Ok((0..d)
        .map(|k| y[k] - if k + 1 < d { y[k + 1] } else { 0.0 })
        .collect())
}

/// Limits and tolerances for the enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    /// Relative slack on the dual-ball filter `||z||_* <= beta^2 (1 + dual_tol)`.
    pub dual_tol: f64,
    /// Maximum number of dual-norm evaluations before failing.
    pub node_budget: u64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            dual_tol: 0.02,
            node_budget: 500_000_000,
        }
    }
}

/// Counters from one enumeration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationStats {
    /// Vectors accepted by the dual filter (including the zero vector).
    pub candidates: u64,
    /// Accepted vectors that are fixed points of the simplification.
    pub net_points: u64,
    /// Dual-norm evaluations performed.
    pub nodes: u64,
}

impl EnumerationStats {
    fn merge(self, o: Self) -> Self {
        Self {
            candidates: self.candidates + o.candidates,
            net_points: self.net_points + o.net_points,
            nodes: self.nodes + o.nodes,
        }
    }
}

/// Which accepted vectors are passed to the visitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Every accepted vector.
    All,
    /// Only fixed points of the simplification; subtrees without any are skipped.
    NetOnly,
    /// Only vectors to which no single entry can be added without leaving the set.
    Saturated,
}

/// A rounded vector given by its per-level counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoundedDualCandidate {
    pub counts: Vec<u32>,
}

impl RoundedDualCandidate {
    pub fn vector(&self, p: &LevelParams) -> Vec<f64> {
        materialize(&self.counts, p)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

struct Enumerator<'a> {
    norm: &'a NormSpec,
    p: LevelParams,
    levels: usize,
    allowed: Vec<u32>,
    threshold: f64,
    tol: f64,
    window: f64,
    budget: u64,
    nodes: &'a AtomicU64,
    selection: Selection,
}

struct Frame<'v, A, V> {
    acc: A,
    visit: &'v V,
    stats: EnumerationStats,
}

impl Enumerator<'_> {
    fn accepts(&self, buf: &[f64]) -> Result<bool> {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.budget {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
            });
        }
        Ok(self.norm.dual_sorted(buf, self.tol)? <= self.threshold)
    }

    /// Whether level `j` with count `c` survives simplification given the
    /// (already fixed) counts of lower levels.
    fn survives(&self, counts: &[u32], j: usize, c: u32) -> bool {
        let limit = j as f64 - self.window;
        let reach = limit.ceil() as i64 - 1;
        if reach < 0 {
            return true;
        }
        let window_max = counts[..=(reach as usize).min(j - 1)]
            .iter()
            .copied()
            .max()
            .unwrap_or(0);
        c > window_max
    }

    fn saturated(&self, counts: &[u32], buf: &mut [f64], used: usize) -> Result<bool> {
        let d = self.p.d;
        if used == d {
            return Ok(true);
        }
        // adding one entry at level j gives a vector that dominates this one;
        // it is in the set only if its rounded count is allowed and it passes
        for j in 0..self.levels {
            let c = counts[j];
            let next = self.allowed.iter().copied().find(|&a| a > c);
            let Some(next) = next else { continue };
            let extra = (next - c) as usize;
            if used + extra > d {
                continue;
            }
            let mut trial = counts.to_vec();
            trial[j] = next;
            let v = materialize(&trial, &self.p);
            buf.copy_from_slice(&v);
            if self.accepts(buf)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs<A, V>(
        &self,
        start: usize,
        counts: &mut Vec<u32>,
        buf: &mut Vec<f64>,
        used: usize,
        fixed: bool,
        frame: &mut Frame<'_, A, V>,
    ) -> Result<()>
    where
        V: Fn(&mut A, &[u32], bool),
    {
        frame.stats.candidates += 1;
        if fixed {
            frame.stats.net_points += 1;
        }
        let emit = match self.selection {
            Selection::All => true,
            Selection::NetOnly => fixed,
            Selection::Saturated => {
                let mut scratch = vec![0.0; self.p.d];
                self.saturated(counts, &mut scratch, used)?
            }
        };
        if emit {
            (frame.visit)(&mut frame.acc, counts, fixed);
        }
        for j in start..self.levels {
            let child_fixed_base = fixed;
            let v = self.p.level_value(j as i64);
            for &c in &self.allowed {
                let c_us = c as usize;
                if used + c_us > self.p.d {
                    break;
                }
                let child_fixed = child_fixed_base && self.survives(counts, j, c);
                if self.selection == Selection::NetOnly && !child_fixed {
                    // larger counts may still survive
                    continue;
                }
                buf[used..used + c_us].fill(v);
                let ok = self.accepts(buf)?;
                if !ok {
                    buf[used..used + c_us].fill(0.0);
                    // more mass only increases the dual norm
                    break;
                }
                counts[j] = c;
                self.dfs(j + 1, counts, buf, used + c_us, child_fixed, frame)?;
                counts[j] = 0;
                buf[used..used + c_us].fill(0.0);
            }
        }
        Ok(())
    }
}

/// Enumerates rounded vectors with `||z||_* <= beta^2 (1 + dual_tol)` and folds
/// the selected ones into an accumulator.
///
/// Work is split over the first occupied level and its count; partial results
/// are merged in that canonical order, so the outcome does not depend on the
/// thread schedule. The visitor receives the counts on levels
/// `0..num_levels` and whether the vector is a fixed point of simplification.
pub fn fold_rounded_dual_set<A, I, V, M>(
    norm: &NormSpec,
    p: &LevelParams,
    opts: &EnumerationOptions,
    selection: Selection,
    init: I,
    visit: V,
    merge: M,
) -> Result<(A, EnumerationStats)>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, &[u32], bool) + Sync,
    M: Fn(A, A) -> A,
{
    p.validate()?;
    if norm.dim() != p.d {
        return Err(Error::DimensionMismatch {
            expected: p.d,
            found: norm.dim(),
        });
    }
    if !(opts.dual_tol > 0.0) {
        return Err(invalid("dual tolerance must be positive"));
    }
    let nodes = AtomicU64::new(0);
    let en = Enumerator {
        norm,
        p: *p,
        levels: p.num_levels(),
        allowed: p.allowed_counts(),
        threshold: p.beta * p.beta * (1.0 + opts.dual_tol),
        tol: opts.dual_tol * 1e-3,
        window: p.window(),
        budget: opts.node_budget,
        nodes: &nodes,
        selection,
    };

    // root: the zero vector, visited alone
    let mut root = Frame {
        acc: init(),
        visit: &visit,
        stats: EnumerationStats::default(),
    };
    root.stats.candidates += 1;
    root.stats.net_points += 1;
    let root_emit = match selection {
        Selection::Saturated => en.saturated(&vec![0; en.levels], &mut vec![0.0; p.d], 0)?,
        _ => true,
    };
    if root_emit {
        visit(&mut root.acc, &vec![0; en.levels], true);
    }

    let branches: Vec<(usize, u32)> = (0..en.levels)
        .flat_map(|j| en.allowed.iter().map(move |&c| (j, c)))
        .filter(|&(_, c)| c as usize <= p.d)
        .collect();
    let parts: Vec<Result<Option<(A, EnumerationStats)>>> = branches
        .par_iter()
        .map(|&(j, c)| {
            let mut counts = vec![0u32; en.levels];
            let mut buf = vec![0.0; p.d];
            let fixed = en.survives(&counts, j, c);
            if selection == Selection::NetOnly && !fixed {
                return Ok(None);
            }
            buf[..c as usize].fill(p.level_value(j as i64));
            if !en.accepts(&buf)? {
                return Ok(None);
            }
            counts[j] = c;
            let mut frame = Frame {
                acc: init(),
                visit: &visit,
                stats: EnumerationStats::default(),
            };
            en.dfs(j + 1, &mut counts, &mut buf, c as usize, fixed, &mut frame)?;
            Ok(Some((frame.acc, frame.stats)))
        })
        .collect();

    let mut acc = root.acc;
    let mut stats = root.stats;
    for part in parts {
        if let Some((a, s)) = part? {
            acc = merge(acc, a);
            stats = stats.merge(s);
        }
    }
    stats.nodes = nodes.load(Ordering::Relaxed);
    Ok((acc, stats))
}

/// A set of rounded vectors stored as flat per-level counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedDualSet {
    params: LevelParams,
    levels: usize,
    counts: Vec<u16>,
    stats: EnumerationStats,
}

impl RoundedDualSet {
    pub fn params(&self) -> &LevelParams {
        &self.params
    }

    pub fn num_levels(&self) -> usize {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.counts.len().checked_div(self.levels).unwrap_or(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> EnumerationStats {
        self.stats
    }

    /// Per-level counts of candidate `i`.
    pub fn counts(&self, i: usize) -> &[u16] {
        &self.counts[i * self.levels..(i + 1) * self.levels]
    }

    pub fn candidate(&self, i: usize) -> RoundedDualCandidate {
        RoundedDualCandidate {
            counts: self.counts(i).iter().map(|&c| c as u32).collect(),
        }
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.candidate(i).vector(&self.params)
    }

    pub fn iter(&self) -> impl Iterator<Item = RoundedDualCandidate> + '_ {
        (0..self.len()).map(|i| self.candidate(i))
    }
}

fn collect_set(
    norm: &NormSpec,
    p: &LevelParams,
    opts: &EnumerationOptions,
    selection: Selection,
) -> Result<RoundedDualSet> {
    let (counts, stats) = fold_rounded_dual_set(
        norm,
        p,
        opts,
        selection,
        Vec::new,
        |acc: &mut Vec<u16>, c, _| acc.extend(c.iter().map(|&v| v as u16)),
        |mut a, b| {
            a.extend(b);
            a
        },
    )?;
    Ok(RoundedDualSet {
        params: *p,
        levels: p.num_levels(),
        counts,
        stats,
    })
}

/// All rounded vectors with `||z||_* <= beta^2 (1 + dual_tol)`, in canonical order.
pub fn enumerate_rounded_dual_set(
    norm: &NormSpec,
    p: &LevelParams,
    opts: &EnumerationOptions,
) -> Result<RoundedDualSet> {
    collect_set(norm, p, opts, Selection::All)
}

/// The members of the rounded dual set that cannot be extended by one entry.
///
/// Every other member is dominated entrywise by one of these, so the maximum
/// of `<x*, z>` over the whole set is attained here.
pub fn saturated_rounded_dual_set(
    norm: &NormSpec,
    p: &LevelParams,
    opts: &EnumerationOptions,
) -> Result<RoundedDualSet> {
    collect_set(norm, p, opts, Selection::Saturated)
}

/// Indices of rows whose prefix sums are not dominated by another row.
///
/// For sorted `x`, `<x, y> = sum_k (x_k - x_{k+1}) Y_k` with `Y` the prefix
/// sums of `y`, so a row with pointwise smaller prefix sums never attains the
/// maximum.
pub fn majorization_frontier(prefix: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..prefix.len()).collect();
    order.sort_by(|&a, &b| {
        let (ya, yb) = (&prefix[a], &prefix[b]);
        let last = ya.len() - 1;
        yb[last]
            .total_cmp(&ya[last])
            .then_with(|| {
                yb.iter()
                    .zip(ya)
                    .map(|(u, v)| u.total_cmp(v))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then(a.cmp(&b))
    });
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        let yi = &prefix[i];
        let dominated = front
            .iter()
            .any(|&f| prefix[f].iter().zip(yi).all(|(a, b)| a >= b));
        if !dominated {
            front.push(i);
        }
    }
    front.sort_unstable();
    front
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(u, v)| u >= v)
}

fn insert_frontier(front: &mut Vec<Vec<f64>>, row: Vec<f64>) {
    if front.iter().any(|f| dominates(f, &row)) {
        return;
    }
    front.retain(|f| !dominates(&row, f));
    front.push(row);
}

/// Prefix sums of the members of the whole rounded dual set that are not
/// dominated by another member.
///
/// `max_z <x*, z>` over the rounded dual set equals [`frontier_pairing`] over
/// these rows.
pub fn rounded_dual_frontier(
    norm: &NormSpec,
    p: &LevelParams,
    opts: &EnumerationOptions,
) -> Result<Vec<Vec<f64>>> {
    let (mut front, _) = fold_rounded_dual_set(
        norm,
        p,
        opts,
        Selection::Saturated,
        Vec::new,
        |front: &mut Vec<Vec<f64>>, counts, _| {
            let mut acc = 0.0;
            let row = materialize(counts, p)
                .into_iter()
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect();
            insert_frontier(front, row);
        },
        |mut a, b| {
            for row in b {
                insert_frontier(&mut a, row);
            }
            a
        },
    )?;
    front.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(front)
}

/// `max_rows <s, y>` for sorted non-negative `s`, with rows given by the
/// prefix sums of `y`.
pub fn frontier_pairing(rows: &[Vec<f64>], s: &[f64]) -> f64 {
    let d = s.len();
    let diffs: Vec<f64> = (0..d)
        .map(|k| s[k] - if k + 1 < d { s[k + 1] } else { 0.0 })
        .collect();
    rows.iter()
        .map(|y| diffs.iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
        .fold(0.0, f64::max)
}

/// A sparse evaluation row: `(k, c_k)` pairs with `k` zero-based.
type SparseRow = Vec<(u32, f64)>;

/// Linear embedding of a symmetric norm into a max of weighted top-k sums.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpec {
    norm: NormSpec,
    params: LevelParams,
    dual_tol: f64,
    levels: usize,
    net: Vec<u32>,
    coeffs: Vec<f64>,
    frontier: Vec<SparseRow>,
    stats: EnumerationStats,
    index_meta: Option<toml::Table>,
}

/// Builds the embedding: the net is the set of fixed points of simplification
/// in the rounded dual set, which equals the image of that set under
/// simplification because removing levels keeps a vector in the set.
pub fn build_embedding(
    norm: &NormSpec,
    p: &LevelParams,
    opts: &EnumerationOptions,
) -> Result<EmbeddingSpec> {
    let set = collect_set(norm, p, opts, Selection::NetOnly)?;
    let levels = set.levels;
    let net: Vec<u32> = set.counts.iter().map(|&c| c as u32).collect();
    EmbeddingSpec::from_net(norm.clone(), *p, opts.dual_tol, levels, net, set.stats)
}

impl EmbeddingSpec {
    fn from_net(
        norm: NormSpec,
        params: LevelParams,
        dual_tol: f64,
        levels: usize,
        net: Vec<u32>,
        stats: EnumerationStats,
    ) -> Result<Self> {
        let d = params.d;
        let rows = if levels == 0 { 1 } else { net.len() / levels };
        let mut coeffs = Vec::with_capacity(rows * d);
        for i in 0..rows {
            let y = materialize(&net[i * levels..(i + 1) * levels], &params);
            coeffs.extend(coeffs_from_net_vector(&y)?);
        }
        let mut spec = EmbeddingSpec {
            norm,
            params,
            dual_tol,
            levels,
            net,
            coeffs,
            frontier: Vec::new(),
            stats,
            index_meta: None,
        };
        spec.frontier = spec.compute_frontier();
        Ok(spec)
    }

    fn compute_frontier(&self) -> Vec<SparseRow> {
        let d = self.params.d;
        let prefix: Vec<Vec<f64>> = (0..self.rows())
            .map(|i| {
                let y = self.net_vector(i);
                let mut acc = 0.0;
                y.iter()
                    .map(|v| {
                        acc += v;
                        acc
                    })
                    .collect()
            })
            .collect();
        majorization_frontier(&prefix)
            .into_iter()
            .map(|i| {
                self.coeffs(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(k, c)| (k as u32, *c))
                    .collect::<SparseRow>()
            })
            .filter(|row: &SparseRow| !row.is_empty() || d == 0)
            .collect()
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn params(&self) -> &LevelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.d
    }

    pub fn dual_tol(&self) -> f64 {
        self.dual_tol
    }

    pub fn num_levels(&self) -> usize {
        self.levels
    }

    /// Number of net vectors `t`.
    pub fn rows(&self) -> usize {
        if self.levels == 0 {
            1
        } else {
            self.net.len() / self.levels
        }
    }

    /// Rows that can attain the maximum (the others are dominated).
    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    pub fn stats(&self) -> EnumerationStats {
        self.stats
    }

    pub fn net_counts(&self, i: usize) -> &[u32] {
        &self.net[i * self.levels..(i + 1) * self.levels]
    }

    pub fn net_vector(&self, i: usize) -> Vec<f64> {
        materialize(self.net_counts(i), &self.params)
    }

    /// Coefficients `c_{i,k}` of row `i`, `k = 1..=d`.
    pub fn coeffs(&self, i: usize) -> &[f64] {
        let d = self.params.d;
        &self.coeffs[i * d..(i + 1) * d]
    }

    pub fn index_meta(&self) -> Option<&toml::Table> {
        self.index_meta.as_ref()
    }

    pub fn set_index_meta(&mut self, meta: Option<toml::Table>) {
        self.index_meta = meta;
    }

    /// `max_i sum_k c_{i,k} top_k(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.params.d {
            return Err(Error::DimensionMismatch {
                expected: self.params.d,
                found: x.len(),
            });
        }
        Ok(self.eval_sorted(&sorted_abs(x)))
    }

    /// As [`eval`](Self::eval) for an already sorted non-negative vector.
    pub fn eval_sorted(&self, s: &[f64]) -> f64 {
        let mut prefix = Vec::with_capacity(s.len());
        let mut acc = 0.0;
        for &v in s {
            acc += v;
            prefix.push(acc);
        }
        self.eval_prefix(&prefix)
    }

    /// Evaluation from the top-k norms of `x` (`prefix[k-1] = top_k(x)`).
    pub fn eval_prefix(&self, prefix: &[f64]) -> f64 {
        self.frontier
            .iter()
            .map(|row| row.iter().map(|&(k, c)| c * prefix[k as usize]).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Evaluation over every row, without the frontier shortcut.
    pub fn eval_all_rows(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.params.d {
            return Err(Error::DimensionMismatch {
                expected: self.params.d,
                found: x.len(),
            });
        }
        let s = sorted_abs(x);
        let d = self.params.d;
        let mut best = 0.0f64;
        for i in 0..self.rows() {
            let mut acc = 0.0;
            let mut top = 0.0;
            for k in 0..d {
                top += s[k];
                acc += self.coeffs[i * d + k] * top;
            }
            best = best.max(acc);
        }
        Ok(best)
    }

    /// Writes the versioned binary file (see [`EmbeddingSpec::read_from`]).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let meta = EmbeddingMeta {
            version: EMBEDDING_VERSION,
            rows: self.rows() as u64,
            levels: self.levels as u64,
            beta: self.params.beta,
            tau: self.params.tau,
            dim: self.params.d as u64,
            dual_tol: self.dual_tol,
            candidates: self.stats.candidates,
            nodes: self.stats.nodes,
            norm: self.norm.file_form(),
            index: self.index_meta.clone(),
        };
        let text = toml::to_string(&meta).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(EMBEDDING_MAGIC)?;
        w.write_all(&EMBEDDING_VERSION.to_le_bytes())?;
        w.write_all(&(text.len() as u64).to_le_bytes())?;
        w.write_all(text.as_bytes())?;
        for c in &self.net {
            w.write_all(&c.to_le_bytes())?;
        }
        for c in &self.coeffs {
            w.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a file written by [`write_to`](Self::write_to).
    ///
    /// Layout, all integers little-endian:
    /// 8-byte magic `SYMNEMB1`, `u32` version, `u64` metadata length, the
    /// metadata as TOML text, `rows * levels` `u32` level counts, then
    /// `rows * dim` `f64` coefficients. The coefficients are recomputed from
    /// the counts and must match bit for bit.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != EMBEDDING_MAGIC {
            return Err(Error::Format("not an embedding file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != EMBEDDING_VERSION {
            return Err(Error::Format("unsupported embedding file version".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let len = u64::from_le_bytes(b8) as usize;
        if len > 1 << 24 {
            return Err(Error::Format("metadata block too large".into()));
        }
        let mut text = vec![0u8; len];
        r.read_exact(&mut text)?;
        let text = String::from_utf8(text).map_err(|e| Error::Format(e.to_string()))?;
        let meta: EmbeddingMeta =
            toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        if meta.version != EMBEDDING_VERSION {
            return Err(Error::Format("metadata version mismatch".into()));
        }
        let norm = NormSpec::from_file_form(meta.norm)?;
        let params = LevelParams::new(meta.beta, meta.tau, meta.dim as usize)?;
        if norm.dim() != params.d || meta.levels as usize != params.num_levels() {
            return Err(Error::Format("inconsistent dimensions in metadata".into()));
        }
        let levels = meta.levels as usize;
        let rows = meta.rows as usize;
        let mut net = vec![0u32; rows * levels];
        for c in net.iter_mut() {
            r.read_exact(&mut b4)?;
            *c = u32::from_le_bytes(b4);
        }
        let allowed = params.allowed_counts();
        for i in 0..rows {
            let row = &net[i * levels..(i + 1) * levels];
            let total: u64 = row.iter().map(|&c| c as u64).sum();
            if total > params.d as u64 || row.iter().any(|c| *c != 0 && !allowed.contains(c)) {
                return Err(Error::Format(format!("net row {i} is not a rounded vector")));
            }
        }
        let mut stored = vec![0f64; rows * params.d];
        for c in stored.iter_mut() {
            r.read_exact(&mut b8)?;
            *c = f64::from_le_bytes(b8);
        }
        let stats = EnumerationStats {
            candidates: meta.candidates,
            net_points: rows as u64,
            nodes: meta.nodes,
        };
        let mut spec = Self::from_net(norm, params, meta.dual_tol, levels, net, stats)?;
        if spec.coeffs.iter().zip(&stored).any(|(a, b)| a.to_bits() != b.to_bits()) {
            return Err(Error::Format("coefficients do not match the net".into()));
        }
        spec.index_meta = meta.index;
        Ok(spec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

const EMBEDDING_MAGIC: &[u8; 8] = b"SYMNEMB1";
const EMBEDDING_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingMeta {
    version: u32,
    rows: u64,
    levels: u64,
    dim: u64,
    beta: f64,
    tau: f64,
    dual_tol: f64,
    candidates: u64,
    nodes: u64,
    norm: NormSpecFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<toml::Table>,
}

/// One row of [`net_size_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSizeRow {
    pub d: usize,
    /// Size of the rounded dual set, when it was counted.
    pub candidates: Option<u64>,
    /// Net size `t`.
    pub net: Option<u64>,
    /// Dual-norm evaluations spent on the net.
    pub nodes: u64,
    pub error: Option<String>,
}

/// Net sizes for a family of norms over several dimensions.
///
/// With `count_candidates` the whole rounded dual set is walked as well,
/// which costs far more than the net alone. Nothing is materialized.
pub fn net_size_report<F>(
    norm_for_dim: F,
    dims: &[usize],
    beta: f64,
    opts: &EnumerationOptions,
    count_candidates: bool,
) -> Vec<NetSizeRow>
where
    F: Fn(usize) -> Result<NormSpec>,
{
    dims.iter()
        .map(|&d| {
            let run = || -> Result<NetSizeRow> {
                let norm = norm_for_dim(d)?;
                let p = LevelParams::with_default_tau(beta, d)?;
                let count = |sel| {
                    fold_rounded_dual_set(&norm, &p, opts, sel, || (), |_, _, _| {}, |_, _| ())
                        .map(|(_, s)| s)
                };
                let net = count(Selection::NetOnly)?;
                let candidates = if count_candidates {
                    Some(count(Selection::All)?.candidates)
                } else {
                    None
                };
                Ok(NetSizeRow {
                    d,
                    candidates,
                    net: Some(net.net_points),
                    nodes: net.nodes,
                    error: None,
                })
            };
            run().unwrap_or_else(|e| NetSizeRow {
                d,
                candidates: None,
                net: None,
                nodes: 0,
                error: Some(e.to_string()),
            })
        })
        .collect()
}

/// Net obtained by simplifying every member of `set` and removing duplicates.
pub fn simplified_image(set: &RoundedDualSet) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = set
        .iter()
        .map(|c| simplify_counts(&c.counts, set.params()))
        .collect();
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seminorm_examples() {
        let x = [5.0, 1.0, 0.0, 2.0];
        assert_eq!(maximal_seminorm_eval(&[3.0, 2.0, 2.0, 1.0], &x).unwrap(), 21.0);
        assert_eq!(maximal_seminorm_eval(&[1.0, 0.0, 0.0, 0.0], &x).unwrap(), 5.0);
        assert_eq!(maximal_seminorm_eval(&[1.0; 4], &x).unwrap(), 8.0);
        assert!(maximal_seminorm_eval(&[1.0, 2.0, 0.0, 0.0], &x).is_err());
        assert!(maximal_seminorm_eval(&[1.0, 0.0], &x).is_err());
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(
            coeffs_from_net_vector(&[3.0, 2.0, 2.0, 1.0]).unwrap(),
            vec![1.0, 0.0, 1.0, 1.0]
        );
        assert_eq!(coeffs_from_net_vector(&[1.0; 3]).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(coeffs_from_net_vector(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn linf_dual_filter_and_net() {
        let norm = NormSpec::linf(4);
        let p = LevelParams::with_default_tau(1.5, 4).unwrap();
        let opts = EnumerationOptions::default();
        let set = enumerate_rounded_dual_set(&norm, &p, &opts).unwrap();
        for z in set.iter() {
            let l1: f64 = z.vector(&p).iter().sum();
            assert!(l1 <= 2.25 * 1.02 + 1e-12);
        }
        let emb = build_embedding(&norm, &p, &opts).unwrap();
        assert!(emb.rows() <= set.len());
        let mut net: Vec<Vec<u32>> = (0..emb.rows()).map(|i| emb.net_counts(i).to_vec()).collect();
        net.sort();
        assert_eq!(net, simplified_image(&set));
    }

    #[test]
    fn dimension_one() {
        let norm = NormSpec::l2(1);
        let p = LevelParams::with_default_tau(1.5, 1).unwrap();
        let set = enumerate_rounded_dual_set(&norm, &p, &EnumerationOptions::default()).unwrap();
        assert_eq!(set.num_levels(), 0);
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn budget_is_enforced() {
        let norm = NormSpec::l2(8);
        let p = LevelParams::with_default_tau(1.5, 8).unwrap();
        let opts = EnumerationOptions {
            node_budget: 100,
            ..Default::default()
        };
        assert!(matches!(
            enumerate_rounded_dual_set(&norm, &p, &opts),
            Err(Error::BudgetExceeded { budget: 100 })
        ));
    }

    #[test]
    fn frontier_matches_all_rows() {
        let norm = NormSpec::l2(6);
        let p = LevelParams::with_default_tau(1.5, 6).unwrap();
        let emb = build_embedding(&norm, &p, &EnumerationOptions::default()).unwrap();
        assert!(emb.frontier_len() <= emb.rows());
        for x in [[1.0, 0.5, -0.2, 0.0, 3.0, 0.1], [1.0; 6], [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]] {
            let a = emb.eval(&x).unwrap();
            let b = emb.eval_all_rows(&x).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn file_round_trip() {
        let norm = NormSpec::minimal_sqrt(5);
        let p = LevelParams::with_default_tau(1.5, 5).unwrap();
        let mut emb = build_embedding(&norm, &p, &EnumerationOptions::default()).unwrap();
        let mut meta = toml::Table::new();
        meta.insert("r".into(), toml::Value::Float(1.0));
        emb.set_index_meta(Some(meta));
        let mut bytes = Vec::new();
        emb.write_to(&mut bytes).unwrap();
        let back = EmbeddingSpec::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, emb);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(bytes, again);
        let n = bytes.len();
        bytes[n - 1] ^= 1;
        assert!(EmbeddingSpec::read_from(bytes.as_slice()).is_err());
    }
}
