use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::planted::{gen_workload, Workload};
use crate::annindex::{
    exact_scan, BuildStats, DistanceOracle, IndexReport, NormOracle, PointSet, RingTree,
    RingTreeParams, ScalingPipeline, ScalingPipelineConfig, SymNormIndex, SymNormMode,
};
use crate::error::{Error, Result};
use crate::leveling::LevelParams;
use crate::netgen::{build_embedding, EmbeddingSpec, EnumerationOptions};
use crate::randmap::RandMapParams;
use crate::rng::derive_seed;
use crate::vecnorm::{NormKind, NormSpec};

pub const RUN_CONFIG_VERSION: u32 = 1;
pub const REPORT_VERSION: u32 = 1;

/// Which index a bench run builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    /// Full scan; the baseline.
    Exact,
    /// One ring tree over the source norm.
    RingTree,
    /// Random scalings into `l_inf`; the loss is chosen from the norm
    /// (step loss for top-k, `G` for Orlicz, the level table otherwise).
    Scaling,
    SymnormDirect,
    SymnormNested,
}

/// Assertions checked after a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    pub min_recall: Option<f64>,
    pub max_mean_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

/// A bench run, read from TOML.
///
/// ```toml
/// version = 1
/// seed = 7
/// n = 1000
/// d = 32
/// queries = 200
/// separation = 24.0
/// index = "scaling"
/// [norm]
/// kind = "orlicz"
/// g = { shape = "huber", delta = 1.0 }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub name: String,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub queries: usize,
    pub r: f64,
    pub separation: f64,
    pub norm: NormKind,
    pub index: IndexKind,
    pub beta: f64,
    /// `None` means `beta / d^2`.
    pub tau: Option<f64>,
    pub epsilon: f64,
    pub mu: f64,
    pub d_factor: f64,
    pub alpha: f64,
    /// `None` means `ceil(n^epsilon)`.
    pub reps: Option<usize>,
    pub dual_tol: f64,
    pub leaf_cap: usize,
    pub cluster_factor: f64,
    /// Acceptance factor of the symmetric-norm indexes; `None` means `separation`.
    pub accept_factor: Option<f64>,
    pub bootstrap: usize,
    pub assertions: Assertions,
    pub output: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: 0,
            name: String::new(),
            seed: 0,
            n: 1000,
            d: 16,
            queries: 100,
            r: 1.0,
            separation: 4.0,
            norm: NormKind::Lp { p: 2.0 },
            index: IndexKind::Exact,
            beta: 1.5,
            tau: None,
            epsilon: 0.5,
            mu: 0.3,
            d_factor: 3.0,
            alpha: 2.0,
            reps: None,
            dual_tol: 0.02,
            leaf_cap: 8,
            cluster_factor: 0.5,
            accept_factor: None,
            bootstrap: 1000,
            assertions: Assertions::default(),
            output: OutputPaths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn norm_spec(&self) -> Result<NormSpec> {
        NormSpec::new(self.d, self.norm.clone()).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != RUN_CONFIG_VERSION {
            return bad(format!(
                "expected version = {RUN_CONFIG_VERSION}, found {}",
                self.version
            ));
        }
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.queries > self.n {
            return bad("queries must not exceed n".into());
        }
        if !(self.separation > 1.0) {
            return bad("separation must exceed 1".into());
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad("r must be positive".into());
        }
        self.norm_spec()?;
        self.tree_params(self.r).validate().map_err(|e| Error::Config(e.to_string()))?;
        if matches!(self.index, IndexKind::Scaling | IndexKind::SymnormNested) {
            self.randmap().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn randmap(&self) -> Result<RandMapParams> {
        RandMapParams::new(self.mu, self.d_factor, self.alpha, derive_seed(self.seed, 2))
    }

    pub fn tree_params(&self, r: f64) -> RingTreeParams {
        RingTreeParams {
            leaf_cap: self.leaf_cap,
            cluster_factor: self.cluster_factor,
            seed: derive_seed(self.seed, 3),
            ..RingTreeParams::new(r, self.epsilon)
        }
    }

    pub fn level_params(&self) -> Result<LevelParams> {
        match self.tau {
            Some(t) => LevelParams::new(self.beta, t, self.d),
            None => LevelParams::with_default_tau(self.beta, self.d),
        }
    }
}

/// One row of the per-query CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub query: usize,
    pub planted: usize,
    pub candidate: Option<usize>,
    pub distance: Option<f64>,
    pub exact: usize,
    pub exact_distance: f64,
    /// 1 when a candidate within the index threshold was returned.
    pub recall: u8,
    /// Returned distance over exact distance.
    pub ratio: Option<f64>,
    pub distance_evals: u64,
    pub nodes_visited: u64,
    pub repetitions: u32,
}

/// Mean with a percentile bootstrap 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

/// Build-side counters summed over all trees of the index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub trees: usize,
    pub stored_points: u64,
    pub distance_evals: u64,
    pub fallback_leaves: u64,
    pub max_depth: u64,
    pub net_size: Option<usize>,
}

/// Range of embedded distance over true distance on sampled pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    pub pairs: usize,
    pub min: f64,
    pub max: f64,
}

/// The JSON aggregate of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub index: String,
    pub threshold: f64,
    pub build: BuildSummary,
    pub queries: usize,
    pub recall: Option<Summary>,
    pub ratio: Option<Summary>,
    pub distance_evals: Option<Summary>,
    pub nodes_visited: Option<Summary>,
    pub distortion: Option<Distortion>,
    pub assertions: Vec<AssertionResult>,
    pub passed: bool,
}

/// Output of [`run_bench`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub rows: Vec<QueryRow>,
    pub report: BenchReport,
}

impl BenchOutcome {
    pub fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "query",
                "planted",
                "candidate",
                "distance",
                "exact",
                "exact_distance",
                "recall",
                "ratio",
                "distance_evals",
                "nodes_visited",
                "repetitions",
            ])
            .map_err(|e| Error::Format(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes the outputs named in the config.
    pub fn write_outputs(&self) -> Result<()> {
        let out = &self.report.config.output;
        if let Some(p) = &out.csv {
            std::fs::write(p, self.csv()?)?;
        }
        if let Some(p) = &out.json {
            std::fs::write(p, self.json())?;
        }
        Ok(())
    }
}

enum Built {
    Exact(NormOracle),
    Ring(NormOracle, RingTree),
    Scaling(ScalingPipeline),
    SymNorm(SymNormIndex),
}

impl Built {
    fn query(&self, points: &PointSet, q: &[f64]) -> Result<IndexReport> {
        match self {
            Built::Exact(o) => exact_scan(points, o, q),
            Built::Ring(o, t) => Ok(t.query(points, o, q)),
            Built::Scaling(p) => p.query(q),
            Built::SymNorm(s) => s.query(q),
        }
    }

    fn trees(&self) -> Vec<&RingTree> {
        match self {
            Built::Exact(_) => vec![],
            Built::Ring(_, t) => vec![t],
            Built::Scaling(p) => p.trees().collect(),
            Built::SymNorm(s) => s.trees().collect(),
        }
    }
}

fn build_index(
    cfg: &RunConfig,
    norm: &NormSpec,
    points: &PointSet,
    embedding: Option<Arc<EmbeddingSpec>>,
) -> Result<(Built, f64, Option<usize>, String)> {
    let r = cfg.r;
    Ok(match cfg.index {
        IndexKind::Exact => (Built::Exact(NormOracle::new(norm.clone())), r, None, "exact".into()),
        IndexKind::RingTree => {
            let o = NormOracle::new(norm.clone());
            let t = RingTree::build(points, &o, cfg.tree_params(r))?;
            let th = (1.0 + cfg.cluster_factor) * r;
            (Built::Ring(o, t), th, None, "ring_tree".into())
        }
        IndexKind::Scaling => {
            let pc = ScalingPipelineConfig {
                params: cfg.randmap()?,
                reps: cfg.reps,
                epsilon: cfg.epsilon,
                tree: cfg.tree_params(r),
            };
            let p = match norm.kind() {
                NormKind::TopK { k } if norm.scale() == 1.0 => {
                    ScalingPipeline::topk(points.clone(), *k, &pc)?
                }
                NormKind::Orlicz { g } if norm.scale() == 1.0 => {
                    ScalingPipeline::orlicz(points.clone(), g.clone(), &pc)?
                }
                _ => ScalingPipeline::symmetric(points.clone(), norm.clone(), cfg.beta, &pc)?,
            };
            let th = p.threshold();
            (Built::Scaling(p), th, None, format!("scaling({})", norm.label()))
        }
        IndexKind::SymnormDirect | IndexKind::SymnormNested => {
            let opts = EnumerationOptions {
                dual_tol: cfg.dual_tol,
                ..EnumerationOptions::default()
            };
            let p = cfg.level_params()?;
            let spec = match embedding {
                Some(e) => {
                    if e.norm() != norm || e.params() != &p || e.dual_tol() != cfg.dual_tol {
                        return Err(Error::Config(
                            "embedding file does not match the configured norm and levels".into(),
                        ));
                    }
                    e
                }
                None => Arc::new(build_embedding(norm, &p, &opts)?),
            };
            let rows = spec.rows();
            let mode = if cfg.index == IndexKind::SymnormDirect {
                SymNormMode::Direct
            } else {
                SymNormMode::Nested
            };
            let accept = cfg.accept_factor.unwrap_or(cfg.separation);
            let idx = SymNormIndex::build(
                points.clone(),
                spec,
                mode,
                accept,
                cfg.mu,
                cfg.reps,
                cfg.epsilon,
                cfg.tree_params(r),
            )?;
            let th = idx.threshold();
            let label = format!("symnorm_{mode:?}({})", norm.label()).to_lowercase();
            (Built::SymNorm(idx), th, Some(rows), label)
        }
    })
}

/// Mean and percentile bootstrap interval of `values`.
pub fn bootstrap_summary(values: &[f64], resamples: usize, seed: u64) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if resamples == 0 {
        return Some(Summary {
            count: n,
            mean,
            ci_low: mean,
            ci_high: mean,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Some(Summary {
        count: n,
        mean,
        ci_low: at(0.025),
        ci_high: at(0.975),
    })
}

/// Generates the workload described by `cfg`.
pub fn workload_for(cfg: &RunConfig) -> Result<Workload> {
    cfg.validate()?;
    let norm = cfg.norm_spec()?;
    gen_workload(&norm, cfg.n, cfg.queries, cfg.r, cfg.separation, cfg.seed)
}

/// Runs a bench on a freshly generated workload.
pub fn run_bench(cfg: &RunConfig) -> Result<BenchOutcome> {
    let w = workload_for(cfg)?;
    run_bench_on(cfg, &w)
}

/// Builds the configured index over `w.points` and answers every query.
pub fn run_bench_on(cfg: &RunConfig, w: &Workload) -> Result<BenchOutcome> {
    run_bench_with(cfg, w, None)
}

/// As [`run_bench_on`], reusing a prebuilt embedding for the symmetric-norm indexes.
pub fn run_bench_with(
    cfg: &RunConfig,
    w: &Workload,
    embedding: Option<Arc<EmbeddingSpec>>,
) -> Result<BenchOutcome> {
    cfg.validate()?;
    let norm = cfg.norm_spec()?;
    let oracle = NormOracle::new(norm.clone());
    let nq = w.planted.len();
    let built = if w.points.is_empty() {
        None
    } else {
        Some(build_index(cfg, &norm, &w.points, embedding)?)
    };

    let rows: Vec<QueryRow> = match &built {
        None => Vec::new(),
        Some((index, threshold, _, _)) => (0..nq)
            .into_par_iter()
            .map(|j| {
                let q = w.queries.row(j);
                let rep = index.query(&w.points, q)?;
                let exact = exact_scan(&w.points, &oracle, q)?;
                let ex_d = exact.distance.unwrap_or(0.0);
                let ratio = rep.distance.map(|dist| {
                    if ex_d == 0.0 {
                        if dist == 0.0 {
                            1.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        dist / ex_d
                    }
                });
                Ok(QueryRow {
                    query: j,
                    planted: w.planted[j],
                    candidate: rep.candidate,
                    distance: rep.distance,
                    exact: exact.candidate.unwrap_or(0),
                    exact_distance: ex_d,
                    recall: rep.distance.is_some_and(|dist| dist <= *threshold) as u8,
                    ratio,
                    distance_evals: rep.distance_evals,
                    nodes_visited: rep.nodes_visited,
                    repetitions: rep.repetitions,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let mut build = BuildSummary::default();
    let (label, threshold, distortion) = match &built {
        None => ("none".to_string(), cfg.r, None),
        Some((index, threshold, net, label)) => {
            for t in index.trees() {
                let s: &BuildStats = t.stats();
                build.trees += 1;
                build.stored_points += s.stored_points;
                build.distance_evals += s.distance_evals;
                build.fallback_leaves += s.fallback_leaves;
                build.max_depth = build.max_depth.max(s.depth);
            }
            build.net_size = *net;
            let distortion = match index {
                Built::SymNorm(s) => sampled_distortion(s.embedded(), &oracle, w),
                _ => None,
            };
            (label.clone(), *threshold, distortion)
        }
    };

    let seed = derive_seed(cfg.seed, 4);
    let col = |f: &dyn Fn(&QueryRow) -> Option<f64>| -> Vec<f64> { rows.iter().filter_map(f).collect() };
    let recall_v = col(&|r| Some(r.recall as f64));
    let ratio_v = col(&|r| r.ratio);
    let evals_v = col(&|r| Some(r.distance_evals as f64));
    let nodes_v = col(&|r| Some(r.nodes_visited as f64));
    let recall = bootstrap_summary(&recall_v, cfg.bootstrap, derive_seed(seed, 1));
    let ratio = bootstrap_summary(&ratio_v, cfg.bootstrap, derive_seed(seed, 2));

    let mut assertions = Vec::new();
    let min_ratio = ratio_v.iter().copied().fold(f64::INFINITY, f64::min);
    assertions.push(AssertionResult {
        name: "ratio_at_least_one".into(),
        passed: ratio_v.is_empty() || min_ratio >= 1.0 - 1e-9,
        value: if ratio_v.is_empty() { 1.0 } else { min_ratio },
        bound: 1.0 - 1e-9,
    });
    if matches!(cfg.index, IndexKind::Scaling | IndexKind::SymnormDirect | IndexKind::SymnormNested) {
        let worst = rows.iter().filter_map(|r| r.distance).fold(0.0, f64::max);
        assertions.push(AssertionResult {
            name: "accepted_within_threshold".into(),
            passed: worst <= threshold,
            value: worst,
            bound: threshold,
        });
    }
    if let (Some(b), Some(s)) = (cfg.assertions.min_recall, recall) {
        assertions.push(AssertionResult {
            name: "min_recall".into(),
            passed: s.mean >= b,
            value: s.mean,
            bound: b,
        });
    }
    if let (Some(b), Some(s)) = (cfg.assertions.max_mean_ratio, ratio) {
        assertions.push(AssertionResult {
            name: "max_mean_ratio".into(),
            passed: s.mean <= b,
            value: s.mean,
            bound: b,
        });
    }
    let passed = assertions.iter().all(|a| a.passed);
    let report = BenchReport {
        schema_version: REPORT_VERSION,
        config: cfg.clone(),
        index: label,
        threshold,
        build,
        queries: nq,
        recall,
        ratio,
        distance_evals: bootstrap_summary(&evals_v, cfg.bootstrap, derive_seed(seed, 3)),
        nodes_visited: bootstrap_summary(&nodes_v, cfg.bootstrap, derive_seed(seed, 4)),
        distortion,
        assertions,
        passed,
    };
    Ok(BenchOutcome { rows, report })
}

/// Embedded over true distance on query-to-point pairs.
fn sampled_distortion<E: DistanceOracle>(
    embedded: &E,
    truth: &NormOracle,
    w: &Workload,
) -> Option<Distortion> {
    let n = w.points.len();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut pairs = 0;
    for (j, q) in w.queries.rows().enumerate() {
        for i in [w.planted[j], (j * 7919 + 13) % n] {
            let t = truth.distance(q, w.points.row(i));
            if t > 0.0 {
                let e = embedded.distance(q, w.points.row(i));
                lo = lo.min(e / t);
                hi = hi.max(e / t);
                pairs += 1;
            }
        }
    }
    (pairs > 0).then_some(Distortion {
        pairs,
        min: lo,
        max: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig {
            version: 1,
            n: 60,
            d: 6,
            queries: 10,
            bootstrap: 200,
            ..RunConfig::default()
        }
    }

    #[test]
    fn exact_baseline_is_perfect() {
        let out = run_bench(&base()).unwrap();
        let rep = &out.report;
        assert!(rep.passed);
        assert_eq!(rep.recall.unwrap().mean, 1.0);
        assert_eq!(rep.ratio.unwrap().mean, 1.0);
        assert_eq!(out.rows.len(), 10);
    }

    #[test]
    fn empty_query_set_is_vacuous() {
        let cfg = RunConfig {
            queries: 0,
            ..base()
        };
        let out = run_bench(&cfg).unwrap();
        assert!(out.report.passed);
        assert!(out.rows.is_empty());
        assert!(out.report.recall.is_none());
        assert!(out.csv().unwrap().starts_with("query,"));
    }

    #[test]
    fn outputs_are_reproducible() {
        let cfg = RunConfig {
            index: IndexKind::RingTree,
            ..base()
        };
        let a = run_bench(&cfg).unwrap();
        let b = run_bench(&cfg).unwrap();
        assert_eq!(a.csv().unwrap(), b.csv().unwrap());
        assert_eq!(a.json(), b.json());
    }

    #[test]
    fn config_schema_is_enforced() {
        let ok = "version = 1\nn = 10\nd = 2\nqueries = 1\n[norm]\nkind = \"top_k\"\nk = 1\n";
        let cfg = RunConfig::from_toml(ok).unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert!(matches!(RunConfig::from_toml("n = 10\n"), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::from_toml("version = 1\nbogus = 3\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_toml("version = 1\nd = 2\n[norm]\nkind = \"top_k\"\nk = 3\n"),
            Err(Error::Config(_))
        ));
    }
}
