use std::sync::Arc;

use rayon::prelude::*;

use super::oracle::{EmbeddedOracle, NormOracle, ProductCombine, ProductOracle};
use super::ring::{RingTree, RingTreeParams};
use super::{DistanceOracle, IndexReport, PointSet};
use crate::error::{invalid, Error, Result};
use crate::netgen::EmbeddingSpec;
use crate::randmap::{
    product_l1_scalings, sample_scalings_with_mass, symmetric_g, topk_g, RandMapParams,
    ScalingVector,
};
use crate::rng::derive_seed;
use crate::vecnorm::{GFunction, NormSpec};

fn check_query(points: &PointSet, q: &[f64]) -> Result<()> {
    if q.len() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            found: q.len(),
        });
    }
    Ok(())
}

fn default_reps(n: usize, epsilon: f64) -> usize {
    ((n as f64).powf(epsilon).ceil() as usize).max(1)
}

fn rep_tree(tree: &RingTreeParams, rep: usize) -> RingTreeParams {
    RingTreeParams {
        seed: derive_seed(tree.seed, rep as u64 + 1),
        ..*tree
    }
}

/// Keeps the smallest accepted id across repetitions.
fn accept(best: &mut Option<(usize, f64)>, id: usize, dist: f64, threshold: f64) {
    if dist <= threshold && best.is_none_or(|b| id < b.0) {
        *best = Some((id, dist));
    }
}

/// Configuration of a [`ScalingPipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPipelineConfig {
    pub params: RandMapParams,
    /// Repetitions; `None` means `ceil(n^epsilon)`.
    pub reps: Option<usize>,
    pub epsilon: f64,
    /// Parameters of the inner `l_inf` trees; `tree.r` is the query radius.
    pub tree: RingTreeParams,
}

/// Repeated random scalings into `l_inf`, each with its own ring tree.
///
/// A candidate from any repetition is accepted when its true distance is at
/// most `threshold`; among accepted candidates the smallest id is returned.
#[derive(Debug, Clone)]
pub struct ScalingPipeline {
    points: PointSet,
    source: NormOracle,
    threshold: f64,
    reps: Vec<(ScalingVector, PointSet, RingTree)>,
}

impl ScalingPipeline {
    /// Generic form: loss `g` normalized by `mass`, acceptance at `threshold`.
    pub fn build(
        points: PointSet,
        source: NormSpec,
        g: &GFunction,
        mass: f64,
        threshold: f64,
        cfg: &ScalingPipelineConfig,
    ) -> Result<Self> {
        Self::build_scaled(points, source, g, mass, 1.0, threshold, cfg)
    }

    #[allow(clippy::too_many_arguments)]
    fn build_scaled(
        points: PointSet,
        source: NormSpec,
        g: &GFunction,
        mass: f64,
        input_scale: f64,
        threshold: f64,
        cfg: &ScalingPipelineConfig,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if source.dim() != points.dim() {
            return Err(Error::DimensionMismatch {
                expected: points.dim(),
                found: source.dim(),
            });
        }
        cfg.tree.validate()?;
        let reps = cfg.reps.unwrap_or_else(|| default_reps(points.len(), cfg.epsilon));
        if reps == 0 {
            return Err(invalid("need at least one repetition"));
        }
        let d = points.dim();
        let linf = NormOracle::new(NormSpec::linf(d));
        let built: Vec<Result<(ScalingVector, PointSet, RingTree)>> = (0..reps)
            .into_par_iter()
            .map(|i| {
                let raw = sample_scalings_with_mass(g, &cfg.params, d, i as u64, mass)?;
                let u = ScalingVector::new(raw.divisors().iter().map(|v| v / input_scale).collect())?;
                let images = points.map_rows(d, |x| u.apply(x))?;
                let tree = RingTree::build(&images, &linf, rep_tree(&cfg.tree, i))?;
                Ok((u, images, tree))
            })
            .collect();
        Ok(Self {
            points,
            source: NormOracle::new(source),
            threshold,
            reps: built.into_iter().collect::<Result<_>>()?,
        })
    }

    /// Top-k norm index with the step loss and acceptance at `alpha D r`.
    pub fn topk(points: PointSet, k: usize, cfg: &ScalingPipelineConfig) -> Result<Self> {
        let d = points.dim();
        let g = topk_g(k, d)?;
        let threshold = cfg.params.far_factor() * cfg.tree.r;
        Self::build(points, NormSpec::top_k(d, k)?, &g, 1.0, threshold, cfg)
    }

    /// Orlicz norm index with acceptance at `alpha D r`.
    pub fn orlicz(points: PointSet, g: GFunction, cfg: &ScalingPipelineConfig) -> Result<Self> {
        let d = points.dim();
        let threshold = cfg.params.far_factor() * cfg.tree.r;
        let norm = NormSpec::orlicz(d, g.clone())?;
        Self::build(points, norm, &g, 1.0, threshold, cfg)
    }

    /// Arbitrary symmetric norm through its level-table loss.
    ///
    /// The loss is normalized by `2 log_beta d`, inputs are rescaled so a
    /// basis vector has norm 1, and candidates are accepted up to
    /// `alpha D * 7 log_beta d * r`.
    pub fn symmetric(
        points: PointSet,
        norm: NormSpec,
        beta: f64,
        cfg: &ScalingPipelineConfig,
    ) -> Result<Self> {
        let spec = symmetric_g(&norm, beta, cfg.params.alpha)?;
        if spec.is_degenerate() {
            return Err(Error::DegenerateLevelTable(norm.dim()));
        }
        let bound = spec.bound();
        let threshold = cfg.params.far_factor() * 3.5 * bound * cfg.tree.r;
        let g = spec.to_gfunction();
        Self::build_scaled(points, norm, &g, bound, spec.normalization, threshold, cfg)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn repetitions(&self) -> usize {
        self.reps.len()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn trees(&self) -> impl Iterator<Item = &RingTree> {
        self.reps.iter().map(|r| &r.2)
    }

    pub fn query(&self, q: &[f64]) -> Result<IndexReport> {
        check_query(&self.points, q)?;
        let d = self.points.dim();
        let linf = NormOracle::new(NormSpec::linf(d));
        let mut out = IndexReport::default();
        let mut best = None;
        for (u, images, tree) in &self.reps {
            let fq = u.apply(q)?;
            let rep = tree.query(images, &linf, &fq);
            out.distance_evals += rep.distance_evals;
            out.nodes_visited += rep.nodes_visited;
            out.repetitions += 1;
            if let Some(id) = rep.candidate {
                out.distance_evals += 1;
                let dist = self.source.distance(q, self.points.row(id));
                accept(&mut best, id, dist, self.threshold);
            }
        }
        if let Some((id, dist)) = best {
            out.candidate = Some(id);
            out.distance = Some(dist);
        }
        Ok(out)
    }
}

/// Ring tree directly over a max-product distance.
#[derive(Debug, Clone)]
pub struct MaxProductIndex {
    points: PointSet,
    oracle: ProductOracle,
    tree: RingTree,
}

impl MaxProductIndex {
    pub fn build(points: PointSet, oracle: ProductOracle, tree: RingTreeParams) -> Result<Self> {
        if oracle.dim() > points.dim() {
            return Err(Error::DimensionMismatch {
                expected: oracle.dim(),
                found: points.dim(),
            });
        }
        let oracle = oracle.with_combine(ProductCombine::Max);
        let tree = RingTree::build(&points, &oracle, tree)?;
        Ok(Self {
            points,
            oracle,
            tree,
        })
    }

    pub fn oracle(&self) -> &ProductOracle {
        &self.oracle
    }

    pub fn tree(&self) -> &RingTree {
        &self.tree
    }

    pub fn query(&self, q: &[f64]) -> Result<IndexReport> {
        check_query(&self.points, q)?;
        Ok(self.tree.query(&self.points, &self.oracle, q))
    }
}

/// Sum-product index: per repetition, factor distances are divided by random
/// scalings and the maximum replaces the sum.
#[derive(Debug, Clone)]
pub struct SumProductIndex {
    points: PointSet,
    oracle: ProductOracle,
    threshold: f64,
    reps: Vec<(ProductOracle, RingTree)>,
}

impl SumProductIndex {
    pub fn build(
        points: PointSet,
        oracle: ProductOracle,
        params: &RandMapParams,
        reps: usize,
        tree: RingTreeParams,
    ) -> Result<Self> {
        params.validate()?;
        if reps == 0 {
            return Err(invalid("need at least one repetition"));
        }
        let sum = oracle.with_combine(ProductCombine::Sum);
        let m = sum.factors().len();
        let built: Vec<Result<(ProductOracle, RingTree)>> = (0..reps)
            .into_par_iter()
            .map(|i| {
                let u = product_l1_scalings(params.mu, m, params.seed, i as u64)?;
                let scaled = sum
                    .with_combine(ProductCombine::Max)
                    .with_divisors(u.divisors().to_vec())?;
                let t = RingTree::build(&points, &scaled, rep_tree(&tree, i))?;
                Ok((scaled, t))
            })
            .collect();
        Ok(Self {
            threshold: params.far_factor() * tree.r,
            points,
            oracle: sum,
            reps: built.into_iter().collect::<Result<_>>()?,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn query(&self, q: &[f64]) -> Result<IndexReport> {
        check_query(&self.points, q)?;
        let mut out = IndexReport::default();
        let mut best = None;
        for (scaled, tree) in &self.reps {
            let rep = tree.query(&self.points, scaled, q);
            out.distance_evals += rep.distance_evals;
            out.nodes_visited += rep.nodes_visited;
            out.repetitions += 1;
            if let Some(id) = rep.candidate {
                out.distance_evals += 1;
                let dist = self.oracle.distance(q, self.points.row(id));
                accept(&mut best, id, dist, self.threshold);
            }
        }
        if let Some((id, dist)) = best {
            out.candidate = Some(id);
            out.distance = Some(dist);
        }
        Ok(out)
    }
}

/// How the embedded norm is indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymNormMode {
    /// One ring tree over the embedded estimate itself.
    Direct,
    /// Per repetition, the weighted top-k sums are replaced by a max of
    /// randomly scaled top-k norms, giving one ring tree per repetition.
    Nested,
}

/// Index for an arbitrary symmetric norm through its top-k embedding.
#[derive(Debug, Clone)]
pub struct SymNormIndex {
    points: PointSet,
    source: NormOracle,
    mode: SymNormMode,
    threshold: f64,
    embedded: EmbeddedOracle,
    reps: Vec<(Option<NormOracle>, RingTree)>,
}

impl SymNormIndex {
    /// `tree.r` is the query radius in the source norm; the trees use
    /// `beta^2 (1 + dual_tol) r`, the embedded image of that radius.
    /// Candidates are accepted when their true distance is at most
    /// `accept_factor * r`.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        points: PointSet,
        spec: Arc<EmbeddingSpec>,
        mode: SymNormMode,
        accept_factor: f64,
        mu: f64,
        reps: Option<usize>,
        epsilon: f64,
        tree: RingTreeParams,
    ) -> Result<Self> {
        if spec.dim() != points.dim() {
            return Err(Error::DimensionMismatch {
                expected: points.dim(),
                found: spec.dim(),
            });
        }
        if !(accept_factor >= 1.0) {
            return Err(invalid("accept factor must be at least 1"));
        }
        let beta = spec.params().beta;
        let inner = RingTreeParams {
            r: beta * beta * (1.0 + spec.dual_tol()) * tree.r,
            ..tree
        };
        let embedded = EmbeddedOracle::new(spec.clone());
        let d = points.dim();
        let built = match mode {
            SymNormMode::Direct => {
                let t = RingTree::build(&points, &embedded, inner)?;
                vec![(None, t)]
            }
            SymNormMode::Nested => {
                let count = reps.unwrap_or_else(|| default_reps(points.len(), epsilon));
                if count == 0 {
                    return Err(invalid("need at least one repetition"));
                }
                // largest coefficient of each top-k norm over the net rows
                let mut cmax = vec![0.0f64; d];
                for i in 0..spec.rows() {
                    for (c, v) in cmax.iter_mut().zip(spec.coeffs(i)) {
                        *c = c.max(*v);
                    }
                }
                let results: Vec<Result<(Option<NormOracle>, RingTree)>> = (0..count)
                    .into_par_iter()
                    .map(|i| {
                        let u = product_l1_scalings(mu, d, tree.seed, i as u64)?;
                        let w: Vec<f64> =
                            cmax.iter().zip(u.divisors()).map(|(c, u)| c / u).collect();
                        let o = NormOracle::new(NormSpec::max_of_scaled_top_k(d, w)?);
                        let t = RingTree::build(&points, &o, rep_tree(&inner, i))?;
                        Ok((Some(o), t))
                    })
                    .collect();
                results.into_iter().collect::<Result<Vec<_>>>()?
            }
        };
        Ok(Self {
            threshold: accept_factor * tree.r,
            source: NormOracle::new(spec.norm().clone()),
            points,
            mode,
            embedded,
            reps: built,
        })
    }

    pub fn mode(&self) -> SymNormMode {
        self.mode
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn embedded(&self) -> &EmbeddedOracle {
        &self.embedded
    }

    pub fn trees(&self) -> impl Iterator<Item = &RingTree> {
        self.reps.iter().map(|r| &r.1)
    }

    pub fn query(&self, q: &[f64]) -> Result<IndexReport> {
        check_query(&self.points, q)?;
        let mut out = IndexReport::default();
        let mut best = None;
        for (oracle, tree) in &self.reps {
            let rep = match oracle {
                Some(o) => tree.query(&self.points, o, q),
                None => tree.query(&self.points, &self.embedded, q),
            };
            out.distance_evals += rep.distance_evals;
            out.nodes_visited += rep.nodes_visited;
            out.repetitions += 1;
            if let Some(id) = rep.candidate {
                out.distance_evals += 1;
                let dist = self.source.distance(q, self.points.row(id));
                accept(&mut best, id, dist, self.threshold);
            }
        }
        if let Some((id, dist)) = best {
            out.candidate = Some(id);
            out.distance = Some(dist);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(r: f64) -> ScalingPipelineConfig {
        let mut tree = RingTreeParams::new(r, 0.5);
        tree.cluster_factor = 1.0;
        ScalingPipelineConfig {
            params: RandMapParams::new(0.3, 3.0, 2.0, 5).unwrap(),
            reps: None,
            epsilon: 0.5,
            tree,
        }
    }

    #[test]
    fn identical_points_are_found() {
        let pts = PointSet::from_rows(&vec![vec![1.0, -1.0, 0.5]; 10]).unwrap();
        let idx = ScalingPipeline::topk(pts, 2, &cfg(1.0)).unwrap();
        let rep = idx.query(&[1.0, -1.0, 0.5]).unwrap();
        assert!(rep.candidate.is_some());
        assert_eq!(rep.distance, Some(0.0));
    }

    #[test]
    fn accepted_candidates_respect_threshold() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 10.0, 0.0, 0.0, 1.0]).collect();
        let pts = PointSet::from_rows(&rows).unwrap();
        let idx = ScalingPipeline::topk(pts, 2, &cfg(1.0)).unwrap();
        for q in 0..60 {
            let rep = idx.query(&[q as f64 * 8.5, 0.3, 0.0, 1.0]).unwrap();
            if let Some(dist) = rep.distance {
                assert!(dist <= idx.threshold());
            }
        }
    }

    #[test]
    fn symmetric_pipeline_rejects_degenerate_tables() {
        let pts = PointSet::from_rows(&[vec![0.0; 8]]).unwrap();
        let err = ScalingPipeline::symmetric(pts, NormSpec::linf(8), 1.5, &cfg(1.0));
        assert!(matches!(err, Err(Error::DegenerateLevelTable(8))));
    }
}
