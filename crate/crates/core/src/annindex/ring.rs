use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DistanceOracle, IndexReport, PointSet};
use crate::error::{invalid, Error, Result};
use crate::rng::derive_seed;

/// Build parameters of a [`RingTree`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingTreeParams {
    /// Query radius; ring annuli have width `2r`.
    pub r: f64,
    /// Space exponent in `(0, 1)`.
    pub epsilon: f64,
    /// Sets of at most this many points become plain leaves.
    pub leaf_cap: usize,
    /// A set within `cluster_factor * r` of one of its points becomes a cluster leaf.
    pub cluster_factor: f64,
    /// Pivots sampled per node.
    pub pivots: usize,
    /// Candidate radii per pivot, taken at distance quantiles.
    pub radii: usize,
    /// Depth limit; `None` derives one from `n` and `epsilon`.
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl RingTreeParams {
    pub fn new(r: f64, epsilon: f64) -> Self {
        Self {
            r,
            epsilon,
            leaf_cap: 8,
            cluster_factor: 0.5,
            pivots: 32,
            radii: 64,
            max_depth: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {}", self.r)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: self.epsilon,
                min: 0.0,
                max: 1.0,
            });
        }
        if self.leaf_cap == 0 || self.pivots == 0 || self.radii == 0 {
            return Err(invalid("leaf_cap, pivots and radii must be positive"));
        }
        if !(self.cluster_factor >= 0.0 && self.cluster_factor.is_finite()) {
            return Err(invalid("cluster factor must be non-negative"));
        }
        Ok(())
    }

    fn depth_cap(&self, n: usize) -> usize {
        self.max_depth.unwrap_or_else(|| {
            let lg = (n.max(2) as f64).log2();
            (8.0 * lg / self.epsilon).ceil() as usize + 16
        })
    }
}

/// A node of the tree.
#[derive(Debug, Clone, PartialEq)]
pub enum RingNode {
    /// Points scanned exhaustively; `fallback` marks sets where no ring qualified.
    Leaf { ids: Vec<u32>, fallback: bool },
    /// All `size` points lie within `radius` of `rep`.
    ClusterLeaf { rep: u32, radius: f64, size: u32 },
    /// `inner` holds the points within `radius + slack` of `pivot`,
    /// `outer` those farther than `radius`.
    Ring {
        pivot: u32,
        radius: f64,
        slack: f64,
        inner: u32,
        outer: u32,
    },
}

/// Counters collected while building.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub rings: u64,
    pub leaves: u64,
    pub cluster_leaves: u64,
    pub fallback_leaves: u64,
    /// Sum of set sizes over all leaves and cluster leaves.
    pub stored_points: u64,
    pub depth: u64,
    pub distance_evals: u64,
}

/// Outcome of [`RingTree::audit_routing`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingAudit {
    /// `(ring node, query, near point)` triples examined.
    pub checks: u64,
    /// Near points missing from the child a query is routed to.
    pub violations: u64,
    /// Near points missing from the leaf a query finally reaches.
    pub lost: u64,
}

/// Ring-separator decision tree over a distance oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct RingTree {
    nodes: Vec<RingNode>,
    params: RingTreeParams,
    stats: BuildStats,
    n: usize,
}

const GUARD: f64 = 1e-9;

fn inner_limit(radius: f64, slack: f64) -> f64 {
    (radius + slack) * (1.0 + GUARD)
}

fn outer_limit(radius: f64) -> f64 {
    radius * (1.0 - GUARD)
}

struct Builder<'a, O: ?Sized> {
    points: &'a PointSet,
    oracle: &'a O,
    params: RingTreeParams,
    depth_cap: usize,
    nodes: Vec<RingNode>,
    stats: BuildStats,
}

struct Split {
    pivot: u32,
    radius: f64,
    inner: Vec<u32>,
    outer: Vec<u32>,
}

impl<O: DistanceOracle + ?Sized> Builder<'_, O> {
    fn dist(&mut self, a: u32, b: u32) -> f64 {
        self.stats.distance_evals += 1;
        self.oracle
            .distance(self.points.row(a as usize), self.points.row(b as usize))
    }

    fn leaf(&mut self, ids: Vec<u32>, fallback: bool) -> u32 {
        self.stats.leaves += 1;
        self.stats.fallback_leaves += fallback as u64;
        self.stats.stored_points += ids.len() as u64;
        self.push(RingNode::Leaf { ids, fallback })
    }

    fn push(&mut self, node: RingNode) -> u32 {
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }

    fn build(&mut self, ids: Vec<u32>, depth: usize) -> Result<u32> {
        if depth > self.depth_cap {
            return Err(Error::DepthCapExceeded(self.depth_cap));
        }
        self.stats.depth = self.stats.depth.max(depth as u64);
        let n = ids.len();
        if n <= self.params.leaf_cap {
            return Ok(self.leaf(ids, false));
        }
        let slot = self.nodes.len() as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.params.seed, slot));
        let picks = sample(&mut rng, n, self.params.pivots.min(n));
        let r = self.params.r;
        let slack = 2.0 * r;
        let nf = n as f64;
        // both children must shed at least an epsilon/4 fraction, which keeps
        // the depth within O(log n / epsilon)
        let max_child = n - ((self.params.epsilon / 4.0 * nf).ceil() as usize).max(1);

        let mut best: Option<(usize, usize, Split)> = None;
        for pick in picks.iter() {
            let s = ids[pick];
            let mut dists: Vec<(f64, u32)> = ids.iter().map(|&p| (self.dist(s, p), p)).collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if dists[n - 1].0 <= self.params.cluster_factor * r {
                self.stats.cluster_leaves += 1;
                self.stats.stored_points += n as u64;
                return Ok(self.push(RingNode::ClusterLeaf {
                    rep: s,
                    radius: self.params.cluster_factor * r,
                    size: n as u32,
                }));
            }
            let m = self.params.radii;
            let mut last = f64::NAN;
            for qi in 0..m {
                let idx = if m == 1 { 0 } else { qi * (n - 1) / (m - 1) };
                let radius = dists[idx].0;
                if radius == last {
                    continue;
                }
                last = radius;
                let inner = dists.partition_point(|x| x.0 <= inner_limit(radius, slack));
                let ball = dists.partition_point(|x| x.0 <= outer_limit(radius));
                let outer = n - ball;
                let ok = (inner as f64 / nf).powf(1.0 + self.params.epsilon) < ball as f64 / nf;
                if !ok || inner.max(outer) > max_child {
                    continue;
                }
                let key = (inner.max(outer), inner);
                if best.as_ref().is_none_or(|b| key < (b.0, b.1)) {
                    let mut in_ids: Vec<u32> = dists[..inner].iter().map(|x| x.1).collect();
                    let mut out_ids: Vec<u32> = dists[ball..].iter().map(|x| x.1).collect();
                    in_ids.sort_unstable();
                    out_ids.sort_unstable();
                    best = Some((
                        key.0,
                        key.1,
                        Split {
                            pivot: s,
                            radius,
                            inner: in_ids,
                            outer: out_ids,
                        },
                    ));
                }
            }
        }
        let Some((_, _, split)) = best else {
            return Ok(self.leaf(ids, true));
        };
        drop(ids);
        self.stats.rings += 1;
        let slot = self.push(RingNode::Ring {
            pivot: split.pivot,
            radius: split.radius,
            slack,
            inner: 0,
            outer: 0,
        });
        let inner = self.build(split.inner, depth + 1)?;
        let outer = self.build(split.outer, depth + 1)?;
        if let RingNode::Ring {
            inner: i, outer: o, ..
        } = &mut self.nodes[slot as usize]
        {
            *i = inner;
            *o = outer;
        }
        Ok(slot)
    }
}

impl RingTree {
    /// Builds the tree over all points.
    pub fn build<O: DistanceOracle + ?Sized>(
        points: &PointSet,
        oracle: &O,
        params: RingTreeParams,
    ) -> Result<Self> {
        params.validate()?;
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let n = points.len();
        let mut b = Builder {
            points,
            oracle,
            params,
            depth_cap: params.depth_cap(n),
            nodes: Vec::new(),
            stats: BuildStats::default(),
        };
        b.build((0..n as u32).collect(), 0)?;
        Ok(RingTree {
            nodes: b.nodes,
            params,
            stats: b.stats,
            n,
        })
    }

    pub fn params(&self) -> &RingTreeParams {
        &self.params
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    pub fn nodes(&self) -> &[RingNode] {
        &self.nodes
    }

    pub fn num_points(&self) -> usize {
        self.n
    }

    /// `2 n^{1 + epsilon}`, the allowed total leaf size.
    pub fn space_bound(&self) -> f64 {
        2.0 * (self.n as f64).powf(1.0 + self.params.epsilon)
    }

    /// Descends from the root: at a ring go inside iff `d(q, pivot) <= R + r`;
    /// scan a leaf; return a cluster's representative.
    pub fn query<O: DistanceOracle + ?Sized>(
        &self,
        points: &PointSet,
        oracle: &O,
        q: &[f64],
    ) -> IndexReport {
        let mut rep = IndexReport {
            repetitions: 1,
            ..Default::default()
        };
        let mut node = 0usize;
        loop {
            rep.nodes_visited += 1;
            match &self.nodes[node] {
                RingNode::Ring {
                    pivot,
                    radius,
                    inner,
                    outer,
                    ..
                } => {
                    rep.distance_evals += 1;
                    let dq = oracle.distance(q, points.row(*pivot as usize));
                    node = if dq <= radius + self.params.r {
                        *inner as usize
                    } else {
                        *outer as usize
                    };
                }
                RingNode::Leaf { ids, .. } => {
                    let mut best: Option<(f64, u32)> = None;
                    for &id in ids {
                        rep.distance_evals += 1;
                        let dist = oracle.distance(q, points.row(id as usize));
                        if best.is_none_or(|b| dist < b.0) {
                            best = Some((dist, id));
                        }
                    }
                    if let Some((dist, id)) = best {
                        rep.candidate = Some(id as usize);
                        rep.distance = Some(dist);
                    }
                    return rep;
                }
                RingNode::ClusterLeaf { rep: id, .. } => {
                    rep.distance_evals += 1;
                    rep.candidate = Some(*id as usize);
                    rep.distance = Some(oracle.distance(q, points.row(*id as usize)));
                    return rep;
                }
            }
        }
    }

    /// Point sets of every node, recomputed from the stored splits.
    pub fn node_sets<O: DistanceOracle + ?Sized>(
        &self,
        points: &PointSet,
        oracle: &O,
    ) -> Vec<Vec<u32>> {
        let mut sets = vec![Vec::new(); self.nodes.len()];
        sets[0] = (0..self.n as u32).collect();
        for i in 0..self.nodes.len() {
            if let RingNode::Ring {
                pivot,
                radius,
                slack,
                inner,
                outer,
            } = &self.nodes[i]
            {
                let s = points.row(*pivot as usize);
                let mut in_ids = Vec::new();
                let mut out_ids = Vec::new();
                for &p in &sets[i] {
                    let dist = oracle.distance(s, points.row(p as usize));
                    if dist <= inner_limit(*radius, *slack) {
                        in_ids.push(p);
                    }
                    if dist > outer_limit(*radius) {
                        out_ids.push(p);
                    }
                }
                sets[*inner as usize] = in_ids;
                sets[*outer as usize] = out_ids;
            }
        }
        sets
    }

    /// Checks, for each query, every ring node and every near point
    /// (`d(q, p) <= r`) of that node's set, that the point lies in the child
    /// the query is routed to, and that the final leaf holds all near points.
    pub fn audit_routing<O: DistanceOracle + ?Sized>(
        &self,
        points: &PointSet,
        oracle: &O,
        queries: &PointSet,
    ) -> RoutingAudit {
        let sets = self.node_sets(points, oracle);
        let r = self.params.r;
        let mut audit = RoutingAudit::default();
        for q in queries.rows() {
            let near: Vec<u32> = (0..self.n as u32)
                .filter(|&p| oracle.distance(q, points.row(p as usize)) <= r)
                .collect();
            if near.is_empty() {
                continue;
            }
            for (i, node) in self.nodes.iter().enumerate() {
                if let RingNode::Ring {
                    pivot,
                    radius,
                    inner,
                    outer,
                    ..
                } = node
                {
                    let dq = oracle.distance(q, points.row(*pivot as usize));
                    let child = if dq <= radius + r { *inner } else { *outer };
                    let child_set = &sets[child as usize];
                    for p in near.iter().filter(|p| sets[i].binary_search(p).is_ok()) {
                        audit.checks += 1;
                        if child_set.binary_search(p).is_err() {
                            audit.violations += 1;
                        }
                    }
                }
            }
            // follow the route to the end
            let mut node = 0usize;
            while let RingNode::Ring {
                pivot,
                radius,
                inner,
                outer,
                ..
            } = &self.nodes[node]
            {
                let dq = oracle.distance(q, points.row(*pivot as usize));
                node = if dq <= radius + r { *inner } else { *outer } as usize;
            }
            for p in &near {
                if sets[node].binary_search(p).is_err() {
                    audit.lost += 1;
                }
            }
        }
        audit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annindex::NormOracle;
    use crate::vecnorm::NormSpec;

    #[test]
    fn single_point_is_a_leaf() {
        let pts = PointSet::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let o = NormOracle::new(NormSpec::l2(2));
        let t = RingTree::build(&pts, &o, RingTreeParams::new(1.0, 0.5)).unwrap();
        assert!(matches!(t.nodes()[0], RingNode::Leaf { .. }));
        assert_eq!(t.query(&pts, &o, &[1.0, 2.0]).candidate, Some(0));
    }

    #[test]
    fn two_far_clusters_split_by_a_ring() {
        let mut rows = vec![vec![0.0, 0.0]; 20];
        rows.extend(vec![vec![100.0, 0.0]; 20]);
        let pts = PointSet::from_rows(&rows).unwrap();
        let o = NormOracle::new(NormSpec::l2(2));
        let mut p = RingTreeParams::new(1.0, 0.5);
        p.leaf_cap = 4;
        let t = RingTree::build(&pts, &o, p).unwrap();
        match &t.nodes()[0] {
            RingNode::Ring { radius, inner, outer, .. } => {
                assert!(*radius >= 0.0 && *radius < 100.0);
                let sets = t.node_sets(&pts, &o);
                assert!(sets[*inner as usize].len() < 40);
                assert!(sets[*outer as usize].len() < 40);
            }
            other => panic!("expected a ring, got {other:?}"),
        }
        let rep = t.query(&pts, &o, &[99.5, 0.0]);
        assert!(rep.candidate.unwrap() >= 20);
        assert!(rep.distance.unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn routing_rule_boundary() {
        // a query at distance R + r from the pivot goes inside
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 * 3.0]).collect();
        let pts = PointSet::from_rows(&rows).unwrap();
        let o = NormOracle::new(NormSpec::l1(1));
        let mut p = RingTreeParams::new(1.0, 0.5);
        p.leaf_cap = 2;
        let t = RingTree::build(&pts, &o, p).unwrap();
        let queries = PointSet::from_rows(&(0..120).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let audit = t.audit_routing(&pts, &o, &queries);
        assert!(audit.checks > 0);
        assert_eq!(audit.violations, 0);
        assert_eq!(audit.lost, 0);
        assert!(t.stats().stored_points as f64 <= t.space_bound());
    }
}
