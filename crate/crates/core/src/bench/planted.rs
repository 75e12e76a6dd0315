use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::annindex::{DistanceOracle, NormOracle, PointSet};
use crate::error::{invalid, Error, Result};
use crate::rng::derive_seed;
use crate::vecnorm::NormSpec;

/// Attempts allowed per query before giving up.
const ATTEMPTS_PER_QUERY: usize = 2000;

/// One query with a single point within `r` and every other point at least
/// `separation * r` away.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    pub points: PointSet,
    pub query: Vec<f64>,
    pub planted: usize,
    pub r: f64,
    pub separation: f64,
}

/// Many planted queries sharing one point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub points: PointSet,
    pub queries: PointSet,
    pub planted: Vec<usize>,
    pub r: f64,
    pub separation: f64,
}

/// Sidecar describing a stored workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadMeta {
    pub version: u32,
    pub norm: NormSpec,
    pub n: usize,
    pub queries: usize,
    pub r: f64,
    pub separation: f64,
    pub seed: u64,
    pub planted: Vec<usize>,
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Generates `n` points and `queries` planted queries under `norm`.
///
/// Background points are isotropic Gaussians scaled so the median pairwise
/// distance is about `3 * separation * r`. Each query gets a fresh point at
/// distance in `[0.2 r, r]`; a query is redrawn until every other point is at
/// least `separation * r` away from it. Point ids are shuffled at the end.
pub fn gen_workload(
    norm: &NormSpec,
    n: usize,
    queries: usize,
    r: f64,
    separation: f64,
    seed: u64,
) -> Result<Workload> {
    if !(separation > 1.0 && separation.is_finite()) {
        return Err(invalid(format!("separation must exceed 1, got {separation}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    if queries > n {
        return Err(invalid("need at least one point per query"));
    }
    let d = norm.dim();
    let oracle = NormOracle::new(norm.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x706c_616e));

    let mut pair_d: Vec<f64> = (0..64)
        .map(|_| {
            let a = gaussian(&mut rng, d);
            let b = gaussian(&mut rng, d);
            oracle.distance(&a, &b)
        })
        .collect();
    pair_d.sort_by(f64::total_cmp);
    let sigma = 3.0 * separation * r / pair_d[pair_d.len() / 2];
    let far = separation * r;

    let mut rows: Vec<Vec<f64>> = (0..n - queries)
        .map(|_| gaussian(&mut rng, d).into_iter().map(|v| v * sigma).collect())
        .collect();
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(queries);
    let mut planted_rows = Vec::with_capacity(queries);
    for j in 0..queries {
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > ATTEMPTS_PER_QUERY {
                return Err(Error::RejectionBudget {
                    attempts: ATTEMPTS_PER_QUERY,
                    reason: format!(
                        "query {j}: no position at least {far} from all {} points",
                        rows.len()
                    ),
                });
            }
            let q: Vec<f64> = gaussian(&mut rng, d).into_iter().map(|v| v * sigma).collect();
            let dir = gaussian(&mut rng, d);
            let len = oracle.distance(&dir, &vec![0.0; d]);
            if len == 0.0 {
                continue;
            }
            let want = r * (0.2 + 0.8 * rng.random::<f64>());
            let p: Vec<f64> = q.iter().zip(&dir).map(|(a, b)| a + b * want / len).collect();
            if oracle.distance(&q, &p) > r {
                continue;
            }
            let clear_q = rows.iter().all(|x| oracle.distance(&q, x) >= far);
            let clear_p = qs.iter().all(|prev| oracle.distance(prev, &p) >= far);
            if clear_q && clear_p {
                rows.push(p);
                planted_rows.push(rows.len() - 1);
                qs.push(q);
                break;
            }
        }
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    // perm[new] = old
    let mut new_of = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        new_of[old] = new;
    }
    let shuffled: Vec<Vec<f64>> = perm.iter().map(|&old| rows[old].clone()).collect();
    let points = if n == 0 {
        PointSet::new(d, Vec::new())?
    } else {
        PointSet::from_rows(&shuffled)?
    };
    let planted: Vec<usize> = planted_rows.iter().map(|&old| new_of[old]).collect();
    let queries = PointSet::new(d, qs.concat())?;
    let w = Workload {
        points,
        queries,
        planted,
        r,
        separation,
    };
    w.self_check(norm)?;
    Ok(w)
}

/// A single planted query among `n` points in dimension `d`.
pub fn gen_planted(
    norm: &NormSpec,
    n: usize,
    d: usize,
    r: f64,
    separation: f64,
    seed: u64,
) -> Result<PlantedInstance> {
    if norm.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: norm.dim(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let w = gen_workload(norm, n, 1, r, separation, seed)?;
    Ok(PlantedInstance {
        query: w.queries.row(0).to_vec(),
        planted: w.planted[0],
        points: w.points,
        r,
        separation,
    })
}

impl Workload {
    /// Checks that each query has exactly one point within
    /// `separation * r * (1 - 1e-9)`, namely its planted point, at distance at most `r`.
    pub fn self_check(&self, norm: &NormSpec) -> Result<()> {
        let oracle = NormOracle::new(norm.clone());
        let limit = self.separation * self.r * (1.0 - 1e-9);
        for (j, q) in self.queries.rows().enumerate() {
            let near: Vec<usize> = self
                .points
                .rows()
                .enumerate()
                .filter(|(_, p)| oracle.distance(q, p) < limit)
                .map(|(i, _)| i)
                .collect();
            let p = self.planted[j];
            if near != [p] || oracle.distance(q, self.points.row(p)) > self.r {
                return Err(invalid(format!("planted query {j} fails its self-check")));
            }
        }
        Ok(())
    }
}

impl PlantedInstance {
    pub fn self_check(&self, norm: &NormSpec) -> Result<()> {
        Workload {
            points: self.points.clone(),
            queries: PointSet::new(self.query.len(), self.query.clone())?,
            planted: vec![self.planted],
            r: self.r,
            separation: self.separation,
        }
        .self_check(norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annindex::exact_scan;

    #[test]
    fn small_l2_instance_passes_self_check() {
        let norm = NormSpec::l2(8);
        let inst = gen_planted(&norm, 10, 8, 1.0, 4.0, 1).unwrap();
        inst.self_check(&norm).unwrap();
        let again = gen_planted(&norm, 10, 8, 1.0, 4.0, 1).unwrap();
        assert_eq!(inst, again);
        let o = NormOracle::new(norm);
        assert_eq!(exact_scan(&inst.points, &o, &inst.query).unwrap().candidate, Some(inst.planted));
    }

    #[test]
    fn bad_separation_is_rejected() {
        assert!(gen_planted(&NormSpec::l2(4), 5, 4, 1.0, 1.0, 0).is_err());
    }
}
