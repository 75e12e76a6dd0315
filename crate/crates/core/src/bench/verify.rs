use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lowerbound::lowerbound_demo;
use super::planted::gen_workload;
use super::run::{run_bench_on, IndexKind, RunConfig};
use crate::annindex::{NormOracle, PointSet, RingTree, RingTreeParams};
use crate::error::{Error, Result};
use crate::leveling::{materialize, simplify_counts, LevelParams};
use crate::netgen::{
    coeffs_from_net_vector, fold_rounded_dual_set, frontier_pairing, net_size_report,
    rounded_dual_frontier, EnumerationOptions, Selection,
};
use crate::randmap::{sample_scalings, symmetric_g, topk_g, RandMapParams};
use crate::rng::derive_seed;
use crate::vecnorm::{sorted_abs, top_k_norm, GFunction, NormKind, NormSpec};

/// Seed used when none is given.
pub const REFERENCE_SEED: u64 = 0x5eed_2024;

/// Names accepted by [`run_suite`], in the order of a full run.
pub const SUITES: [&str; 9] = [
    "topk-identity",
    "sandwich",
    "net-pruning",
    "net-size",
    "scaling-monte-carlo",
    "level-loss",
    "ring-soundness",
    "space-recurrence",
    "pipelines",
];

/// One measured quantity and its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= bound,
            value,
            bound,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= bound,
            value,
            bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteResult {
    fn new(suite: &str, checks: Vec<Check>) -> Self {
        Self {
            suite: suite.into(),
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Runs one named suite.
pub fn run_suite(name: &str, seed: u64) -> Result<SuiteResult> {
    let checks = match name {
        "topk-identity" => topk_identity(seed, 10_000)?,
        "sandwich" => sandwich(seed, 12, 500)?,
        "net-pruning" => net_pruning(12)?,
        "net-size" => net_size(&[8, 12, 16])?,
        "scaling-monte-carlo" => scaling_monte_carlo(seed, 20_000)?,
        "level-loss" => level_loss(seed, 256, 100_000)?,
        "ring-soundness" => ring_soundness(seed, 100)?,
        "space-recurrence" => space_recurrence(seed, 2000, 20)?,
        "pipelines" => pipelines(seed)?,
        _ => {
            return Err(Error::Config(format!(
                "unknown suite {name:?}; expected one of {}",
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteResult::new(name, checks))
}

/// Runs the named suites, or all of them when `names` is empty.
pub fn verify(names: &[String], seed: u64) -> Result<VerifyReport> {
    let list: Vec<String> = if names.is_empty() {
        SUITES.iter().map(|s| s.to_string()).collect()
    } else {
        names.to_vec()
    };
    for n in &list {
        if !SUITES.contains(&n.as_str()) {
            return Err(Error::Config(format!("unknown suite {n:?}")));
        }
    }
    let suites = list
        .iter()
        .map(|n| run_suite(n, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport {
        schema_version: 1,
        seed,
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}

/// Random vector with a varied profile: Gaussian, sparse, or heavy-tailed.
pub fn random_profile(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let shape = rng.random_range(0..4);
    let mut x: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    match shape {
        0 => {}
        1 => {
            let keep = rng.random_range(1..=d);
            for v in x.iter_mut().skip(keep) {
                *v = 0.0;
            }
        }
        2 => {
            let p = rng.random_range(1.5..5.0);
            for v in x.iter_mut() {
                *v = v.signum() * v.abs().powf(p);
            }
        }
        _ => {
            let scale = rng.random_range(0.0..3.0);
            for v in x.iter_mut() {
                *v *= (-scale * rng.random::<f64>() * 4.0).exp();
            }
        }
    }
    if x.iter().all(|v| *v == 0.0) {
        x[0] = 1.0;
    }
    x
}

/// `sum_k c_k top_k(x)` against `<x*, y>` for random non-increasing `y`.
pub fn topk_identity(seed: u64, trials: usize) -> Result<Vec<Check>> {
    let worst = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let d = rng.random_range(1..=64);
            let x = random_profile(&mut rng, d);
            let mut y: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 10.0).collect();
            if rng.random_bool(0.3) {
                for v in y.iter_mut() {
                    *v = (*v * 2.0).floor();
                }
            }
            y.sort_by(|a, b| b.total_cmp(a));
            let c = coeffs_from_net_vector(&y)?;
            let mut lhs = 0.0;
            for (k, ck) in c.iter().enumerate() {
                if *ck != 0.0 {
                    lhs += ck * top_k_norm(&x, k + 1)?;
                }
            }
            let s = sorted_abs(&x);
            let rhs: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            let scale = s.iter().zip(&y).map(|(a, b)| (a * b).abs()).sum::<f64>();
            Ok(if scale == 0.0 { (lhs - rhs).abs() } else { (lhs - rhs).abs() / scale })
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(vec![Check::at_most("max_relative_error", worst, 1e-9)])
}

/// The six norms used by the rounded-dual suites.
pub fn sandwich_norms(d: usize) -> Result<Vec<NormSpec>> {
    Ok(vec![
        NormSpec::l1(d),
        NormSpec::l2(d),
        NormSpec::linf(d),
        NormSpec::top_k(d, 3.min(d))?,
        NormSpec::k_functional(d, 2.0)?,
        NormSpec::minimal_sqrt(d),
    ])
}

/// `||x|| - tau d <= max_z <x*, z> <= beta^2 (1 + dual_tol) ||x||` over the
/// whole rounded dual set, on random unit vectors.
pub fn sandwich(seed: u64, d: usize, samples: usize) -> Result<Vec<Check>> {
    let p = LevelParams::with_default_tau(1.5, d)?;
    let opts = EnumerationOptions::default();
    let upper_factor = p.beta * p.beta * (1.0 + opts.dual_tol);
    let mut checks = Vec::new();
    for (ni, norm) in sandwich_norms(d)?.into_iter().enumerate() {
        let rows = rounded_dual_frontier(&norm, &p, &opts)?;
        let mut lo_slack = f64::INFINITY;
        let mut hi_ratio: f64 = 0.0;
        for i in 0..samples {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, (ni * samples + i) as u64));
            let x = random_profile(&mut rng, d);
            let nx = norm.eval(&x)?;
            let s: Vec<f64> = sorted_abs(&x).iter().map(|v| v / nx).collect();
            let m = frontier_pairing(&rows, &s);
            lo_slack = lo_slack.min(m - (1.0 - p.tau * d as f64));
            hi_ratio = hi_ratio.max(m);
        }
        let label = norm.label();
        checks.push(Check::at_least(format!("{label}: lower slack"), lo_slack, -1e-12));
        checks.push(Check::at_most(
            format!("{label}: upper ratio"),
            hi_ratio,
            upper_factor * (1.0 + 1e-9),
        ));
    }
    Ok(checks)
}

/// `||S(z) - z|| <= 2 (beta - 1) ||z||` for every member of the rounded dual set.
pub fn net_pruning(d: usize) -> Result<Vec<Check>> {
    let p = LevelParams::with_default_tau(1.5, d)?;
    let opts = EnumerationOptions::default();
    let factor = 2.0 * (p.beta - 1.0);
    let mut checks = Vec::new();
    for norm in sandwich_norms(d)? {
        let ((violations, worst, seen), _) = fold_rounded_dual_set(
            &norm,
            &p,
            &opts,
            Selection::All,
            || (0u64, 0.0f64, 0u64),
            |acc, counts, _| {
                let z = materialize(counts, &p);
                let s = materialize(&simplify_counts(counts, &p), &p);
                let mut diff: Vec<f64> = z.iter().zip(&s).map(|(a, b)| (a - b).abs()).collect();
                diff.sort_by(|a, b| b.total_cmp(a));
                let nd = norm.eval_sorted(&diff);
                let nz = norm.eval_sorted(&z);
                acc.2 += 1;
                if nd > 0.0 {
                    let ratio = nd / nz;
                    acc.1 = acc.1.max(ratio);
                    if nd > factor * nz * (1.0 + 1e-12) {
                        acc.0 += 1;
                    }
                }
            },
            |a, b| (a.0 + b.0, a.1.max(b.1), a.2 + b.2),
        )?;
        let label = norm.label();
        checks.push(Check::at_most(format!("{label}: violations of {seen}"), violations as f64, 0.0));
        checks.push(Check::at_most(format!("{label}: worst ratio"), worst, factor * (1.0 + 1e-12)));
    }
    Ok(checks)
}

/// Net size `t <= d^10` for l2 and the minimal norm of `sqrt(k)`.
pub fn net_size(dims: &[usize]) -> Result<Vec<Check>> {
    let opts = EnumerationOptions::default();
    let mut checks = Vec::new();
    let families: [(&str, fn(usize) -> Result<NormSpec>); 2] = [
        ("l2", |d| Ok(NormSpec::l2(d))),
        ("minimal_sqrt", |d| Ok(NormSpec::minimal_sqrt(d))),
    ];
    for (name, f) in families {
        for row in net_size_report(f, dims, 1.5, &opts, false) {
            let bound = (row.d as f64).powi(10);
            let t = match (&row.net, &row.error) {
                (Some(t), None) => *t as f64,
                _ => f64::INFINITY,
            };
            checks.push(Check::at_most(format!("{name} d={}: net size", row.d), t, bound));
        }
    }
    Ok(checks)
}

/// Empirical near and far probabilities of the scaling maps.
///
/// For `G` in `{t, t^2, huber}`: a unit vector stays in the `l_inf` unit ball
/// with probability at least `mu`, and a vector of norm `1.05 alpha D`
/// leaves the ball of radius `D` with probability at least `1 - mu^alpha`.
/// For the top-4 loss the far bound is `1 - mu^(alpha - 1)`. Each bound is
/// relaxed by three standard deviations of the empirical frequency.
pub fn scaling_monte_carlo(seed: u64, trials: usize) -> Result<Vec<Check>> {
    let d = 16;
    let (mu, alpha, dd) = (0.3, 3.0, 4.0);
    let params = RandMapParams::new(mu, dd, alpha, derive_seed(seed, 31))?;
    let cases: Vec<(String, GFunction, NormSpec, f64)> = vec![
        ("g=t".into(), GFunction::power(1.0)?, NormSpec::orlicz(d, GFunction::power(1.0)?)?, alpha),
        ("g=t^2".into(), GFunction::power(2.0)?, NormSpec::orlicz(d, GFunction::power(2.0)?)?, alpha),
        ("g=huber".into(), GFunction::huber(1.0)?, NormSpec::orlicz(d, GFunction::huber(1.0)?)?, alpha),
        ("top-4".into(), topk_g(4, d)?, NormSpec::top_k(d, 4)?, alpha - 1.0),
    ];
    let sigma = |p: f64| (p * (1.0 - p) / trials as f64).sqrt();
    let mut checks = Vec::new();
    for (ci, (name, g, norm, exponent)) in cases.into_iter().enumerate() {
        let (near, far) = (0..trials)
            .into_par_iter()
            .map(|i| -> Result<(u32, u32)> {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, (ci * trials + i) as u64));
                let x = random_profile(&mut rng, d);
                let nx = norm.eval(&x)?;
                let unit: Vec<f64> = x.iter().map(|v| v / nx).collect();
                let u = sample_scalings(&g, &params, d, 2 * i as u64)?;
                let inside = u.apply(&unit)?.iter().all(|v| v.abs() <= 1.0);
                let big: Vec<f64> = unit.iter().map(|v| v * 1.05 * alpha * dd).collect();
                let u2 = sample_scalings(&g, &params, d, 2 * i as u64 + 1)?;
                let outside = u2.apply(&big)?.iter().any(|v| v.abs() > dd);
                Ok((inside as u32, outside as u32))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold((0u64, 0u64), |a, b| (a.0 + b.0 as u64, a.1 + b.1 as u64));
        let pn = near as f64 / trials as f64;
        let pf = far as f64 / trials as f64;
        let far_bound = 1.0 - mu.powf(exponent);
        checks.push(Check::at_least(format!("{name}: near"), pn, mu - 3.0 * sigma(mu)));
        checks.push(Check::at_least(
            format!("{name}: far"),
            pf,
            far_bound - 3.0 * sigma(far_bound),
        ));
    }
    Ok(checks)
}

/// The norms used by the level-loss suite.
pub fn catalog_norms(d: usize) -> Result<Vec<NormSpec>> {
    Ok(vec![
        NormSpec::l1(d),
        NormSpec::l2(d),
        NormSpec::lp(d, 3.0)?,
        NormSpec::linf(d),
        NormSpec::top_k(d, 8.min(d))?,
        NormSpec::k_functional(d, 4.0)?,
        NormSpec::minimal_sqrt(d),
        NormSpec::maximal(d, crate::vecnorm::sqrt_sequence(d))?,
        NormSpec::orlicz(d, GFunction::huber(1.0)?)?,
    ])
}

/// Both implications of the level loss, on random vectors per catalog norm,
/// plus the single-loss distortion proxy.
///
/// With `bound = 2 log_beta d`: `||x|| <= 1` gives `sum G(|x_i|) <= bound`,
/// and `||x|| > 7 alpha log_beta d` gives `sum G(|x_i|) >= alpha bound`.
pub fn level_loss(seed: u64, d: usize, samples: usize) -> Result<Vec<Check>> {
    let (beta, alpha) = (1.5, 2.0);
    let mut checks = Vec::new();
    for (ni, norm) in catalog_norms(d)?.into_iter().enumerate() {
        let spec = symmetric_g(&norm, beta, alpha)?;
        let (normed, _) = norm.normalized()?;
        let bound = spec.bound();
        let big = alpha * 3.5 * bound;
        let bad = (0..samples)
            .into_par_iter()
            .map(|i| -> Result<u64> {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(seed ^ 0x1e7e1, (ni * samples + i) as u64));
                let x = random_profile(&mut rng, d);
                let nx = normed.eval(&x)?;
                let small = i % 2 == 0;
                let target = if small {
                    rng.random_range(0.01..=1.0)
                } else {
                    big * (1.0 + 1e-9 + rng.random::<f64>())
                };
                let y: Vec<f64> = x.iter().map(|v| v * target / nx).collect();
                let ny = normed.eval(&y)?;
                let mass = spec.mass(&y);
                Ok(if small {
                    (ny <= 1.0 && mass > bound * (1.0 + 1e-12)) as u64
                } else {
                    (ny > big && mass < alpha * bound * (1.0 - 1e-12)) as u64
                })
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum::<u64>();
        checks.push(Check::at_most(
            format!("{}: counterexamples of {samples}", norm.label()),
            bad as f64,
            0.0,
        ));
    }
    let dims = [64, 256, 1024, 4096];
    let sqrt_rows = lowerbound_demo(|d| Ok(NormSpec::minimal_sqrt(d)), &dims, beta)?;
    let l2_rows = lowerbound_demo(|d| Ok(NormSpec::l2(d)), &dims, beta)?;
    let min_step = sqrt_rows
        .windows(2)
        .map(|w| w[1].proxy - w[0].proxy)
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("minimal_sqrt proxy: smallest increase", min_step, f64::MIN_POSITIVE));
    let (lo, hi) = l2_rows
        .iter()
        .fold((f64::INFINITY, 0.0f64), |a, r| (a.0.min(r.proxy), a.1.max(r.proxy)));
    checks.push(Check::at_most("l2 proxy: spread across dims", hi / lo, 2.0));
    Ok(checks)
}

fn ring_instance(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    let clusters = rng.random_range(1..=8);
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..d).map(|_| rng.random_range(-20.0..20.0)).collect())
        .collect();
    (0..n)
        .map(|_| {
            let c = &centers[rng.random_range(0..clusters)];
            let spread = if rng.random_bool(0.2) { 8.0 } else { 1.5 };
            c.iter()
                .map(|v| v + spread * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

/// Routing audit on random clustered instances; every near point must reach
/// the leaf the query is routed to, and the returned point must be within
/// `(1 + cluster_factor) r` whenever a point is within `r`.
pub fn ring_soundness(seed: u64, instances: usize) -> Result<Vec<Check>> {
    let results = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<(u64, u64, u64, u64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed ^ 0x51a6, i as u64));
            let n = rng.random_range(20..=500);
            let d = rng.random_range(1..=8);
            let norm = match i % 3 {
                0 => NormSpec::l2(d),
                1 => NormSpec::l1(d),
                _ => NormSpec::linf(d),
            };
            let oracle = NormOracle::new(norm);
            let rows = ring_instance(&mut rng, n, d);
            let points = PointSet::from_rows(&rows)?;
            let r = rng.random_range(0.3..3.0);
            let params = RingTreeParams {
                seed: derive_seed(seed, i as u64),
                leaf_cap: rng.random_range(1..=8),
                ..RingTreeParams::new(r, rng.random_range(0.2..0.9))
            };
            let tree = RingTree::build(&points, &oracle, params)?;
            let qrows: Vec<Vec<f64>> = (0..n.min(100))
                .map(|j| {
                    let base = &rows[(j * 37) % n];
                    base.iter()
                        .map(|v| v + r * 0.5 * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            let queries = PointSet::from_rows(&qrows)?;
            let audit = tree.audit_routing(&points, &oracle, &queries);
            let mut bad_answers = 0;
            for q in queries.rows() {
                let exact = crate::annindex::exact_scan(&points, &oracle, q)?;
                if exact.distance.unwrap_or(f64::INFINITY) <= r {
                    let rep = tree.query(&points, &oracle, q);
                    let limit = (1.0 + params.cluster_factor) * r * (1.0 + 1e-9);
                    if rep.distance.is_none_or(|dist| dist > limit) {
                        bad_answers += 1;
                    }
                }
            }
            Ok((audit.checks, audit.violations, audit.lost, bad_answers))
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = results
        .iter()
        .fold((0, 0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3));
    Ok(vec![
        Check::at_least("routing checks performed", sum.0 as f64, 1.0),
        Check::at_most("routing violations", sum.1 as f64, 0.0),
        Check::at_most("near points lost", sum.2 as f64, 0.0),
        Check::at_most("answers beyond (1 + c) r", sum.3 as f64, 0.0),
    ])
}

/// Total leaf size against `2 n^{1 + epsilon}` at `epsilon = 0.5`.
pub fn space_recurrence(seed: u64, n: usize, instances: usize) -> Result<Vec<Check>> {
    let worst = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed ^ 0x5ace, i as u64));
            let d = rng.random_range(2..=16);
            let rows = ring_instance(&mut rng, n, d);
            let points = PointSet::from_rows(&rows)?;
            let oracle = NormOracle::new(if i % 2 == 0 { NormSpec::l2(d) } else { NormSpec::l1(d) });
            let r = rng.random_range(0.3..3.0);
            let params = RingTreeParams {
                seed: derive_seed(seed, 1000 + i as u64),
                ..RingTreeParams::new(r, 0.5)
            };
            let tree = RingTree::build(&points, &oracle, params)?;
            Ok(tree.stats().stored_points as f64 / tree.space_bound())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(vec![Check::at_most("max stored / (2 n^1.5)", worst, 1.0)])
}

/// End-to-end planted runs: the Huber Orlicz scaling pipeline and the
/// direct symmetric-norm index for l1 and the minimal norm of `sqrt(k)`.
pub fn pipelines(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let orlicz = huber_pipeline_config(seed);
    let w = gen_workload(
        &orlicz.norm_spec()?,
        orlicz.n,
        orlicz.queries,
        orlicz.r,
        orlicz.separation,
        orlicz.seed,
    )?;
    let out = run_bench_on(&orlicz, &w)?;
    let rep = &out.report;
    checks.push(Check::at_least(
        "huber scaling: recall",
        rep.recall.map_or(0.0, |s| s.mean),
        0.55,
    ));
    let worst = out.rows.iter().filter_map(|r| r.distance).fold(0.0, f64::max);
    let bound = orlicz.alpha * orlicz.d_factor * orlicz.r;
    checks.push(Check::at_most("huber scaling: worst accepted distance", worst, bound));

    for kind in [NormKind::Lp { p: 1.0 }, NormKind::Minimal { a: crate::vecnorm::sqrt_sequence(12) }] {
        let cfg = symnorm_direct_config(seed, kind);
        let norm = cfg.norm_spec()?;
        let w = gen_workload(&norm, cfg.n, cfg.queries, cfg.r, cfg.separation, cfg.seed)?;
        let out = run_bench_on(&cfg, &w)?;
        let rep = &out.report;
        let label = norm.label();
        checks.push(Check::at_least(
            format!("{label} direct: recall"),
            rep.recall.map_or(0.0, |s| s.mean),
            0.9,
        ));
        let worst = out.rows.iter().filter_map(|r| r.distance).fold(0.0, f64::max);
        checks.push(Check::at_most(format!("{label} direct: worst distance"), worst, 4.0 * cfg.r));
        if let Some(dist) = rep.distortion {
            checks.push(Check::at_least(format!("{label} direct: distortion min (reported)"), dist.min, 0.0));
            checks.push(Check::at_least(format!("{label} direct: distortion max (reported)"), dist.max, 0.0));
        }
    }
    Ok(checks)
}

/// Huber Orlicz norm, `n = 1000`, `d = 32`, `ceil(n^0.25)` repetitions,
/// `mu = n^-0.25`, `alpha = 8`, `D = 3`, separation `alpha D`.
pub fn huber_pipeline_config(seed: u64) -> RunConfig {
    let n = 1000usize;
    let eps = 0.25;
    RunConfig {
        version: 1,
        name: "huber-scaling".into(),
        seed: derive_seed(seed, 8),
        n,
        d: 32,
        queries: 200,
        r: 1.0,
        separation: 24.0,
        norm: NormKind::Orlicz {
            g: GFunction::Huber { delta: 1.0 },
        },
        index: IndexKind::Scaling,
        epsilon: 0.5,
        mu: (n as f64).powf(-eps),
        d_factor: 3.0,
        alpha: 8.0,
        reps: Some((n as f64).powf(eps).ceil() as usize),
        cluster_factor: 2.0,
        ..RunConfig::default()
    }
}

/// Direct symmetric-norm index at `d = 12`, `n = 2000`, separation 4.
pub fn symnorm_direct_config(seed: u64, norm: NormKind) -> RunConfig {
    RunConfig {
        version: 1,
        name: "symnorm-direct".into(),
        seed: derive_seed(seed, 10),
        n: 2000,
        d: 12,
        queries: 200,
        r: 1.0,
        separation: 4.0,
        norm,
        index: IndexKind::SymnormDirect,
        beta: 1.5,
        epsilon: 0.5,
        accept_factor: Some(4.0),
        ..RunConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_a_config_error() {
        assert!(matches!(run_suite("nope", 1), Err(Error::Config(_))));
        assert!(matches!(verify(&["nope".into()], 1), Err(Error::Config(_))));
    }

    #[test]
    fn small_identity_run_passes() {
        let checks = topk_identity(3, 200).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }
}
