use std::sync::Arc;

use symann::annindex::{
    exact_scan, DistanceOracle, MaxProductIndex, NormOracle, PointSet, ProductCombine,
    ProductOracle, RingTreeParams, SumProductIndex, SymNormIndex, SymNormMode,
};
use symann::bench::{gen_planted, gen_workload, run_bench, IndexKind, RunConfig};
use symann::leveling::LevelParams;
use symann::netgen::{build_embedding, EmbeddingSpec, EnumerationOptions};
use symann::randmap::RandMapParams;
use symann::vecnorm::NormSpec;

#[test]
fn exact_scan_finds_every_planted_point() {
    let norms = [NormSpec::l2(8), NormSpec::l1(8), NormSpec::top_k(8, 3).unwrap()];
    for seed in 0..100u64 {
        let norm = &norms[seed as usize % norms.len()];
        let inst = gen_planted(norm, 200, 8, 1.0, 3.0, seed).unwrap();
        let oracle = NormOracle::new(norm.clone());
        let rep = exact_scan(&inst.points, &oracle, &inst.query).unwrap();
        assert_eq!(rep.candidate, Some(inst.planted), "seed {seed}");
        assert!(rep.distance.unwrap() <= inst.r);
    }
}

#[test]
fn planted_instances_are_reproducible() {
    let norm = NormSpec::minimal_sqrt(6);
    let a = gen_workload(&norm, 300, 30, 0.5, 4.0, 77).unwrap();
    let b = gen_workload(&norm, 300, 30, 0.5, 4.0, 77).unwrap();
    let mut ba = Vec::new();
    let mut bb = Vec::new();
    a.points.write_to(&mut ba).unwrap();
    b.points.write_to(&mut bb).unwrap();
    assert_eq!(ba, bb);
    assert_eq!(a, b);
    assert_ne!(a, gen_workload(&norm, 300, 30, 0.5, 4.0, 78).unwrap());
}

fn product_points(blocks: usize, block: usize) -> (Vec<Vec<f64>>, PointSet) {
    let rows: Vec<Vec<f64>> = (0..600)
        .map(|i| {
            (0..blocks * block)
                .map(|j| ((i * 7919 + j * 104_729) % 1000) as f64 / 10.0)
                .collect()
        })
        .collect();
    let points = PointSet::from_rows(&rows).unwrap();
    (rows, points)
}

#[test]
fn max_product_returns_the_close_point() {
    let (rows, points) = product_points(3, 4);
    let oracle = ProductOracle::blocks(4, &[(1, 1.0), (2, 1.0), (4, 0.5)], ProductCombine::Max).unwrap();
    let idx = MaxProductIndex::build(points.clone(), oracle.clone(), RingTreeParams::new(1.0, 0.5)).unwrap();
    for target in [3usize, 150, 599] {
        let q: Vec<f64> = rows[target].iter().map(|v| v + 0.1).collect();
        let rep = idx.query(&q).unwrap();
        let dist = oracle.distance(&q, points.row(rep.candidate.unwrap()));
        assert!(dist <= 1.0 + 1e-9, "target {target}: {dist}");
    }
}

#[test]
fn sum_product_stays_within_threshold() {
    let (rows, points) = product_points(3, 4);
    let oracle = ProductOracle::blocks(4, &[(1, 1.0), (2, 1.0), (4, 0.5)], ProductCombine::Sum).unwrap();
    let params = RandMapParams::new(0.3, 2.0, 3.0, 5).unwrap();
    let idx = SumProductIndex::build(points.clone(), oracle.clone(), &params, 10, RingTreeParams::new(1.0, 0.5)).unwrap();
    let mut found = 0;
    for target in (0..600).step_by(60) {
        let q: Vec<f64> = rows[target].iter().map(|v| v + 0.02).collect();
        let rep = idx.query(&q).unwrap();
        if let Some(c) = rep.candidate {
            assert!(oracle.distance(&q, points.row(c)) <= idx.threshold() * (1.0 + 1e-9));
            found += 1;
        }
    }
    assert!(found >= 8, "found {found} of 10");
}

#[test]
fn nested_mode_answers_planted_queries() {
    let d = 8;
    let norm = NormSpec::minimal_sqrt(d);
    let p = LevelParams::with_default_tau(1.5, d).unwrap();
    let spec = Arc::new(build_embedding(&norm, &p, &EnumerationOptions::default()).unwrap());
    let w = gen_workload(&norm, 500, 40, 1.0, 4.0, 9).unwrap();
    let idx = SymNormIndex::build(
        w.points.clone(),
        spec,
        SymNormMode::Nested,
        4.0,
        0.3,
        Some(8),
        0.5,
        RingTreeParams::new(1.0, 0.5),
    )
    .unwrap();
    let oracle = NormOracle::new(norm);
    let mut found = 0;
    for (j, q) in w.queries.rows().enumerate() {
        let rep = idx.query(q).unwrap();
        if let Some(c) = rep.candidate {
            assert!(oracle.distance(q, w.points.row(c)) <= idx.threshold() * (1.0 + 1e-9));
            found += (c == w.planted[j]) as usize;
        }
    }
    assert!(found >= 30, "nested mode found {found} of 40");
}

#[test]
fn embedding_round_trips_through_disk() {
    let norm = NormSpec::top_k(6, 2).unwrap();
    let p = LevelParams::with_default_tau(1.5, 6).unwrap();
    let spec = build_embedding(&norm, &p, &EnumerationOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.bin");
    spec.save(&path).unwrap();
    let back = EmbeddingSpec::load(&path).unwrap();
    assert_eq!(back, spec);
    let x = [0.3, -2.0, 1.0, 0.0, 0.5, 0.25];
    assert_eq!(back.eval(&x).unwrap(), spec.eval(&x).unwrap());
}

#[test]
fn bench_ratio_never_below_one() {
    let cfg = RunConfig {
        version: 1,
        n: 400,
        d: 8,
        queries: 40,
        separation: 3.0,
        norm: symann::vecnorm::NormKind::Lp { p: 1.0 },
        index: IndexKind::RingTree,
        bootstrap: 200,
        ..RunConfig::default()
    };
    let out = run_bench(&cfg).unwrap();
    assert!(out.rows.iter().filter_map(|r| r.ratio).all(|r| r >= 1.0 - 1e-9));
    assert!(out.report.passed);
}
