//! Indexes over products of top-k norms: max-combined and sum-combined.

use symann::annindex::{
    exact_scan, DistanceOracle, MaxProductIndex, PointSet, ProductCombine, ProductOracle,
    RingTreeParams, SumProductIndex,
};
use symann::randmap::RandMapParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> symann::Result<()> {
    let factors = [(1, 1.0), (2, 0.5), (4, 0.25)];
    let block = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rows: Vec<Vec<f64>> = (0..800)
        .map(|_| (0..block * factors.len()).map(|_| rng.random_range(-30.0..30.0)).collect())
        .collect();
    let points = PointSet::from_rows(&rows)?;
    let q: Vec<f64> = rows[17].iter().map(|v| v + 0.05).collect();

    let max = ProductOracle::blocks(block, &factors, ProductCombine::Max)?;
    let idx = MaxProductIndex::build(points.clone(), max.clone(), RingTreeParams::new(1.0, 0.5))?;
    let rep = idx.query(&q)?;
    println!("max-product: {:?} at {:.4} (exact {:?})", rep.candidate, rep.distance.unwrap_or(f64::NAN), exact_scan(&points, &max, &q)?.candidate);

    let sum = max.with_combine(ProductCombine::Sum);
    let params = RandMapParams::new(0.3, 2.0, 3.0, 4)?;
    let idx = SumProductIndex::build(points.clone(), sum.clone(), &params, 8, RingTreeParams::new(1.0, 0.5))?;
    let rep = idx.query(&q)?;
    println!(
        "sum-product: {:?}, true sum distance {:.4}, threshold {}",
        rep.candidate,
        rep.candidate.map_or(f64::NAN, |i| sum.distance(&q, points.row(i))),
        idx.threshold()
    );
    Ok(())
}
