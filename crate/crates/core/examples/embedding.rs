//! Builds the top-k embedding of a symmetric norm, stores it, and compares
//! the embedded estimate with the norm on random vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symann::leveling::LevelParams;
use symann::netgen::{build_embedding, EmbeddingSpec, EnumerationOptions};
use symann::vecnorm::NormSpec;

fn main() -> symann::Result<()> {
    let d = 10;
    let norm = NormSpec::minimal_sqrt(d);
    let p = LevelParams::with_default_tau(1.5, d)?;
    let spec = build_embedding(&norm, &p, &EnumerationOptions::default())?;
    println!(
        "net rows {}, frontier rows {}, dual evaluations {}",
        spec.rows(),
        spec.frontier_len(),
        spec.stats().nodes
    );

    let path = std::env::temp_dir().join("symann-example.emb");
    spec.save(&path)?;
    let loaded = EmbeddingSpec::load(&path)?;
    assert_eq!(loaded, spec);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..2000 {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ratio = loaded.eval(&x)? / norm.eval(&x)?;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    println!("embedded / true on 2000 vectors: [{lo:.4}, {hi:.4}]");
    Ok(())
}
