//! Search under an arbitrary symmetric norm through its top-k embedding,
//! in both the direct and the nested mode.

use std::sync::Arc;

use symann::annindex::{RingTreeParams, SymNormIndex, SymNormMode};
use symann::bench::gen_workload;
use symann::leveling::LevelParams;
use symann::netgen::{build_embedding, EnumerationOptions};
use symann::vecnorm::NormSpec;

fn main() -> symann::Result<()> {
    let d = 10;
    let norm = NormSpec::minimal_sqrt(d);
    let spec = Arc::new(build_embedding(
        &norm,
        &LevelParams::with_default_tau(1.5, d)?,
        &EnumerationOptions::default(),
    )?);
    let w = gen_workload(&norm, 1000, 100, 1.0, 4.0, 21)?;
    for mode in [SymNormMode::Direct, SymNormMode::Nested] {
        let tree = RingTreeParams {
            seed: 7,
            ..RingTreeParams::new(1.0, 0.5)
        };
        let idx = SymNormIndex::build(w.points.clone(), spec.clone(), mode, 4.0, 0.3, Some(8), 0.5, tree)?;
        let mut found = 0;
        let mut evals = 0;
        for (j, q) in w.queries.rows().enumerate() {
            let rep = idx.query(q)?;
            evals += rep.distance_evals;
            found += (rep.candidate == Some(w.planted[j])) as u32;
        }
        println!("{mode:?}: planted returned {found}/100, mean distance evaluations {}", evals / 100);
    }
    Ok(())
}
