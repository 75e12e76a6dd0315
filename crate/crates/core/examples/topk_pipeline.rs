//! Top-k norm search through repeated random scalings into l_inf.

use symann::annindex::{RingTreeParams, ScalingPipeline, ScalingPipelineConfig};
use symann::bench::gen_workload;
use symann::randmap::RandMapParams;
use symann::vecnorm::NormSpec;

fn main() -> symann::Result<()> {
    let (n, d, k) = (1000, 32, 4);
    let params = RandMapParams::new(0.3, 3.0, 4.0, 9)?;
    let w = gen_workload(&NormSpec::top_k(d, k)?, n, 100, 1.0, params.far_factor(), 3)?;
    let cfg = ScalingPipelineConfig {
        params,
        reps: None,
        epsilon: 0.3,
        tree: RingTreeParams {
            cluster_factor: 2.0,
            ..RingTreeParams::new(1.0, 0.5)
        },
    };
    let index = ScalingPipeline::topk(w.points.clone(), k, &cfg)?;
    println!("repetitions {}, acceptance threshold {}", index.repetitions(), index.threshold());
    let mut found = 0;
    for (j, q) in w.queries.rows().enumerate() {
        let rep = index.query(q)?;
        if let Some(dist) = rep.distance {
            assert!(dist <= index.threshold());
            found += (rep.candidate == Some(w.planted[j])) as u32;
        }
    }
    println!("planted neighbor returned for {found}/100 queries");
    Ok(())
}
