//! Ring-separator tree over l2: build, query, and audit the routing rule.

use symann::annindex::{exact_scan, NormOracle, PointSet, RingTree, RingTreeParams};
use symann::bench::gen_workload;
use symann::vecnorm::NormSpec;

fn main() -> symann::Result<()> {
    let norm = NormSpec::l2(8);
    let w = gen_workload(&norm, 1500, 50, 1.0, 10.0, 5)?;
    let oracle = NormOracle::new(norm);
    let tree = RingTree::build(&w.points, &oracle, RingTreeParams::new(1.0, 0.5))?;
    println!("{:?}", tree.stats());
    println!("space bound 2 n^1.5 = {:.0}", tree.space_bound());

    let mut hits = 0;
    let mut evals = 0;
    for (j, q) in w.queries.rows().enumerate() {
        let rep = tree.query(&w.points, &oracle, q);
        evals += rep.distance_evals;
        hits += (rep.candidate == Some(w.planted[j])) as u32;
        assert_eq!(exact_scan(&w.points, &oracle, q)?.candidate, Some(w.planted[j]));
    }
    println!("planted found {hits}/50, mean distance evaluations {}", evals / 50);

    let probe = PointSet::new(8, w.queries.as_flat()[..8 * 20].to_vec())?;
    println!("{:?}", tree.audit_routing(&w.points, &oracle, &probe));
    Ok(())
}
