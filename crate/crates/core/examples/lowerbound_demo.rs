//! How well one loss function can stand in for a symmetric norm: the spread
//! of gauge-to-norm ratios grows with d for the minimal norm of sqrt(k) but
//! not for l2.

use symann::bench::lowerbound_demo;
use symann::vecnorm::NormSpec;

fn main() -> symann::Result<()> {
    let dims = [64, 256, 1024, 4096];
    let sqrt = lowerbound_demo(|d| Ok(NormSpec::minimal_sqrt(d)), &dims, 1.5)?;
    let l2 = lowerbound_demo(|d| Ok(NormSpec::l2(d)), &dims, 1.5)?;
    println!("{:>6} {:>14} {:>10}", "d", "minimal_sqrt", "l2");
    for (a, b) in sqrt.iter().zip(&l2) {
        println!("{:>6} {:>14.4} {:>10.4}", a.d, a.proxy, b.proxy);
    }
    Ok(())
}
