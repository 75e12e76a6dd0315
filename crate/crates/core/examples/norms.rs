//! Evaluates the norm catalog on one vector, with duals and majorization.

use symann::vecnorm::{sorted_abs, weakly_majorizes, GFunction, NormSpec};

fn main() -> symann::Result<()> {
    let d = 6;
    let x = [3.0, -1.0, 0.5, 0.0, 2.0, -2.0];
    let norms = vec![
        NormSpec::l1(d),
        NormSpec::l2(d),
        NormSpec::linf(d),
        NormSpec::top_k(d, 2)?,
        NormSpec::k_functional(d, 1.5)?,
        NormSpec::minimal_sqrt(d),
        NormSpec::maximal(d, symann::vecnorm::sqrt_sequence(d))?,
        NormSpec::orlicz(d, GFunction::huber(1.0)?)?,
    ];
    println!("x* = {:?}", sorted_abs(&x));
    println!("{:<18} {:>10} {:>10}", "norm", "||x||", "||x||_*");
    for n in &norms {
        println!("{:<18} {:>10.5} {:>10.5}", n.label(), n.eval(&x)?, n.dual(&x, 1e-6)?);
    }
    let flatter = [2.0, 1.5, 1.5, 1.0, 1.0, 1.0];
    println!("x majorizes {flatter:?}: {}", weakly_majorizes(&x, &flatter)?);
    println!("{}", NormSpec::top_k(d, 2)?.to_toml());
    Ok(())
}
