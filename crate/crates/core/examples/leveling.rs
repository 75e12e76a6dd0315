//! Level decomposition of a vector and the rounding maps used by the net.

use symann::leveling::{cut_small, level_vector, levels, rounded, simplify, LevelParams};

fn main() -> symann::Result<()> {
    let d = 8;
    let p = LevelParams::with_default_tau(1.5, d)?;
    let x = [1.0, 0.9, 0.6, 0.6, 0.3, 0.05, 0.01, 0.0];
    println!("beta {} tau {:.4} levels {} window {:.3}", p.beta, p.tau, p.num_levels(), p.window());
    println!("allowed counts {:?}", p.allowed_counts());
    println!("profile   {}", levels(&x, &p)?);
    println!("cut       {:?}", cut_small(&x, &p));
    println!("level vec {:.4?}", level_vector(&x, &p)?);
    let z = rounded(&x, &p)?;
    println!("rounded   {z:.4?}");
    println!("simplified {:.4?}", simplify(&z, &p)?);
    Ok(())
}
