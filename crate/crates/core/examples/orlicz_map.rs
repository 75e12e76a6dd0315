//! Random coordinate scalings into l_inf: how often a unit vector stays in
//! the unit ball and how often a long vector leaves the ball of radius D.

use symann::randmap::{sample_scalings, RandMapParams};
use symann::vecnorm::{GFunction, NormSpec};

fn main() -> symann::Result<()> {
    let d = 16;
    let g = GFunction::huber(1.0)?;
    let norm = NormSpec::orlicz(d, g.clone())?;
    let params = RandMapParams::new(0.3, 4.0, 3.0, 11)?;
    let raw: Vec<f64> = (0..d).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let nx = norm.eval(&raw)?;
    let unit: Vec<f64> = raw.iter().map(|v| v / nx).collect();
    let far: Vec<f64> = unit.iter().map(|v| v * 1.05 * params.far_factor()).collect();

    let trials = 10_000;
    let (mut near_in, mut far_out) = (0, 0);
    for t in 0..trials {
        let u = sample_scalings(&g, &params, d, t)?;
        near_in += u.apply(&unit)?.iter().all(|v| v.abs() <= 1.0) as u32;
        far_out += u.apply(&far)?.iter().any(|v| v.abs() > params.d_factor) as u32;
    }
    println!("Pr[unit vector stays inside] = {:.4} (mu = {})", near_in as f64 / trials as f64, params.mu);
    println!(
        "Pr[far vector leaves]        = {:.4} (1 - mu^alpha = {:.4})",
        far_out as f64 / trials as f64,
        1.0 - params.mu.powf(params.alpha)
    );
    Ok(())
}
