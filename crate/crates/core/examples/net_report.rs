//! Net sizes of the rounded dual set for a few norms and dimensions.

use symann::netgen::{net_size_report, EnumerationOptions};
use symann::vecnorm::NormSpec;

fn main() {
    let opts = EnumerationOptions::default();
    let dims = [4, 8, 12];
    for (name, rows) in [
        ("l1", net_size_report(|d| Ok(NormSpec::l1(d)), &dims, 1.5, &opts, true)),
        ("l2", net_size_report(|d| Ok(NormSpec::l2(d)), &dims, 1.5, &opts, true)),
        ("minimal_sqrt", net_size_report(|d| Ok(NormSpec::minimal_sqrt(d)), &dims, 1.5, &opts, true)),
    ] {
        for r in rows {
            println!(
                "{name:<13} d={:<3} rounded set {:>9} net {:>8}",
                r.d,
                r.candidates.unwrap_or(0),
                r.net.unwrap_or(0)
            );
        }
    }
}
