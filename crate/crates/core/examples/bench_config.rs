//! A bench run driven by a TOML config, printing the JSON aggregate.

use symann::bench::{run_bench, RunConfig};

const CONFIG: &str = r#"
version = 1
name = "topk-ring"
seed = 42
n = 500
d = 16
queries = 50
separation = 3.0
index = "ring_tree"
bootstrap = 500

[norm]
kind = "top_k"
k = 4

[assertions]
min_recall = 0.9
"#;

fn main() -> symann::Result<()> {
    let cfg = RunConfig::from_toml(CONFIG)?;
    let out = run_bench(&cfg)?;
    print!("{}", out.json());
    println!("first rows:\n{}", out.csv()?.lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
