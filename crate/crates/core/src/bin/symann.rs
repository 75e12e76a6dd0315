use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use symann::annindex::PointSet;
use symann::bench::{
    self, lowerbound_demo, run_bench, run_bench_with, RunConfig, Workload, WorkloadMeta,
    EXIT_FAIL, EXIT_PASS, EXIT_USAGE, REFERENCE_SEED, SUITES,
};
use symann::netgen::{build_embedding, net_size_report, EmbeddingSpec, EnumerationOptions};
use symann::vecnorm::{sqrt_sequence, GFunction, NormKind, NormSpec};
use symann::Error;

#[derive(Parser)]
#[command(name = "symann", version, about = "Near neighbor search for symmetric norms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a planted workload (points.bin, queries.bin, workload.json).
    Gen {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build the embedding of the configured norm and save it.
    Build {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer the queries of a stored workload; prints per-query CSV unless
    /// `--csv` or `--out` names a file.
    Query {
        #[command(flatten)]
        run: RunArgs,
        /// Directory written by `gen`.
        #[arg(long)]
        workload: PathBuf,
        /// Embedding written by `build`, for the symmetric-norm indexes.
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a workload, run it and write the CSV and JSON reports.
    Bench {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run invariant suites (all of them when none is named).
    Verify {
        suites: Vec<String>,
        #[arg(long, default_value_t = REFERENCE_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        list: bool,
    },
    /// Net sizes across dimensions.
    NetReport {
        #[arg(long, default_value = "l2")]
        norm: String,
        #[arg(long, value_delimiter = ',', default_value = "8,12,16")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 1.5)]
        beta: f64,
        #[arg(long, default_value_t = 0.02)]
        dual_tol: f64,
        /// Also count the whole rounded dual set.
        #[arg(long)]
        count_candidates: bool,
    },
    /// Distortion of the best single-loss gauge across dimensions.
    LowerboundDemo {
        #[arg(long, default_value = "minimal-sqrt")]
        norm: String,
        #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 1.5)]
        beta: f64,
    },
}

/// Flags mirroring the run config keys; values in `--config` take precedence.
#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    separation: Option<f64>,
    /// l1, l2, linf, lp:P, topk:K, kfunctional:T, minimal-sqrt, maximal-sqrt, huber:DELTA.
    #[arg(long)]
    norm: Option<String>,
    /// exact, ring_tree, scaling, symnorm_direct, symnorm_nested.
    #[arg(long)]
    index: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    d_factor: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    dual_tol: Option<f64>,
    #[arg(long)]
    leaf_cap: Option<usize>,
    #[arg(long)]
    cluster_factor: Option<f64>,
    #[arg(long)]
    accept_factor: Option<f64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn norm_kind(name: &str, d: usize) -> Result<NormKind, Error> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let num = || -> Result<f64, Error> {
        arg.ok_or_else(|| Error::Config(format!("norm {head} needs a parameter")))?
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("bad norm parameter: {e}")))
    };
    Ok(match head {
        "l1" => NormKind::Lp { p: 1.0 },
        "l2" => NormKind::Lp { p: 2.0 },
        "linf" => NormKind::Lp { p: f64::INFINITY },
        "lp" => NormKind::Lp { p: num()? },
        "topk" => NormKind::TopK { k: num()? as usize },
        "kfunctional" => NormKind::KFunctional { t: num()? },
        "minimal-sqrt" => NormKind::Minimal { a: sqrt_sequence(d) },
        "maximal-sqrt" => NormKind::Maximal { a: sqrt_sequence(d) },
        "huber" => NormKind::Orlicz {
            g: GFunction::Huber { delta: num()? },
        },
        _ => return Err(Error::Config(format!("unknown norm {name:?}"))),
    })
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut t = toml::Table::new();
        t.insert("version".into(), toml::Value::Integer(1));
        macro_rules! put {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    t.insert(stringify!($f).into(), toml::Value::try_from(v.clone())
                        .map_err(|e| Error::Config(e.to_string()))?);
                }
            )*};
        }
        put!(seed, n, d, queries, r, separation, index, beta, tau, epsilon, mu, d_factor);
        put!(alpha, reps, dual_tol, leaf_cap, cluster_factor, accept_factor);
        let mut output = toml::Table::new();
        if let Some(p) = &self.csv {
            output.insert("csv".into(), p.display().to_string().into());
        }
        if let Some(p) = &self.json {
            output.insert("json".into(), p.display().to_string().into());
        }
        if !output.is_empty() {
            t.insert("output".into(), output.into());
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            let file: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
            for (k, v) in file {
                t.insert(k, v);
            }
        }
        if !t.contains_key("norm") {
            let d = match t.get("d") {
                Some(toml::Value::Integer(d)) => *d as usize,
                _ => RunConfig::default().d,
            };
            let kind = norm_kind(self.norm.as_deref().unwrap_or("l2"), d)?;
            t.insert(
                "norm".into(),
                toml::Value::try_from(kind).map_err(|e| Error::Config(e.to_string()))?,
            );
        }
        RunConfig::from_toml(&toml::to_string(&t).map_err(|e| Error::Config(e.to_string()))?)
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_workload(dir: &Path) -> Result<(Workload, WorkloadMeta), Error> {
    let meta: WorkloadMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("workload.json"))?)
        .map_err(|e| Error::Format(e.to_string()))?;
    let w = Workload {
        points: PointSet::load(&dir.join("points.bin"))?,
        queries: PointSet::load(&dir.join("queries.bin"))?,
        planted: meta.planted.clone(),
        r: meta.r,
        separation: meta.separation,
    };
    Ok((w, meta))
}

fn run(cmd: Cmd) -> Result<i32, Error> {
    match cmd {
        Cmd::Gen { run, out_dir } => {
            let cfg = run.config()?;
            let w = bench::workload_for(&cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            w.points.save(&out_dir.join("points.bin"))?;
            w.queries.save(&out_dir.join("queries.bin"))?;
            let meta = WorkloadMeta {
                version: 1,
                norm: cfg.norm_spec()?,
                n: cfg.n,
                queries: cfg.queries,
                r: cfg.r,
                separation: cfg.separation,
                seed: cfg.seed,
                planted: w.planted.clone(),
            };
            let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
            std::fs::write(out_dir.join("workload.json"), json + "\n")?;
            eprintln!("wrote {} points and {} queries to {}", cfg.n, cfg.queries, out_dir.display());
            Ok(EXIT_PASS)
        }
        Cmd::Build { run, out } => {
            let cfg = run.config()?;
            let opts = EnumerationOptions {
                dual_tol: cfg.dual_tol,
                ..EnumerationOptions::default()
            };
            let start = Instant::now();
            let mut spec = build_embedding(&cfg.norm_spec()?, &cfg.level_params()?, &opts)?;
            let mut meta = toml::Table::new();
            meta.insert("index".into(), toml::Value::try_from(cfg.index).map_err(|e| Error::Config(e.to_string()))?);
            meta.insert("epsilon".into(), cfg.epsilon.into());
            meta.insert("r".into(), cfg.r.into());
            meta.insert("seed".into(), (cfg.seed as i64).into());
            spec.set_index_meta(Some(meta));
            spec.save(&out)?;
            eprintln!(
                "net rows {} (frontier {}), {} dual evaluations, {:.2?}",
                spec.rows(),
                spec.frontier_len(),
                spec.stats().nodes,
                start.elapsed()
            );
            Ok(EXIT_PASS)
        }
        Cmd::Query {
            run,
            workload,
            embedding,
            out,
        } => {
            let cfg = run.config()?;
            let (w, meta) = load_workload(&workload)?;
            if meta.norm != cfg.norm_spec()? {
                return Err(Error::Config("workload was generated for a different norm".into()));
            }
            let emb = match embedding {
                Some(p) => Some(Arc::new(EmbeddingSpec::load(&p)?)),
                None => None,
            };
            let outcome = run_bench_with(&cfg, &w, emb)?;
            outcome.write_outputs()?;
            if out.is_some() || cfg.output.csv.is_none() {
                write_or_print(out.as_deref(), &outcome.csv()?)?;
            }
            Ok(if outcome.report.passed { EXIT_PASS } else { EXIT_FAIL })
        }
        Cmd::Bench { run } => {
            let cfg = run.config()?;
            let start = Instant::now();
            let outcome = run_bench(&cfg)?;
            outcome.write_outputs()?;
            if cfg.output.json.is_none() {
                print!("{}", outcome.json());
            }
            let r = &outcome.report;
            eprintln!(
                "{}: {} queries, recall {:.3}, {} in {:.2?}",
                r.index,
                r.queries,
                r.recall.map_or(f64::NAN, |s| s.mean),
                if r.passed { "pass" } else { "FAIL" },
                start.elapsed()
            );
            Ok(if r.passed { EXIT_PASS } else { EXIT_FAIL })
        }
        Cmd::Verify {
            suites,
            seed,
            out,
            list,
        } => {
            if list {
                for s in SUITES {
                    println!("{s}");
                }
                return Ok(EXIT_PASS);
            }
            let names = if suites.is_empty() {
                SUITES.iter().map(|s| s.to_string()).collect()
            } else {
                suites
            };
            if let Some(bad) = names.iter().find(|n| !SUITES.contains(&n.as_str())) {
                return Err(Error::Config(format!("unknown suite {bad:?}")));
            }
            let mut results = Vec::new();
            for name in &names {
                let start = Instant::now();
                let r = bench::run_suite(name, seed)?;
                eprintln!(
                    "{} {name} ({:.1?})",
                    if r.passed { "pass" } else { "FAIL" },
                    start.elapsed()
                );
                for c in r.checks.iter().filter(|c| !c.passed) {
                    eprintln!("    {}: {} vs bound {}", c.name, c.value, c.bound);
                }
                results.push(r);
            }
            let report = bench::VerifyReport {
                schema_version: 1,
                seed,
                passed: results.iter().all(|s| s.passed),
                suites: results,
            };
            write_or_print(out.as_deref(), &report.json())?;
            Ok(if report.passed { EXIT_PASS } else { EXIT_FAIL })
        }
        Cmd::NetReport {
            norm,
            dims,
            beta,
            dual_tol,
            count_candidates,
        } => {
            let opts = EnumerationOptions {
                dual_tol,
                ..EnumerationOptions::default()
            };
            let rows = net_size_report(
                |d| NormSpec::new(d, norm_kind(&norm, d)?),
                &dims,
                beta,
                &opts,
                count_candidates,
            );
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for row in &rows {
                w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
            }
            w.flush()?;
            Ok(if rows.iter().all(|r| r.error.is_none()) { EXIT_PASS } else { EXIT_FAIL })
        }
        Cmd::LowerboundDemo { norm, dims, beta } => {
            let rows = lowerbound_demo(|d| NormSpec::new(d, norm_kind(&norm, d)?), &dims, beta)?;
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for row in &rows {
                w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
            }
            w.flush()?;
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_)
                | Error::InvalidParameter(_)
                | Error::OutOfRange { .. }
                | Error::Io(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            };
            ExitCode::from(code as u8)
        }
    }
}
