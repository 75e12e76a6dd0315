//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use symann::bench::lowerbound_demo;
use symann::bench::verify::{run_suite, verify, Check, SuiteResult, VerifyReport, REFERENCE_SEED, SUITES};
use symann::vecnorm::NormSpec;

struct Line {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn checks<'a>(suite: &'a SuiteResult, prefix: &str) -> Vec<&'a Check> {
    suite.checks.iter().filter(|c| c.name.starts_with(prefix)).collect()
}

fn value(suite: &SuiteResult, name: &str) -> f64 {
    suite
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no check named {name:?} in {}", suite.suite))
        .value
}

fn all_pass(cs: &[&Check]) -> bool {
    !cs.is_empty() && cs.iter().all(|c| c.passed)
}

fn summary(cs: &[&Check]) -> String {
    cs.iter()
        .map(|c| format!("{}={:.4}", c.name, c.value))
        .collect::<Vec<_>>()
        .join("; ")
}

fn main() {
    let seed = REFERENCE_SEED;
    let start = Instant::now();
    let mut suites = Vec::new();
    let mut times = Vec::new();
    for name in SUITES {
        let t = Instant::now();
        let r = run_suite(name, seed).expect("suite runs");
        times.push(t.elapsed());
        suites.push(r);
    }
    let first_run = start.elapsed();
    let by = |n: &str| SUITES.iter().position(|s| *s == n).unwrap();
    let suite = |n: &str| &suites[by(n)];
    let time = |n: &str| times[by(n)];
    let within = |n: &str, limit: Duration| time(n) <= limit;

    let mut lines = Vec::new();

    let s = suite("topk-identity");
    let err = value(s, "max_relative_error");
    lines.push(Line {
        id: 1,
        title: "top-k identity, 10^4 trials, d <= 64",
        passed: s.passed && err <= 1e-9 && within("topk-identity", Duration::from_secs(10)),
        detail: format!("max rel err {err:.2e}, {:.2?}", time("topk-identity")),
    });

    let s = suite("sandwich");
    lines.push(Line {
        id: 2,
        title: "sandwich over the rounded dual set, d = 12",
        passed: s.passed && within("sandwich", Duration::from_secs(600)),
        detail: format!("{}, {:.2?}", summary(&checks(s, "")), time("sandwich")),
    });

    let s = suite("net-pruning");
    let worst = checks(s, "").iter().filter(|c| c.name.ends_with("worst ratio")).map(|c| c.value).fold(0.0, f64::max);
    lines.push(Line {
        id: 3,
        title: "net pruning ||S(z) - z|| <= 2(beta-1)||z||, d = 12",
        passed: s.passed,
        detail: format!("worst ratio {worst:.4} (bound 1.0), zero violations: {}", s.passed),
    });

    let s = suite("net-size");
    lines.push(Line {
        id: 4,
        title: "net size t <= d^10 at d in {8, 12, 16}",
        passed: s.passed,
        detail: summary(&checks(s, "")),
    });

    let s = suite("scaling-monte-carlo");
    let sq = checks(s, "g=t^2");
    let near = value(s, "g=t^2: near");
    let far = value(s, "g=t^2: far");
    lines.push(Line {
        id: 5,
        title: "scaling map Monte Carlo, G(t) = t^2",
        passed: all_pass(&sq) && near >= 0.29 && far >= 0.96 && within("scaling-monte-carlo", Duration::from_secs(60)),
        detail: format!("near {near:.4} (>= 0.29), far {far:.4} (>= 0.96), {:.2?}", time("scaling-monte-carlo")),
    });
    let tk = checks(s, "top-4");
    lines.push(Line {
        id: 6,
        title: "scaling map Monte Carlo, top-4, tail 1 - mu^(alpha-1)",
        passed: all_pass(&tk),
        detail: summary(&tk),
    });

    let s = suite("level-loss");
    let ce = checks(s, "").into_iter().filter(|c| c.name.contains("counterexamples")).collect::<Vec<_>>();
    let bad: f64 = ce.iter().map(|c| c.value).sum();
    lines.push(Line {
        id: 7,
        title: "level-table loss implications, d = 256, 10^5 vectors per norm",
        passed: all_pass(&ce) && ce.len() == 9 && within("level-loss", Duration::from_secs(300)),
        detail: format!("{} norms, {bad} counterexamples, {:.2?}", ce.len(), time("level-loss")),
    });

    let s = suite("pipelines");
    let hub = checks(s, "huber");
    lines.push(Line {
        id: 8,
        title: "Huber Orlicz scaling pipeline, n = 1000, d = 32",
        passed: all_pass(&hub),
        detail: format!(
            "recall {:.3} (>= 0.55), worst accepted distance {:.3} (<= alpha D r = 24)",
            value(s, "huber scaling: recall"),
            value(s, "huber scaling: worst accepted distance")
        ),
    });

    let ring = suite("ring-soundness");
    let space = suite("space-recurrence");
    lines.push(Line {
        id: 9,
        title: "ring tree routing soundness and space audit",
        passed: ring.passed && space.passed,
        detail: format!("{}; {}", summary(&checks(ring, "")), summary(&checks(space, ""))),
    });

    let direct = checks(s, "").into_iter().filter(|c| c.name.contains(" direct: ")).collect::<Vec<_>>();
    lines.push(Line {
        id: 10,
        title: "direct symmetric-norm index, d = 12, n = 2000, l1 and minimal(sqrt k)",
        passed: all_pass(&direct) && direct.len() >= 4,
        detail: summary(&direct),
    });

    let dims = [64, 256, 1024, 4096];
    let sqrt = lowerbound_demo(|d| Ok(NormSpec::minimal_sqrt(d)), &dims, 1.5).expect("demo runs");
    let l2 = lowerbound_demo(|d| Ok(NormSpec::l2(d)), &dims, 1.5).expect("demo runs");
    let increasing = sqrt.windows(2).all(|w| w[1].proxy > w[0].proxy);
    let (lo, hi) = l2.iter().fold((f64::INFINITY, 0.0f64), |a, r| (a.0.min(r.proxy), a.1.max(r.proxy)));
    let fmt = |rows: &[symann::bench::LowerBoundRow]| rows.iter().map(|r| format!("{:.4}", r.proxy)).collect::<Vec<_>>().join(" ");
    lines.push(Line {
        id: 11,
        title: "single-loss distortion proxy",
        passed: increasing && hi / lo <= 2.0,
        detail: format!("minimal_sqrt [{}] strictly increasing: {increasing}; l2 [{}] spread x{:.4}", fmt(&sqrt), fmt(&l2), hi / lo),
    });

    let rebuilt = VerifyReport {
        schema_version: 1,
        seed,
        passed: suites.iter().all(|s| s.passed),
        suites: suites.clone(),
    };
    let t = Instant::now();
    let full = verify(&[], seed).expect("verify runs");
    let second_run = t.elapsed();
    let identical = full.json() == rebuilt.json();
    let limit = Duration::from_secs(30 * 60);
    lines.push(Line {
        id: 12,
        title: "full verify on the reference seed, reproducible",
        passed: full.passed && identical && first_run <= limit && second_run <= limit,
        detail: format!("all suites pass: {}, byte-identical: {identical}, runs {first_run:.2?} and {second_run:.2?}", full.passed),
    });

    let mut failed = 0;
    for l in &lines {
        println!("[{}] criterion {:>2}: {} | {}", if l.passed { "PASS" } else { "FAIL" }, l.id, l.title, l.detail);
        failed += (!l.passed) as usize;
    }
    println!("acceptance: {} of {} criteria pass", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
