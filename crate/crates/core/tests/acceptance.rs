//! The twelve acceptance criteria, run serially so runtimes are honest.
//! Each prints one PASS/FAIL line; the test fails if any criterion does.

use std::io::Write;
use std::time::{Duration, Instant};

use timechange_bsde::harness::{run_scenario, seed_sweep, ExperimentConfig, ReportBundle};

struct Criterion {
    number: usize,
    title: &'static str,
    limit: Duration,
    config: ExperimentConfig,
    /// Seeds for a sweep; a single run when empty.
    sweep: Vec<u64>,
}

fn cfg(scenario: &str) -> ExperimentConfig {
    ExperimentConfig::new(scenario)
}

fn criteria() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    let c = |number, title, limit, config: ExperimentConfig| Criterion {
        number,
        title,
        limit,
        config,
        sweep: vec![],
    };
    let mut v = vec![
        c(1, "clock inverse for density 1 + 2s", secs(1), {
            let mut x = cfg("clock-inverse").with_param("probes", 20);
            x.steps = Some(1000);
            x
        }),
        c(
            2,
            "transformed driver is 1-Lipschitz",
            secs(10),
            cfg("uniform-lipschitz")
                .with_param("drivers", 5)
                .with_param("probes", 10_000),
        ),
        c(
            3,
            "time-changed Brownian variance",
            secs(30),
            cfg("brownian-variance").with_paths(10_000),
        ),
        c(4, "direct vs transformed linear solve", secs(120), {
            let mut x = cfg("linear-equivalence").with_paths(2000);
            x.steps = Some(50);
            x
        }),
        c(5, "LSMC vs closed form", secs(120), {
            let mut x = cfg("lsmc-closed-form").with_paths(20_000);
            x.steps = Some(100);
            x
        }),
        c(
            6,
            "comparison of ordered problems",
            secs(60),
            cfg("comparison").with_paths(10_000),
        ),
        c(
            7,
            "bounded solution of the cubic driver",
            secs(120),
            cfg("bounded-solution"),
        ),
        c(
            8,
            "psi symmetric PSD",
            secs(5),
            cfg("psi-properties").with_param("generators", 100),
        ),
        c(
            9,
            "chain transform law",
            secs(60),
            cfg("chain-transform-law").with_paths(10_000),
        ),
        c(
            10,
            "message transmission oracle",
            secs(120),
            cfg("message-transmission").with_paths(20_000),
        ),
        c(11, "bound verification", secs(60), cfg("chain-bounds")),
        c(
            12,
            "gamma-balance preservation",
            secs(10),
            cfg("gamma-balance").with_param("probes", 1000),
        ),
    ];
    v[2].sweep = (1..=10).collect();
    v[2].config = v[2].config.clone().with_param("min_pass_rate", 0.9);
    v
}

fn run(c: &Criterion) -> (Result<ReportBundle, String>, Duration) {
    let t = Instant::now();
    let out = if c.sweep.is_empty() {
        run_scenario(&c.config)
    } else {
        seed_sweep(&c.config, &c.sweep)
    };
    (out.map_err(|e| e.to_string()), t.elapsed())
}

#[test]
fn acceptance_criteria() {
    let mut err = std::io::stderr();
    let mut failed = Vec::new();
    for c in criteria() {
        let (outcome, took) = run(&c);
        let in_time = took <= c.limit;
        let pass = in_time && outcome.as_ref().is_ok_and(|b| b.passed());
        let _ = writeln!(
            err,
            "{} criterion {:>2}: {} [{}] runtime={:.2}s limit={}s",
            if pass { "PASS" } else { "FAIL" },
            c.number,
            c.title,
            c.config.scenario,
            took.as_secs_f64(),
            c.limit.as_secs()
        );
        match &outcome {
            Ok(b) => {
                for v in &b.verdicts {
                    let _ = writeln!(err, "    {}", v.line());
                }
            }
            Err(e) => {
                let _ = writeln!(err, "    error: {e}");
            }
        }
        if !pass {
            failed.push(c.number);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
