use std::collections::HashSet;
use std::time::Instant;

use timechange_bsde::harness::{
    exit_code, find_scenario, list_scenarios, run_scenario, seed_sweep, ExperimentConfig, Module, Verdict,
};
use timechange_bsde::Error;

#[test]
fn catalog_spans_every_module_with_anchors() {
    let cat = list_scenarios();
    assert!(cat.len() >= 10);
    let modules: HashSet<&str> = cat.iter().map(|s| s.module.as_str()).collect();
    assert_eq!(modules.len(), 3);
    let ids: HashSet<&str> = cat.iter().map(|s| s.id).collect();
    assert_eq!(ids.len(), cat.len());
    for s in cat {
        assert!(!s.anchor.is_empty() && !s.description.is_empty(), "{}", s.id);
    }
    let again: Vec<&str> = list_scenarios().iter().map(|s| s.id).collect();
    assert_eq!(again, cat.iter().map(|s| s.id).collect::<Vec<_>>());
}

#[test]
fn unknown_scenario_is_a_config_error() {
    let r = run_scenario(&ExperimentConfig::new("no-such-scenario"));
    assert!(matches!(r, Err(Error::Config(_))));
    assert_eq!(exit_code(&r), 2);
}

#[test]
fn module_mismatch_and_bad_fields_are_config_errors() {
    let mut c = ExperimentConfig::new("clock-inverse");
    c.module = Some(Module::Chain);
    assert!(matches!(run_scenario(&c), Err(Error::Config(_))));
    assert!(matches!(
        run_scenario(&ExperimentConfig::new("clock-inverse").with_seed(0)),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        run_scenario(&ExperimentConfig::new("comparison").with_paths(0)),
        Err(Error::Config(_))
    ));
    assert!(ExperimentConfig::from_toml_str("[experiment]\nscenario = \"x\"\nsteps = \"many\"\n").is_err());
    assert!(ExperimentConfig::from_toml_str("[experiment]\nseed = 3\n").is_err());
    let bad = ExperimentConfig::new("clock-inverse").with_param("probes", "twenty");
    assert!(matches!(run_scenario(&bad), Err(Error::Config(_))));
}

#[test]
fn toml_config_round_trip() {
    let text = r#"
[experiment]
scenario = "message-transmission"
module = "chain"
seed = 5
paths = 4000
steps = 1000

[params]
t_max = 20.0

[chain]
states = 2
source = 0
target = 1
rates = [ { from = 0, to = 1, kind = "constant", value = 1.0 } ]
loss = [ { state = 0, kind = "constant", value = 3.0 } ]
"#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.module, Some(Module::Chain));
    assert_eq!(cfg.param("t_max", 0.0).unwrap(), 20.0);
    let b = run_scenario(&cfg).unwrap();
    assert!(b.passed(), "{}", b.report_text());
    // competing exponentials: 1 / (1 + 3)
    let p = b
        .estimates
        .iter()
        .find(|e| e.name == "reach_probability")
        .unwrap()
        .value;
    assert!((p - 0.25).abs() < 1e-4, "{p}");
    assert!(b.report_text().contains("loss = [ { state = 0"));
}

#[test]
fn verdict_lines_carry_name_value_and_threshold() {
    let v = Verdict::at_most("gap", 0.5, 1.0);
    assert!(v.pass);
    let line = v.line();
    assert!(line.starts_with("PASS gap measured=5.00000000000e-1"), "{line}");
    assert!(line.ends_with("threshold<=1.00000000000e0"), "{line}");
    assert!(!Verdict::at_least("x", f64::NAN, 0.0).pass);
    assert!(!Verdict::at_most("x", f64::NAN, 0.0).pass);
    assert!(Verdict::at_least("x", 2.0, 1.0).line().contains("threshold>="));
}

#[test]
fn identity_roundtrip_passes_quickly_and_writes_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let b = run_scenario(&ExperimentConfig::new("identity-clock-roundtrip").with_out(dir.path())).unwrap();
    assert!(t.elapsed().as_secs_f64() < 5.0);
    assert!(b.passed() && b.exit_code() == 0);
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("status: PASS") && report.contains("version: "));
    let csv = std::fs::read_to_string(dir.path().join("roundtrip.csv")).unwrap();
    assert!(csv.starts_with("node_time,x,x_roundtrip\n") && !csv.contains('\r'));
}

#[test]
fn tightened_tolerance_fails_with_exit_one() {
    let b = run_scenario(&ExperimentConfig::new("clock-inverse").with_param("probes", 5)).unwrap();
    assert!(b.passed());
    let mut tight = ExperimentConfig::new("clock-inverse");
    tight.tol = Some(1e-9);
    let r = run_scenario(&tight);
    assert!(!r.as_ref().unwrap().passed());
    assert_eq!(exit_code(&r), 1);
}

fn tables(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn identical_seed_gives_byte_identical_tables() {
    for id in ["brownian-variance", "chain-transform-law", "comparison"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let cfg = ExperimentConfig::new(id).with_paths(2000).with_seed(11);
        run_scenario(&cfg.clone().with_out(a.path())).unwrap();
        run_scenario(&cfg.with_out(b.path())).unwrap();
        let (ta, tb) = (tables(a.path()), tables(b.path()));
        assert!(!ta.is_empty());
        assert_eq!(ta, tb, "{id}");
    }
}

#[test]
fn sweep_needs_two_seeds_and_is_deterministic() {
    let cfg = ExperimentConfig::new("lsmc-closed-form").with_paths(4000);
    assert!(matches!(seed_sweep(&cfg, &[1]), Err(Error::Precondition(_))));
    let same = seed_sweep(&cfg, &[3, 3]).unwrap();
    let disp = same.find("dispersion_y0_lsmc").unwrap();
    assert_eq!(disp.measured, 0.0);
    let again = seed_sweep(&cfg, &[3, 3]).unwrap();
    assert_eq!(same.tables, again.tables);
    assert_eq!(same.verdicts, again.verdicts);
}

#[test]
fn sweep_dispersion_is_within_three_standard_errors() {
    let cfg = ExperimentConfig::new("lsmc-closed-form").with_paths(4000);
    let b = seed_sweep(&cfg, &[1, 2, 3, 4, 5, 6]).unwrap();
    assert!(b.passed(), "{}", b.report_text());
    assert!(b.find("dispersion_y0_lsmc").is_some());
}

#[test]
fn sweep_counts_failing_seeds() {
    let mut cfg = ExperimentConfig::new("clock-inverse");
    cfg.tol = Some(1e-9);
    let b = seed_sweep(&cfg, &[1, 2]).unwrap();
    let v = b.find("pass_rate").unwrap();
    assert_eq!(v.measured, 0.0);
    assert!(!b.passed());
}

#[test]
fn every_scenario_passes_at_defaults_within_two_minutes() {
    for s in list_scenarios() {
        let t = Instant::now();
        let b = run_scenario(&ExperimentConfig::new(s.id)).unwrap_or_else(|e| panic!("{}: {e}", s.id));
        let secs = t.elapsed().as_secs_f64();
        assert!(b.passed(), "{}", b.report_text());
        assert!(secs < 120.0, "{} took {secs}s", s.id);
        assert_eq!(find_scenario(s.id).unwrap().module, b.module);
    }
}

#[test]
fn shipped_configs_parse_and_pass() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert!(b.passed(), "{}: {}", path.display(), b.report_text());
        n += 1;
    }
    assert!(n >= 3);
}
