use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use timechange_bsde::harness::{
    exit_code, list_scenarios, run_scenario, seed_sweep, ExperimentConfig, ReportBundle, EXIT_CONFIG, OUT_ENV,
};
use timechange_bsde::Result;

#[derive(Parser)]
#[command(name = "tcbsde", version, about = "Time-changed BSDE experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the scenario catalog.
    List,
    /// Run one scenario.
    Run(RunArgs),
    /// Run one scenario over several seeds and aggregate.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated seeds; defaults to `count` seeds from --seed (or 1).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 10)]
        count: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario id; ignored when --config is given.
    scenario: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; else the config's `out`, else `<out-root>/<scenario>`
    /// with `out-root` defaulting to `tcbsde-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root for default output directories.
    #[arg(long, env = OUT_ENV, hide_env_values = true)]
    out_root: Option<PathBuf>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.scenario) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(id)) => ExperimentConfig::new(id.clone()),
            (None, None) => {
                return Err(timechange_bsde::Error::Config("give a scenario id or --config".into()));
            }
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = self.paths {
            cfg.paths = Some(p);
        }
        if let Some(t) = self.tol {
            cfg.tol = Some(t);
        }
        cfg.out = self.out.clone().or(cfg.out).or_else(|| {
            let root = self.out_root.clone().unwrap_or_else(|| PathBuf::from("tcbsde-out"));
            Some(root.join(&cfg.scenario))
        });
        Ok(cfg)
    }
}

fn report(outcome: &Result<ReportBundle>, out: Option<&PathBuf>) -> ExitCode {
    match outcome {
        Ok(b) => {
            for v in &b.verdicts {
                println!("{}", v.line());
            }
            for n in &b.notes {
                println!("note: {n}");
            }
            if let Some(o) = out {
                println!("report: {}", o.join("report.txt").display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(outcome) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for s in list_scenarios() {
                println!("{:<26} {:<10} {}", s.id, s.module.as_str(), s.description);
                println!("{:<26} {:<10} anchor: {}", "", "", s.anchor);
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => match args.config() {
            Ok(cfg) => report(&run_scenario(&cfg), cfg.out.as_ref()),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG as u8)
            }
        },
        Command::Sweep { run, seeds, count } => match run.config() {
            Ok(cfg) => {
                let seeds = if seeds.is_empty() {
                    (cfg.seed..cfg.seed + count).collect()
                } else {
                    seeds
                };
                report(&seed_sweep(&cfg, &seeds), cfg.out.as_ref())
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG as u8)
            }
        },
    }
}
