use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use slmc_cli::config::{parse_config, ExperimentConfig};
use slmc_cli::experiments::run_experiment;
use slmc_cli::presets::{preset, preset_text, PRESET_NAMES};
use slmc_cli::report::emit_outputs;
use slmc_core::validation::{check_moment_recursion, run_core_checks, MomentCheckParams, ValidationReport};

#[derive(Parser)]
#[command(name = "slmc", version, about = "Run subspace Langevin sampling experiments")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `seed` from the file.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `out_dir` from the file.
        #[arg(long)]
        out: Option<String>,
    },
    /// Run one of the built-in configurations.
    Preset {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
        /// Print the preset's TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Run the numerical self-checks and exit nonzero if any fails.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Chains in the moment-recursion ensemble.
        #[arg(long, default_value_t = 10_000)]
        chains: usize,
        /// Also write the table as `validation.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Run { config, seed, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = parse_config(&text).with_context(|| format!("in {}", config.display()))?;
            execute(cfg, seed, out)
        }
        Command::Preset {
            name,
            seed,
            out,
            print_config,
        } => {
            if print_config {
                print!("{}", preset_text(&name).expect("name checked by the parser"));
                return Ok(ExitCode::SUCCESS);
            }
            execute(preset(&name)?, seed, out)
        }
        Command::Validate { seed, chains, out } => validate(seed, chains, out.as_deref()),
    }
}

fn execute(mut cfg: ExperimentConfig, seed: Option<u64>, out: Option<String>) -> anyhow::Result<ExitCode> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    let report = run_experiment(&cfg)?;
    let manifest = emit_outputs(&report, Path::new(&cfg.out_dir))?;
    for a in &report.aggregate {
        if let Some(v) = a.last() {
            println!("{:<32} {v:.6e}", a.metric);
        }
    }
    let diverged: usize = report.runs.iter().map(|r| r.diverged).sum();
    if diverged > 0 {
        log::warn!("{diverged} chains diverged and were left out of the metrics; see runs.csv");
    }
    log::info!(
        "wrote {} files to {} in {:.1}s",
        manifest.entries.len() + 1,
        cfg.out_dir,
        report.runtime.as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}

fn validate(seed: u64, chains: usize, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let start = Instant::now();
    let mut report: ValidationReport = run_core_checks(seed)?;
    let params = MomentCheckParams {
        chains,
        ..MomentCheckParams::default()
    };
    report.extend(check_moment_recursion(seed, &params)?);
    print!("{}", report.table());
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("validation.csv");
        fs::write(&path, validation_csv(&report)).with_context(|| format!("writing {}", path.display()))?;
    }
    let failed = report.failures().count();
    log::info!(
        "{} checks, {failed} failed, {:.1}s",
        report.checks.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn validation_csv(report: &ValidationReport) -> String {
    let mut out = String::from("check,passed,measured,tolerance,seed,detail\n");
    for c in &report.checks {
        out.push_str(&format!(
            "{},{},{:e},{:e},{},\"{}\"\n",
            c.name,
            c.passed,
            c.measured,
            c.tolerance,
            c.seed,
            c.detail.replace('"', "\"\"")
        ));
    }
    out
}
