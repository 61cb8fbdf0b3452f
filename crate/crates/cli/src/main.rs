use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpcb_core::harness::{self, GammaFile, RunConfig};
use gpcb_core::Result;

/// Gaussian-process combinatorial bandit experiments.
#[derive(Parser)]
#[command(name = "gpcb", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured seed and write traces plus a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Added to every configured seed.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Repeat a run for each value of one dotted config parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path such as `gp.sparse.num_inducing`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
    },
    /// Desk-scale diagnostics.
    Diagnostics {
        #[command(subcommand)]
        which: Diagnostics,
    },
}

#[derive(Subcommand)]
enum Diagnostics {
    /// Exhaustive information-gain quantities for the `[diagnostics]` block.
    Gamma {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_run_config(path: &Path) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply_env_overrides();
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed_offset } => {
            let cfg = load_run_config(&config)?;
            let out = harness::run(&cfg, seed_offset)?;
            for t in &out.traces {
                println!(
                    "{} seed {}: final regret {:.6}, reward ratio {:.6}",
                    t.header.algorithm,
                    t.header.seed,
                    t.final_regret(),
                    t.reward_ratio()
                );
            }
            println!("manifest: {}", out.manifest.display());
        }
        Command::Sweep { config, param, values } => {
            let cfg = load_run_config(&config)?;
            let values: Vec<_> = values
                .iter()
                .filter(|v| !v.trim().is_empty())
                .map(|v| harness::parse_sweep_value(v))
                .collect();
            let summary = harness::sweep(&cfg, &param, &values)?;
            for r in &summary.rows {
                println!(
                    "{}={}: ratio {:.6} ± {:.6}, final regret {:.6} ± {:.6}",
                    summary.param, r.value, r.ratio_mean, r.ratio_std, r.regret_mean, r.regret_std
                );
            }
            println!("summary: {}", summary.summary_file.display());
        }
        Command::Diagnostics {
            which: Diagnostics::Gamma { config },
        } => {
            let mut cfg = GammaFile::load(&config)?;
            cfg.apply_env_overrides();
            let (report, path) = harness::diagnose_gamma(&cfg)?;
            println!("gamma_bar_T = {}", report.gamma_bar_t);
            println!("gamma_T     = {}", report.gamma_t);
            match report.gamma_kt {
                Some(g) => println!("gamma_KT    = {g}"),
                None => println!("gamma_KT    = (skipped, instance too large)"),
            }
            println!("report: {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
