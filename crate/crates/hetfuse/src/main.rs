use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hetfuse::commands::{cmd_run, cmd_validate, cmd_weights, default_out, load, Overrides};
use hetfuse::HarnessError;

#[derive(Parser)]
#[command(name = "hetfuse", version, about = "Heterogeneous multi-sensor RFS fusion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the number of Monte-Carlo runs.
    #[arg(long)]
    runs: Option<u32>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the pipelines, e.g. `local:0,waa-phd,hmphd`.
    #[arg(long)]
    pipelines: Option<String>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            runs: self.runs,
            seed: self.seed,
            pipelines: self.pipelines.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo experiment and write result tables.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the EUF weight map as CSV.
    Weights {
        #[command(flatten)]
        common: Common,
        /// Output directory; the map is written to `weights.csv` inside it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario and print coverage statistics.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { common, out } => {
            let config = load(&common.config, &common.overrides())?;
            let out = out.unwrap_or_else(default_out);
            let res = cmd_run(config, &out)?;
            for s in res.summaries() {
                println!(
                    "{:<12} ospa {:>9.3} +- {:<7.3} card {:>6.2} / {:<6.2} {:>8.3} s/run",
                    s.pipeline, s.ospa_mean, s.ospa_se, s.cardinality_mean, s.true_cardinality_mean, s.runtime_s
                );
            }
            log::info!("results written to {}", out.display());
            Ok(())
        }
        Command::Weights { common, out } => {
            let config = load(&common.config, &common.overrides())?;
            let path = out.unwrap_or_else(default_out).join("weights.csv");
            let flagged = cmd_weights(&config, &path)?;
            println!("wrote {} ({flagged} flagged cells)", path.display());
            Ok(())
        }
        Command::Validate { common } => {
            let config = load(&common.config, &common.overrides())?;
            let report = cmd_validate(&config);
            print!("{}", report.text);
            if report.is_valid() {
                Ok(())
            } else {
                Err(HarnessError::Config(format!("{} violation(s)", report.violations.len())))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hetfuse: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
