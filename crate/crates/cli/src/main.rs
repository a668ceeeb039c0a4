//! `viewsim`: experiment drivers for the viewability-control laboratory.
//!
//! Exit codes: 0 success, 1 runtime/experiment failure, 2 usage or
//! configuration error.

mod config;
mod experiments;
mod plots;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::RunConfig;
use viewsim_core::agents::{config_digest, train, Algo};
use viewsim_core::auction::{collect_random_rollouts, read_transitions, write_transitions};
use viewsim_core::dataset::{generate_lld, read_lld, split_train_eval, write_lld};
use viewsim_core::predictors::{read_model, train_bid_model, train_logistic, write_model};

#[derive(Parser)]
#[command(
    name = "viewsim",
    version,
    about = "Offline viewability-control laboratory: synthetic logs, auction replay, baselines, offline RL, tuning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic log-level dataset.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a dataset chronologically and train the simulator models.
    TrainPredictors {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Collect random-action rollout transitions on the training half.
    Rollouts {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        episodes: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train one offline RL policy from a transition log.
    TrainAgent {
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[arg(long)]
        transitions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run one of the named experiments end to end.
    RunExperiment {
        #[arg(value_enum)]
        experiment: ExperimentArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Convert experiment CSVs into gnuplot-ready series files.
    PlotData {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Dqn10,
    Dqn20,
    Ddpg,
    Td3,
}

impl fmt::Display for AlgoArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AlgoArg::Dqn10 => "dqn10",
            AlgoArg::Dqn20 => "dqn20",
            AlgoArg::Ddpg => "ddpg",
            AlgoArg::Td3 => "td3",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    CompareAlgos,
    Baselines,
    RlVsPid,
    Sanity,
    Tune,
}

enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<viewsim_core::Error> for CliError {
    fn from(e: viewsim_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            eprintln!("run `viewsim --help` for usage");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(error)) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    RunConfig::load(path).map_err(CliError::Usage)
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("creating {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenData { config, out } => {
            let config = load_config(&config)?;
            let records = generate_lld(&config.generator.to_core())?;
            write_lld(&records, &out)?;
            let view_rate =
                records.iter().filter(|r| r.viewed).count() as f64 / records.len() as f64;
            println!("wrote {} records to {}", records.len(), out.display());
            println!("empirical view rate: {view_rate:.4}");
            Ok(())
        }
        Command::TrainPredictors {
            data,
            out_dir,
            config,
        } => {
            let config = match config {
                Some(path) => load_config(&path)?,
                None => RunConfig::default(),
            };
            let records = read_lld(&data)?;
            let (train_half, eval_half) = split_train_eval(&records, config.split_fraction())?;
            let train_config = config.predictors.to_core();
            let view_model = train_logistic(&train_half, &train_config)?;
            let bid_model = train_bid_model(&train_half, &train_config)?;
            create_dir(&out_dir)?;
            write_model(&view_model, &out_dir.join("view_model.csv"))?;
            write_model(&bid_model, &out_dir.join("bid_model.csv"))?;
            let (auc_value, rmse) =
                experiments::predictor_metrics(&eval_half, &view_model, &bid_model)?;
            println!(
                "trained on {} records; held-out auc={auc_value:.4} bid_rmse_micros={rmse:.1}",
                train_half.len()
            );
            Ok(())
        }
        Command::Rollouts {
            data,
            models,
            episodes,
            out,
            config,
        } => {
            let config = match config {
                Some(path) => load_config(&path)?,
                None => RunConfig::default(),
            };
            let records = read_lld(&data)?;
            let (train_half, _) = split_train_eval(&records, config.split_fraction())?;
            let view_model = read_model(&models.join("view_model.csv"))?;
            let bid_model = read_model(&models.join("bid_model.csv"))?;
            let sim = config.sim.to_core().map_err(CliError::Usage)?;
            let transitions =
                collect_random_rollouts(&train_half, &view_model, &bid_model, &sim, episodes)?;
            write_transitions(&transitions, &out)?;
            println!(
                "wrote {} transitions ({episodes} episodes) to {}",
                transitions.len(),
                out.display()
            );
            Ok(())
        }
        Command::TrainAgent {
            algo,
            transitions,
            out,
            config,
        } => {
            let config = match config {
                Some(path) => load_config(&path)?,
                None => RunConfig::default(),
            };
            let samples = read_transitions(&transitions)?;
            let mut agent = match algo {
                AlgoArg::Dqn10 => config::benchmark_dqn(10),
                AlgoArg::Dqn20 => config::benchmark_dqn(20),
                AlgoArg::Ddpg => config::benchmark_continuous(Algo::Ddpg),
                AlgoArg::Td3 => config::benchmark_continuous(Algo::Td3),
            };
            if let Some(seed) = config.seeds.first() {
                agent.seed = *seed;
            }
            let outcome = train(&samples, &agent)?;
            outcome.policy.write(&out, config_digest(&agent))?;
            println!(
                "trained {algo} on {} transitions; final training loss {:.6}",
                samples.len(),
                outcome.final_loss
            );
            Ok(())
        }
        Command::RunExperiment {
            experiment,
            config,
            out_dir,
        } => {
            let config = load_config(&config)?;
            create_dir(&out_dir)?;
            let result = match experiment {
                ExperimentArg::CompareAlgos => experiments::run_compare_algos(&config, &out_dir),
                ExperimentArg::Baselines => experiments::run_baselines(&config, &out_dir),
                ExperimentArg::RlVsPid => experiments::run_rl_vs_pid(&config, &out_dir),
                ExperimentArg::Sanity => experiments::run_sanity(&config, &out_dir),
                ExperimentArg::Tune => experiments::run_tune(&config, &out_dir),
            };
            match result {
                Ok(()) => {
                    println!("experiment finished; outputs in {}", out_dir.display());
                    Ok(())
                }
                Err(error) => {
                    // keep partial outputs, flag the failure for tooling
                    let _ = std::fs::write(out_dir.join("FAILED"), format!("{error:#}\n"));
                    Err(CliError::Runtime(error))
                }
            }
        }
        Command::PlotData { input } => {
            if !input.is_dir() {
                return Err(CliError::Usage(format!(
                    "input directory {} does not exist",
                    input.display()
                )));
            }
            let written = plots::emit_plot_data(&input)?;
            println!(
                "wrote {written} series file(s) to {}",
                input.join("plots").display()
            );
            Ok(())
        }
    }
}
