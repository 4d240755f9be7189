//! `privgauge`: generate synthetic clinical text, train small language
//! models with and without differential privacy, attack them, and audit the
//! privacy-utility tradeoff.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use privgauge_cli::{
    cmd_attack, cmd_audit, cmd_eval_utility, cmd_gen_data, cmd_report, cmd_sweep, cmd_train,
    exit_codes, verdict_exit_code, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "privgauge",
    about = "Privacy-utility audit loop for small language models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// JSON run configuration; defaults cover a full desk-scale run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config file and PRIVGAUGE_OUTPUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for gradient computations (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus files and manifest.
    GenData {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Pretrain (cached) and fine-tune one configuration.
    Train {
        #[command(flatten)]
        common: CommonOpts,
        /// Name for the stored model (models/<label>.bin).
        #[arg(long)]
        label: String,
        /// Privacy budget; omit for the non-private baseline.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Membership-inference attack against a stored model.
    Attack {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        label: String,
    },
    /// Perplexity of a stored model on the general corpus.
    EvalUtility {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        label: String,
    },
    /// Baseline plus every configured budget: Pareto CSV and sweep report.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Feedback search over budgets; exits 0 (accepted) or 4 (infeasible).
    Audit {
        #[command(flatten)]
        common: CommonOpts,
        /// Override the privacy threshold (max attack advantage).
        #[arg(long)]
        max_advantage: Option<f64>,
        /// Override the utility threshold (min utility score).
        #[arg(long)]
        min_utility: Option<f64>,
    },
    /// Validate a stored report; exit code mirrors its verdict.
    Report {
        /// Path to a report.json produced by sweep or audit.
        #[arg(long)]
        input: PathBuf,
        /// Also render the report as Markdown to this path.
        #[arg(long)]
        markdown: Option<PathBuf>,
    },
}

fn load_config(common: &CommonOpts) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref(), common.out.as_deref())?;
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok(); // a second initialization in-process is harmless
    }
    Ok(cfg)
}

fn run() -> anyhow::Result<u8> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenData { common } => {
            cmd_gen_data(&load_config(&common)?)?;
            Ok(exit_codes::ACCEPTED)
        }
        Command::Train {
            common,
            label,
            epsilon,
        } => {
            cmd_train(&load_config(&common)?, &label, epsilon)?;
            Ok(exit_codes::ACCEPTED)
        }
        Command::Attack { common, label } => {
            cmd_attack(&load_config(&common)?, &label)?;
            Ok(exit_codes::ACCEPTED)
        }
        Command::EvalUtility { common, label } => {
            cmd_eval_utility(&load_config(&common)?, &label)?;
            Ok(exit_codes::ACCEPTED)
        }
        Command::Sweep { common } => {
            cmd_sweep(&load_config(&common)?)?;
            Ok(exit_codes::ACCEPTED)
        }
        Command::Audit {
            common,
            max_advantage,
            min_utility,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(v) = max_advantage {
                cfg.thresholds.max_advantage = v;
            }
            if let Some(v) = min_utility {
                cfg.thresholds.min_utility = v;
            }
            let run = cmd_audit(&cfg)?;
            Ok(verdict_exit_code(run.report.verdict))
        }
        Command::Report { input, markdown } => {
            let verdict = cmd_report(&input, markdown.as_deref())?;
            Ok(verdict_exit_code(verdict))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_codes::OPERATIONAL_ERROR)
        }
    }
}
