use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gatescope::cli::{self, ExperimentConfig};
use gatescope::error::Error;

#[derive(Parser)]
#[command(
    name = "gatescope",
    about = "LSTM language models over linearized treebanks, with gate-vector probing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured synthetic corpus.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Override the number of sentences to generate.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Linearize the tree corpus into tokens plus annotations.
    Convert {
        #[command(flatten)]
        common: Common,
        /// Override the linearization scenario.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Train the language model and write checkpoint, metrics and confusion.
    Train {
        #[command(flatten)]
        common: Common,
        /// Override the number of epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Override both the embedding and state dimensionality.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Record gate traces of the checkpoint over the traced split.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Also write a lossy CSV export of the traces.
        #[arg(long)]
        csv: bool,
    },
    /// Run the configured probes over the recorded traces.
    Probe {
        #[command(flatten)]
        common: Common,
    },
    /// Consolidate the run directory into a single report.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        cfg.train.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run() -> Result<(), Error> {
    match Cli::parse().command {
        Command::Gen { common, n } => {
            let mut cfg = load(&common)?;
            if let Some(n) = n {
                match &mut cfg.corpus {
                    cli::CorpusSpec::Pcfg { n: slot, .. } | cli::CorpusSpec::Dyck { n: slot, .. } => {
                        *slot = n
                    }
                    _ => return Err(Error::invalid("--n applies only to generated corpora")),
                }
            }
            let files = cli::cmd_gen(&cfg)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Convert { common, scenario } => {
            let mut cfg = load(&common)?;
            if let Some(s) = scenario {
                cfg.scenario = s.parse()?;
            }
            let files = cli::cmd_convert(&cfg)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Train {
            common,
            epochs,
            dim,
        } => {
            let mut cfg = load(&common)?;
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(d) = dim {
                cfg.train.embed_dim = d;
                cfg.train.state_dim = d;
            }
            let report = cli::cmd_train(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Trace { common, csv } => {
            let cfg = load(&common)?;
            let files = cli::cmd_trace(&cfg, csv)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Probe { common } => {
            let cfg = load(&common)?;
            let files = cli::cmd_probe(&cfg)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Report { common } => {
            let cfg = load(&common)?;
            let path = cli::cmd_report(&cfg)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
