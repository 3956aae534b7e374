use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use embprobe::config::{Overrides, SynthOverrides};
use embprobe::pipeline;
use embprobe::{CliError, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "embprobe", version, about = "Cluster contextualized word embeddings and explore the clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize the corpus into the sentence manifest.
    Ingest,
    /// Generate a synthetic corpus and layer files.
    Synth(SynthOverrides),
    /// Fit k-means for each selected layer.
    Cluster,
    /// Compute statistics bundles for each selected layer.
    Stats,
    /// Serve the query API.
    Serve,
    /// Run every stage, then serve.
    All {
        #[command(flatten)]
        synth: SynthOverrides,
        /// Stop after writing statistics.
        #[arg(long)]
        no_serve: bool,
    },
}

fn layers(config: &PipelineConfig) -> Result<Vec<u32>, CliError> {
    pipeline::selected_layers(config, &pipeline::catalog(config)?)
}

fn serve(config: &PipelineConfig) -> Result<(), CliError> {
    tokio::runtime::Runtime::new()
        .map_err(|e| CliError::Invariant(format!("tokio runtime: {e}")))?
        .block_on(pipeline::cmd_serve(config))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = cli.overrides.resolve()?;
    match cli.command {
        Command::Ingest => {
            let path = pipeline::cmd_ingest(&config)?;
            println!("{}", path.display());
        }
        Command::Synth(s) => {
            s.apply(&mut config.synth);
            pipeline::cmd_synth(&config)?;
        }
        Command::Cluster => {
            for layer in layers(&config)? {
                let r = pipeline::cmd_cluster(&config, layer)?;
                println!("layer {layer}: sse {:.6} {}", r.sse, r.sha256);
            }
        }
        Command::Stats => {
            for layer in layers(&config)? {
                println!("{}", pipeline::cmd_stats(&config, layer)?.display());
            }
        }
        Command::Serve => serve(&config)?,
        Command::All { synth, no_serve } => {
            synth.apply(&mut config.synth);
            let summary = pipeline::run_all(&config)?;
            for r in &summary.clusters {
                println!("layer {}: sse {:.6} {}", r.layer, r.sse, r.sha256);
            }
            if !no_serve {
                serve(&config)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
