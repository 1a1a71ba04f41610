//! `c2po`: extract plot outlines, build plot graphs, generate and measure
//! stories.
//!
//! Exit codes: 0 success, 1 input/parse/I/O error, 2 insufficient plot,
//! 3 backend failure, 4 invalid graph, 64 usage or configuration error.

mod commands;
mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use c2po::{ClusterStrategy, LinkScope, WalkMode};
use clap::{Args, Parser, Subcommand};

use config::{parse_link_scope, BackendSpec, Overrides, RunConfig};

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_PLOT: u8 = 2;
pub const EXIT_BACKEND: u8 = 3;
pub const EXIT_GRAPH: u8 = 4;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }
}

/// Writes through a temporary file in the destination directory, so a
/// reader sees either the old file or the complete new one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: &dyn std::fmt::Display| CliError::new(EXIT_INPUT, format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| fail(&e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(bytes).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

#[derive(Parser)]
#[command(name = "c2po", version, about = "Character-centric plot graphs and story generation")]
struct Cli {
    #[command(flatten)]
    run: RunFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// TOML file with run settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// table:<path> or http:<url>.
    #[arg(long, global = true)]
    backend: Option<BackendSpec>,
    /// Inferences kept per expansion.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Expansion depth of each branch.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of stories to generate.
    #[arg(long, global = true)]
    count: Option<usize>,
    /// largest, random or name:<x>.
    #[arg(long, global = true)]
    cluster: Option<ClusterStrategy>,
    /// weighted or uniform.
    #[arg(long, global = true)]
    walk: Option<WalkMode>,
    /// frontier or all-nodes.
    #[arg(long, global = true, value_parser = parse_link_scope)]
    link_scope: Option<LinkScope>,
}

#[derive(Subcommand)]
enum Command {
    /// Annotated story (or outline JSON) to plot outline JSON.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Outline JSON to story graph JSON.
    Graph {
        #[arg(long)]
        outline: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a Graphviz rendering.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Story graph to story files and a manifest.
    Generate {
        #[arg(long)]
        graph: PathBuf,
        /// Realize plot points from the outline instead of node text.
        #[arg(long)]
        outline: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Also write each story as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Corpus statistics for a directory of stories.
    Stats {
        /// Directory of *.txt stories.
        #[arg(long)]
        input: PathBuf,
        /// Text the n-gram novelty is measured against.
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// extract, graph, generate and stats in one go.
    Pipeline {
        #[arg(long)]
        input: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the annotated story's own text.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Also write each story as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let flags = Overrides {
        k: cli.run.k,
        n: cli.run.n,
        seed: cli.run.seed,
        count: cli.run.count,
        cluster: cli.run.cluster,
        walk: cli.run.walk,
        link_scope: cli.run.link_scope,
        backend: cli.run.backend,
    };
    let cfg = RunConfig::resolve(cli.run.config.as_deref(), &flags)?;
    if cli.run.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    match cli.command {
        Command::Extract { input, out } => commands::cmd_extract(&input, &out, &cfg),
        Command::Graph { outline, out, dot } => commands::cmd_graph(&outline, &out, dot.as_deref(), &cfg),
        Command::Generate {
            graph,
            outline,
            out,
            json,
        } => commands::cmd_generate(&graph, outline.as_deref(), &out, json, &cfg),
        Command::Stats { input, reference, json } => {
            print!("{}", commands::cmd_stats(&input, &reference, json)?);
            Ok(())
        }
        Command::Pipeline {
            input,
            out,
            reference,
            dot,
            json,
        } => {
            let args = commands::PipelineArgs {
                input: &input,
                out: &out,
                reference: reference.as_deref(),
                dot: dot.as_deref(),
                json,
            };
            print!("{}", commands::cmd_pipeline(args, &cfg)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("c2po: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
