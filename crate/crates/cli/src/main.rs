use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hd::{execute, init_threads, Command, Invocation};

#[derive(Parser)]
#[command(name = "hd", version, about = "Heat dispersion of condensers on triangulated surfaces")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `output`, else `out/<config stem>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generator resolution override (file meshes: number of refinements).
    #[arg(long)]
    refine: Option<u32>,
    /// Leave timings out of the outputs so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let inv = Invocation {
        command: cli.command,
        config: cli.config,
        out: cli.out,
        refine: cli.refine,
        deterministic: cli.deterministic,
    };
    let result = init_threads().and_then(|_| execute(&inv));
    match result {
        Ok(bundle) => {
            if let Some(s) = bundle.get("summary.txt") {
                print!("{s}");
            }
            println!("wrote {}", bundle.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
