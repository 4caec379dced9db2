use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use polyscreen::cli::config::RunConfig;
use polyscreen::cli::pipeline::PipelineOptions;
use polyscreen::fem::PreconditionerKind;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Precond {
    Fdm,
    Jacobi,
    Identity,
}

/// Polynomial-screen particle-mesh potentials for periodic point charges.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// Run configuration (`key = value` lines).
    config: PathBuf,
    /// Table cache file, written when absent.
    #[arg(long)]
    table_cache: Option<PathBuf>,
    /// Skip the Ewald comparison in pipeline mode.
    #[arg(long)]
    no_oracle: bool,
    /// Mesh-solve preconditioner.
    #[arg(long, value_enum, default_value = "fdm")]
    preconditioner: Precond,
    /// Iteration cap for the mesh solve.
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = RunConfig::from_file(&args.config).and_then(|cfg| {
        let opts = PipelineOptions {
            table_cache: args.table_cache.clone(),
            oracle: !args.no_oracle,
            preconditioner: match args.preconditioner {
                Precond::Fdm => PreconditionerKind::FastDiagonalization,
                Precond::Jacobi => PreconditionerKind::Jacobi,
                Precond::Identity => PreconditionerKind::Identity,
            },
            max_iter: args.max_iter,
        };
        polyscreen::cli::run(&cfg, &opts)
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
