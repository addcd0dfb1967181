use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radpair::commands::{self, Artifacts, Overrides};

#[derive(Parser)]
#[command(name = "radpair", version, about = "Radical-pair spin dynamics: quantum-jump ensembles and master-equation reference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the method selected in the config (mcwf, me or compare).
    Run(Common),
    /// Run both methods and write their deviation.
    Compare(Common),
    /// Error against the master equation as a function of sample size.
    Converge(Common),
    /// Runtime of both methods against the number of nuclei.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config, or a manifest.json from an earlier run.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: config, then $RADPAIR_OUT, then ./radpair-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            samples: self.samples,
            workers: self.workers,
            out: self.out.clone(),
        }
    }
}

fn report(a: &Artifacts) {
    for f in &a.files {
        println!("wrote {}", f.display());
    }
    println!("wrote {}", a.manifest.display());
    println!("{}", serde_json::to_string_pretty(&a.summary).unwrap_or_default());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&radpair::SimulationConfig) -> radpair::Result<Artifacts>) =
        match &cli.command {
            Command::Run(c) => (c, commands::run_command),
            Command::Compare(c) => (c, commands::compare_command),
            Command::Converge(c) => (c, commands::converge_command),
            Command::Bench(c) => (c, commands::bench_command),
        };
    let result = commands::load_config(&common.config, &common.overrides()).and_then(|cfg| run(&cfg));
    match result {
        Ok(a) => {
            report(&a);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
