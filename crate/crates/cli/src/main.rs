use std::path::PathBuf;
use std::process::ExitCode;

use auctionkit_cli::builtins;
use auctionkit_cli::{emit, exit_code, load, prepare, run_scenario, scenario_dir, summary_text, Analysis, Overrides};
use clap::{Parser, Subcommand};

/// Competitive and individual efficiency analyses for pay-your-bid
/// auctions.
///
/// CONFIG arguments are file paths or `builtin:<name>`.
#[derive(Parser)]
#[command(name = "auctionkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for sampled searches.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Points on the bid grid.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Default tolerance for expectations.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Largest number of profiles or table rows enumerated.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Output directory; one subdirectory per scenario.
    #[arg(long, global = true, env = "AUCTIONKIT_OUT")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Competitive efficiency over the bid grid.
    Ce { #[arg(required = true)] configs: Vec<String> },
    /// Individual efficiency of each agent's outcome.
    Ie { #[arg(required = true)] configs: Vec<String> },
    /// Welfare and revenue bounds, with the efficiencies they use.
    Bounds { #[arg(required = true)] configs: Vec<String> },
    /// Grid regret of the configured strategy profile.
    Equilibrium { #[arg(required = true)] configs: Vec<String> },
    /// The canonical examples (all of them when no name is given).
    Examples { names: Vec<String> },
    /// Every analysis a config declares; all built-ins when none is given.
    All { configs: Vec<String> },
    /// Print a built-in config (all names when none is given).
    Show { name: Option<String> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides { grid: cli.grid, tol: cli.tol, seed: cli.seed, budget: cli.budget };
    let (configs, only): (Vec<String>, Option<&[Analysis]>) = match &cli.command {
        Command::Ce { configs } => (configs.clone(), Some(&[Analysis::Ce])),
        Command::Ie { configs } => (configs.clone(), Some(&[Analysis::Ie])),
        Command::Bounds { configs } => (configs.clone(), Some(&[Analysis::Ce, Analysis::Ie, Analysis::Bounds])),
        Command::Equilibrium { configs } => (configs.clone(), Some(&[Analysis::Regret])),
        Command::Examples { names } => {
            let names: Vec<&str> = if names.is_empty() { builtins::CANONICAL.to_vec() } else { names.iter().map(String::as_str).collect() };
            (names.iter().map(|n| format!("builtin:{n}")).collect(), None)
        }
        Command::All { configs } if configs.is_empty() => (builtins::names().map(|n| format!("builtin:{n}")).collect(), None),
        Command::All { configs } => (configs.clone(), None),
        Command::Show { name: None } => {
            builtins::names().for_each(|n| println!("{n}"));
            return ExitCode::SUCCESS;
        }
        Command::Show { name: Some(name) } => {
            return match load(&format!("builtin:{name}")) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code())
                }
            };
        }
    };

    let mut scenarios = Vec::new();
    for arg in &configs {
        match load(arg).and_then(|text| prepare(&text, overrides, only)) {
            Ok(s) => scenarios.push(s),
            Err(e) => {
                eprintln!("{arg}: {e}");
                return ExitCode::from(e.exit_code());
            }
        }
    }

    let default_out = PathBuf::from("auctionkit-out");
    let mut bundles = Vec::new();
    for s in &scenarios {
        let bundle = run_scenario(s);
        let dir = scenario_dir(cli.out.as_deref(), s, &default_out);
        if let Err(e) = emit(&bundle, &dir) {
            eprintln!("{}: {e}", dir.display());
            return ExitCode::from(e.exit_code());
        }
        bundles.push(bundle);
    }
    let refs: Vec<_> = bundles.iter().collect();
    let text = summary_text(&refs);
    print!("{text}");
    if scenarios.len() > 1 {
        let base = cli.out.clone().unwrap_or(default_out);
        if let Err(e) = std::fs::write(base.join("summary.txt"), &text) {
            eprintln!("{}: {e}", base.display());
        }
    }
    ExitCode::from(exit_code(&bundles))
}
