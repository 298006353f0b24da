use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use forceful_cli::{
    cmd_ablate, cmd_robustness, cmd_solve, cmd_validate, CliError, Overrides, Scenario, Sweep,
    DEFAULT_PLACEMENTS,
};

/// Plans forceful manipulation: twisting a childproof bottle lid or a nut.
#[derive(Parser)]
#[command(name = "forceful", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON or JSON5).
    scenario: PathBuf,
    /// Seed for the planner's samplers and the perturbation draws.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated strategy codes to switch off: gt,pt,ft,tt,sft,sfm,rf,vf.
    #[arg(long, value_delimiter = ',')]
    disable: Vec<String>,
    /// Perturbation samples per cost estimate.
    #[arg(long)]
    samples: Option<usize>,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Plan the scenario's operation and write plan.json.
    Solve(Common),
    /// Solve once per strategy with the shorter ones switched off; writes ablation.csv.
    Ablate(Common),
    /// Cost of each method across a sweep; writes robustness.csv.
    Robustness {
        #[command(flatten)]
        common: Common,
        /// `force:min:max:steps` (bottle) or `mass:min:max:steps` (nut).
        #[arg(long)]
        sweep: Option<Sweep>,
        /// Nut only: weight placements drawn per mass.
        #[arg(long, default_value_t = DEFAULT_PLACEMENTS)]
        placements: usize,
    },
    /// Check a plan file against a scenario.
    Validate {
        scenario: PathBuf,
        plan: PathBuf,
    },
}

// like println!, but a closed pipe (`forceful ... | head`) is not an error
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

fn load(c: &Common) -> Result<Scenario, CliError> {
    let mut s = Scenario::load(&c.scenario)?;
    s.apply(&Overrides {
        seed: c.seed,
        disable: c.disable.clone(),
        samples: c.samples,
    })?;
    Ok(s)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(c) => {
            let report = cmd_solve(&load(&c)?, &c.out)?;
            say!("{}", report.summary());
        }
        Command::Ablate(c) => {
            for r in cmd_ablate(&load(&c)?, &c.out)? {
                let status = if r.solved { format!("{} steps, cost {:.4}", r.steps, r.cost) } else { "unsolved".into() };
                say!("{:<12} {status}  ({:.2} s)", r.strategy, r.wall_time);
            }
            say!("wrote {}", c.out.join("ablation.csv").display());
        }
        Command::Robustness { common, sweep, placements } => {
            let rows = cmd_robustness(&load(&common)?, sweep.as_ref(), placements, &common.out)?;
            for r in &rows {
                say!("{:>8.3} {:<8} p {:.4}  cost {:.4}", r.sweep_value, r.method, r.probability, r.cost);
            }
            say!("wrote {}", common.out.join("robustness.csv").display());
        }
        Command::Validate { scenario, plan } => {
            let report = cmd_validate(&Scenario::load(&scenario)?, &plan)?;
            if !report.violations.is_empty() {
                for v in &report.violations {
                    eprintln!("{v:?}");
                }
                return Err(CliError::Planner(format!("{} violation(s)", report.violations.len())));
            }
            say!("valid, total cost {:.6}", report.total_cost);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("forceful: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
