//! `chipfire` command-line frontend.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or precondition
//! error, 3 resource cap reached.

#[macro_use]
mod output;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use chipfire::{Preset, Strategy, Variant};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "chipfire",
    version,
    about = "Labeled chip-firing on the integer line"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one firing sequence to completion.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Abort after this many moves.
        #[arg(long)]
        move_cap: Option<u64>,
        /// Write the run as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run several seeds and check each against the closed forms and the
    /// position bounds that apply.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// First seed; runs use consecutive seeds.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        runs: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build the firing-order poset and optionally check its structure.
    Poset {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, default_value_t = chipfire::poset::DEFAULT_STATE_CAP)]
        state_cap: usize,
        #[arg(long, value_enum)]
        check: Option<PosetCheck>,
        /// Write the Hasse diagram in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Search every reachable labeled state and list the terminals.
    Explore {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, default_value_t = 5_000_000)]
        state_cap: usize,
        /// Write a run ending unsorted, if one exists.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Produce a run that ends unsorted.
    Counterexample {
        case: Case,
        /// Chip count for `odd`, `m` for `loops-1mod4` (4m + 1 chips).
        #[arg(long)]
        size: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5_000_000)]
        state_cap: usize,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct LatticeArgs {
    #[arg(long, value_enum, default_value_t = VariantKind::Base)]
    variant: VariantKind,
    /// Parallel edges for `multi-edge` and `loops-edges`.
    #[arg(long)]
    r: Option<u32>,
    /// Origin self-loops for `origin-loops`.
    #[arg(long)]
    s: Option<u32>,
    /// Exponent for `exponential`.
    #[arg(long)]
    t: Option<u32>,
    /// Chip count. Defaults to 2^(t+2) for `exponential`.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    #[arg(long, value_enum, default_value_t = PresetArg::Origin)]
    preset: PresetArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::Random)]
    strategy: StrategyArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantKind {
    Base,
    MultiEdge,
    OriginLoops,
    Loops,
    LoopsEdges,
    Exponential,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Origin,
    Staircase,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Leftmost,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum PosetCheck {
    Grid,
    Expgrid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    Odd,
    #[value(name = "loops-1mod4")]
    Loops1Mod4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Cap(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Cap(_) => 3,
        }
    }
}

impl LatticeArgs {
    fn variant(&self) -> Result<Variant, CliError> {
        let need = |v: Option<u32>, flag: &str| {
            v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this variant")))
        };
        Ok(match self.variant {
            VariantKind::Base => Variant::Base,
            VariantKind::MultiEdge => Variant::MultiEdge {
                r: need(self.r, "r")?,
            },
            VariantKind::OriginLoops => Variant::OriginLoops {
                s: need(self.s, "s")?,
            },
            VariantKind::Loops => Variant::LoopsEverywhere,
            VariantKind::LoopsEdges => Variant::LoopsAndEdges {
                r: need(self.r, "r")?,
            },
            VariantKind::Exponential => Variant::Exponential {
                t: need(self.t, "t")?,
            },
        })
    }

    fn n(&self, variant: &Variant) -> Result<usize, CliError> {
        match (self.n, variant) {
            (Some(n), _) => Ok(n),
            (None, Variant::Exponential { t }) if *t < 60 => Ok(1 << (t + 2)),
            _ => Err(CliError::Usage("--n is required".into())),
        }
    }
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Origin => Preset::Origin,
            PresetArg::Staircase => Preset::Staircase,
        }
    }
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Leftmost => Strategy::Leftmost,
            StrategyArg::Random => Strategy::Random,
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            run,
            seed,
            move_cap,
            trace,
            report,
        } => {
            let variant = run.lattice.variant()?;
            let n = run.lattice.n(&variant)?;
            commands::simulate(commands::SimulateRun {
                variant,
                n,
                preset: run.preset.into(),
                strategy: run.strategy.into(),
                seed,
                move_cap,
                trace,
                report,
            })
        }
        Command::Verify {
            run,
            seed,
            runs,
            report,
        } => {
            let variant = run.lattice.variant()?;
            let n = run.lattice.n(&variant)?;
            commands::verify(commands::VerifyRun {
                variant,
                n,
                preset: run.preset.into(),
                strategy: run.strategy.into(),
                first_seed: seed,
                runs,
                report,
            })
        }
        Command::Poset {
            lattice,
            state_cap,
            check,
            dot,
            report,
        } => {
            let variant = lattice.variant()?;
            let n = lattice.n(&variant)?;
            let check = check.map(|c| match c {
                PosetCheck::Grid => commands::StructureCheck::Grid,
                PosetCheck::Expgrid => commands::StructureCheck::Exponential,
            });
            commands::poset(variant, n, state_cap, check, dot, report)
        }
        Command::Explore {
            lattice,
            state_cap,
            trace,
            report,
        } => {
            let variant = lattice.variant()?;
            let n = lattice.n(&variant)?;
            commands::explore(variant, n, state_cap, trace, report)
        }
        Command::Counterexample {
            case,
            size,
            seed,
            state_cap,
            trace,
            report,
        } => match case {
            Case::Odd => commands::odd_counterexample(size, state_cap, trace, report),
            Case::Loops1Mod4 => commands::loops_counterexample(size, seed, trace, report),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn variant_flags_are_required_where_used() {
        let cli =
            Cli::try_parse_from(["chipfire", "poset", "--variant", "loops-edges", "--n", "14"])
                .unwrap();
        let Command::Poset { lattice, .. } = cli.command else {
            panic!()
        };
        assert!(matches!(lattice.variant(), Err(CliError::Usage(_))));

        let cli =
            Cli::try_parse_from(["chipfire", "poset", "--variant", "exponential", "--t", "2"])
                .unwrap();
        let Command::Poset { lattice, .. } = cli.command else {
            panic!()
        };
        let v = lattice.variant().unwrap();
        assert_eq!(v, Variant::Exponential { t: 2 });
        assert_eq!(lattice.n(&v).unwrap(), 16);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Failed(String::new()).code(), 1);
        assert_eq!(CliError::Usage(String::new()).code(), 2);
        assert_eq!(CliError::Cap(String::new()).code(), 3);
    }
}
