//! `nmx`: solve, verify and export finite decentralized minimax problems.

mod cmd;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nmx::pursuit::{PursuitParams, Surround, TargetView};

/// Exit codes. Stable and documented in the README.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const INVALID: u8 = 4;
    pub const RESOURCE: u8 = 5;
    pub const VERIFY_FAIL: u8 = 6;
    pub const INTERNAL: u8 = 7;
}

#[derive(Debug, Parser)]
#[command(
    name = "nmx",
    version,
    about = "Exact minimax solver for nested decentralized control"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(flatten)]
    pub caps: Caps,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Caps {
    /// Cap on information states per time step.
    #[arg(
        long,
        global = true,
        env = "NMX_MAX_INFOSTATES",
        default_value_t = 1_000_000
    )]
    pub max_infostates: usize,

    /// Cap on candidate complete actions evaluated by one backup.
    #[arg(
        long,
        global = true,
        env = "NMX_MAX_CANDIDATES",
        default_value_t = 20_000_000
    )]
    pub max_candidates: usize,

    /// Cap on search nodes visited by the brute-force oracle.
    #[arg(
        long,
        global = true,
        env = "NMX_ORACLE_CAP",
        default_value_t = 50_000_000
    )]
    pub oracle_cap: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a model file with the information-state dynamic program.
    Solve(SolveArgs),
    /// Compare the dynamic program against the brute-force oracle.
    Verify(VerifyArgs),
    /// Solve the two-agent target surrounding example.
    Pursuit(PursuitArgs),
    /// Write a generated model in the model-file format.
    Export {
        #[command(subcommand)]
        what: ExportWhat,
    },
}

#[derive(Debug, Args)]
pub struct Outputs {
    /// Write the solved strategy profile here.
    #[arg(long)]
    pub export_strategy: Option<PathBuf>,

    /// Write the value table here.
    #[arg(long)]
    pub value_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub model: PathBuf,

    #[command(flatten)]
    pub out: Outputs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Up to two subsystems with up to two agents each.
    Default,
    /// Three single-agent subsystems.
    ThreeLevels,
    /// The default family with stage costs.
    Additive,
}

impl Family {
    pub fn params(self) -> nmx::random::InstanceParams {
        use nmx::random::InstanceParams;
        match self {
            Family::Default => InstanceParams::default(),
            Family::ThreeLevels => InstanceParams::three_levels(),
            Family::Additive => InstanceParams::additive(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Default => "default",
            Family::ThreeLevels => "three-levels",
            Family::Additive => "additive",
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Model file. Without it, random instances are generated.
    #[arg(conflicts_with_all = ["seed", "count", "family"])]
    pub model: Option<PathBuf>,

    /// First random seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of consecutive seeds.
    #[arg(long)]
    pub count: Option<u64>,

    #[arg(long, value_enum)]
    pub family: Option<Family>,

    /// Test hook: add this amount to the solved value before comparing.
    #[arg(long, hide = true, allow_hyphen_values = true)]
    pub corrupt_value: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurroundArg {
    Inclusive,
    Exclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ViewArg {
    Delayed,
    Immediate,
}

#[derive(Debug, Clone, Args)]
pub struct PursuitSpec {
    /// Grid size.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(2..=64))]
    pub lambda: u32,

    /// Horizon.
    #[arg(long = "t", default_value_t = 3)]
    pub horizon: usize,

    /// Penalty for failing to surround the target.
    #[arg(short = 'D', long = "penalty", default_value_t = 10, value_parser = clap::value_parser!(i64).range(1..))]
    pub penalty: i64,

    /// Initial position of agent 1.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub x1: Option<u32>,

    /// Initial position of agent 2.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub x2: Option<u32>,

    /// Initial common observation of the target.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub y0: Option<u32>,

    #[arg(long, value_enum, default_value_t = SurroundArg::Inclusive)]
    pub surround: SurroundArg,

    /// When agent 2's target measurement may drive its own action.
    #[arg(long, value_enum, default_value_t = ViewArg::Delayed)]
    pub view: ViewArg,
}

impl PursuitSpec {
    pub fn rule(&self) -> Surround {
        match self.surround {
            SurroundArg::Inclusive => Surround::Inclusive,
            SurroundArg::Exclusive => Surround::Exclusive,
        }
    }

    pub fn view(&self) -> TargetView {
        match self.view {
            ViewArg::Delayed => TargetView::Delayed,
            ViewArg::Immediate => TargetView::Immediate,
        }
    }

    pub fn params(&self) -> Result<PursuitParams, String> {
        let need = |v: Option<u32>, name: &str| v.ok_or(format!("--{name} is required"));
        let p = PursuitParams {
            lambda: self.lambda,
            horizon: self.horizon,
            penalty: self.penalty,
            x1: need(self.x1, "x1")?,
            x2: need(self.x2, "x2")?,
            y0: need(self.y0, "y0")?,
            view: self.view(),
        };
        p.check().map_err(|e| e.to_string())?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct PursuitArgs {
    /// Solve the four benchmark initial conditions (grid 8, horizon 3,
    /// penalty 10).
    #[arg(long, conflicts_with_all = ["x1", "x2", "y0", "lambda", "horizon", "penalty", "oracle"])]
    pub table1: bool,

    #[command(flatten)]
    pub spec: PursuitSpec,

    /// Also solve with the brute-force oracle and compare.
    #[arg(long)]
    pub oracle: bool,

    #[command(flatten)]
    pub out: Outputs,
}

#[derive(Debug, Subcommand)]
pub enum ExportWhat {
    /// The target surrounding example.
    Pursuit {
        #[command(flatten)]
        spec: PursuitSpec,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// A seeded random instance.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Family::Default)]
        family: Family,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            });
        }
    };
    if let Some(j) = cli.jobs {
        nmx::exec::set_jobs(j.max(1));
    }
    let start = std::time::Instant::now();
    let result = cmd::run(&cli);
    eprintln!("wall_time_ms={}", start.elapsed().as_millis());
    match result {
        Ok(out) => {
            print!("{}", out.report);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
