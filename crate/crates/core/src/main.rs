use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ultirate::cli::{run, Command, MethodSelector, RunConfig};
use ultirate::synth::{Schedule, SynthSpec};
use ultirate::{Division, Stage};

/// Rate ultimate teams with the USAU power rating and least squares, and
/// score both against the season's results.
#[derive(Parser, Debug)]
#[command(name = "ultirate", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write one rating CSV per (season, division, method) into --output.
    Rate(Common),
    /// Write per-game margin predictions to --output.
    Predict(Common),
    /// Write MAD / MSE / ranking-violation rows to --output.
    Evaluate(Common),
    /// Print (or write) a side-by-side top-N table.
    Top(Common),
    /// Generate a synthetic season as a game CSV.
    Synth(SynthArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MethodArg {
    Usau,
    Leastsq,
    Both,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum DivisionArg {
    Mens,
    Mixed,
    Womens,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum StageArg {
    Regular,
    Post,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ScheduleArg {
    RoundRobin,
    Pods,
    Random,
}

impl From<DivisionArg> for Division {
    fn from(d: DivisionArg) -> Self {
        match d {
            DivisionArg::Mens => Division::Mens,
            DivisionArg::Mixed => Division::Mixed,
            DivisionArg::Womens => Division::Womens,
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// Game CSV file or directory of CSV files; repeatable.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Output file (directory for `rate`; stdout for `top` when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    #[arg(long)]
    season: Option<i32>,
    #[arg(long, value_enum)]
    division: Option<DivisionArg>,
    #[arg(long, value_enum, default_value = "regular")]
    stage: StageArg,
    #[arg(long, default_value_t = 25)]
    top_n: usize,
    /// USAU convergence tolerance in rating points.
    #[arg(long)]
    tol: Option<f64>,
    /// USAU iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Least-squares reference goal cap.
    #[arg(long)]
    ref_cap: Option<f64>,
    /// Fail with a distinct exit code if any USAU run does not converge.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 20)]
    teams: usize,
    /// True ratings are spaced evenly over [-spread, spread].
    #[arg(long, default_value_t = 10.0)]
    spread: f64,
    #[arg(long, value_enum, default_value = "round-robin")]
    schedule: ScheduleArg,
    #[arg(long, default_value_t = 4)]
    pod_size: usize,
    /// Number of games for the random schedule.
    #[arg(long, default_value_t = 100)]
    games: usize,
    /// Margin noise standard deviation, in goals.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 15)]
    cap: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2019)]
    season: i32,
    #[arg(long, value_enum, default_value = "mixed")]
    division: DivisionArg,
    #[arg(long, default_value_t = 10)]
    weeks: u32,
}

fn config_from(command: Command, c: Common) -> RunConfig {
    let mut cfg = RunConfig {
        command,
        inputs: c.input,
        output: c.output,
        method: match c.method {
            MethodArg::Usau => MethodSelector::Usau,
            MethodArg::Leastsq => MethodSelector::Leastsq,
            MethodArg::Both => MethodSelector::Both,
        },
        season: c.season,
        division: c.division.map(Division::from),
        stage: match c.stage {
            StageArg::Regular => Stage::Regular,
            StageArg::Post => Stage::Post,
        },
        top_n: c.top_n,
        strict: c.strict,
        ..RunConfig::default()
    };
    if let Some(tol) = c.tol {
        cfg.usau.convergence_tol = tol;
    }
    if let Some(n) = c.max_iters {
        cfg.usau.max_iterations = n;
    }
    if let Some(cap) = c.ref_cap {
        cfg.leastsq.reference_cap = cap;
    }
    cfg
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let config = match cli.command {
        Cmd::Rate(c) => config_from(Command::Rate, c),
        Cmd::Predict(c) => config_from(Command::Predict, c),
        Cmd::Evaluate(c) => config_from(Command::Evaluate, c),
        Cmd::Top(c) => config_from(Command::Top, c),
        Cmd::Synth(s) => RunConfig {
            command: Command::Synth,
            output: Some(s.output),
            synth: SynthSpec {
                schedule: match s.schedule {
                    ScheduleArg::RoundRobin => Schedule::RoundRobin,
                    ScheduleArg::Pods => Schedule::Pods(s.pod_size),
                    ScheduleArg::Random => Schedule::Random { games: s.games },
                },
                noise_sd: s.noise,
                cap: s.cap,
                seed: s.seed,
                season: s.season,
                division: s.division.into(),
                weeks: s.weeks,
                ..SynthSpec::linear(s.teams, -s.spread, s.spread)
            },
            ..RunConfig::default()
        },
    };
    match run(&config) {
        Ok(summary) => {
            for path in &summary.files_written {
                log::info!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
