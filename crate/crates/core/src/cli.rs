//! Run configuration and the command driver behind the `ultirate` binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::domain::{partition_seasons, Division, Method, RatingTable, SeasonKey, SeasonSlice, Stage, TeamId};
use crate::ingest::{self, fmt_real, IngestError};
use crate::leastsq::{compute_leastsq, LsError, LsParams};
use crate::metrics::{evaluate, MetricReport};
use crate::predict::{build_predictions, PredictParams, PredictError};
use crate::synth::{generate, SynthError, SynthSpec};
use crate::usau::{compute_usau, UsauError, UsauParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Rate,
    Predict,
    Evaluate,
    Top,
    Synth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MethodSelector {
    Usau,
    Leastsq,
    #[default]
    Both,
}

impl MethodSelector {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodSelector::Usau => vec![Method::Usau],
            MethodSelector::Leastsq => vec![Method::Leastsq],
            MethodSelector::Both => vec![Method::Leastsq, Method::Usau],
        }
    }
}

/// Everything a run depends on besides the input files.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub method: MethodSelector,
    pub season: Option<i32>,
    pub division: Option<Division>,
    pub stage: Stage,
    pub usau: UsauParams,
    pub leastsq: LsParams,
    pub top_n: usize,
    /// Treat USAU non-convergence as a failure.
    pub strict: bool,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Evaluate,
            inputs: Vec::new(),
            output: None,
            method: MethodSelector::Both,
            season: None,
            division: None,
            stage: Stage::Regular,
            usau: UsauParams::default(),
            leastsq: LsParams::default(),
            top_n: 25,
            strict: false,
            synth: SynthSpec::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IngestError),
    #[error("I/O error on {path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("USAU iteration did not converge for: {}", .0.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", "))]
    NonConvergence(Vec<SeasonKey>),
    #[error("no games match the season/division/stage filters")]
    EmptyFilter,
    #[error(transparent)]
    Usau(#[from] UsauError),
    #[error(transparent)]
    Leastsq(#[from] LsError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Synth(SynthError::InvalidSpec(_)) => 2,
            CliError::Io(_) | CliError::Fs { .. } => 3,
            CliError::NonConvergence(_) => 4,
            CliError::EmptyFilter => 5,
            _ => 1,
        }
    }
}

/// What a successful run did.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub files_written: Vec<PathBuf>,
    pub games_read: usize,
    pub rejected: usize,
    pub slices: usize,
    pub not_converged: Vec<SeasonKey>,
}

struct Loaded {
    slices: Vec<SeasonSlice>,
    games_read: usize,
    rejected: usize,
}

fn load(config: &RunConfig) -> Result<Loaded, CliError> {
    if config.inputs.is_empty() {
        return Err(CliError::Config("--input is required".into()));
    }
    let (games, rejections) = ingest::read_game_files(&config.inputs)?;
    for r in &rejections {
        log::warn!(
            "{} row {}: rejected ({})",
            r.path.display(),
            r.rejection.row,
            r.rejection.reason
        );
    }
    if !rejections.is_empty() {
        let mut by_code: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &rejections {
            *by_code.entry(r.rejection.reason.code()).or_default() += 1;
        }
        log::warn!("{} rows rejected: {:?}", rejections.len(), by_code);
    }
    let games_read = games.len();
    let filtered: Vec<_> = games
        .into_iter()
        .filter(|g| g.stage == config.stage)
        .filter(|g| config.season.is_none_or(|s| g.season == s))
        .filter(|g| config.division.is_none_or(|d| g.division == d))
        .collect();
    let slices = partition_seasons(&filtered);
    if slices.is_empty() {
        return Err(CliError::EmptyFilter);
    }
    Ok(Loaded {
        slices,
        games_read,
        rejected: rejections.len(),
    })
}

fn rate(slice: &SeasonSlice, method: Method, config: &RunConfig) -> Result<RatingTable, CliError> {
    let table = match method {
        Method::Usau => compute_usau(slice, &config.usau)?,
        Method::Leastsq => compute_leastsq(slice, &config.leastsq)?,
    };
    if !table.converged {
        log::warn!("{} {}: not converged after {} iterations", slice.key, method, table.iterations_used);
    }
    if table.component_count() > 1 {
        log::warn!(
            "{} {}: schedule graph has {} components; ratings across components are not comparable",
            slice.key,
            method,
            table.component_count()
        );
    }
    Ok(table)
}

/// Tables tagged with the index of their slice.
type SliceTables = Vec<(usize, RatingTable)>;

/// Rates every slice with every selected method, in (slice, method) order.
fn rate_all(loaded: &Loaded, config: &RunConfig) -> Result<(SliceTables, Vec<SeasonKey>), CliError> {
    let mut tables = Vec::new();
    let mut not_converged = Vec::new();
    for (i, slice) in loaded.slices.iter().enumerate() {
        for method in config.method.methods() {
            let table = rate(slice, method, config)?;
            if !table.converged {
                not_converged.push(slice.key);
            }
            tables.push((i, table));
        }
    }
    if config.strict && !not_converged.is_empty() {
        return Err(CliError::NonConvergence(not_converged));
    }
    Ok((tables, not_converged))
}

fn require_output(config: &RunConfig) -> Result<&Path, CliError> {
    config
        .output
        .as_deref()
        .ok_or_else(|| CliError::Config("--output is required for this command".into()))
}

/// File name used by `rate` for one table.
pub fn rating_file_name(key: &SeasonKey, method: Method) -> String {
    format!("ratings_{}_{}_{}_{}.csv", key.season, key.division, key.stage, method)
}

pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    config.usau.validate()?;
    config.leastsq.validate()?;
    let predict_params = PredictParams {
        usau: config.usau.clone(),
        leastsq: config.leastsq.clone(),
    };

    if config.command == Command::Synth {
        let out = require_output(config)?;
        let slice = generate(&config.synth)?;
        ingest::write_games(&slice.games, out)?;
        return Ok(RunSummary {
            files_written: vec![out.to_path_buf()],
            slices: 1,
            ..RunSummary::default()
        });
    }
    if config.command == Command::Top && config.top_n == 0 {
        return Err(CliError::Config("--top-n must be positive".into()));
    }
    let output = match config.command {
        Command::Top => config.output.as_deref(),
        _ => Some(require_output(config)?),
    };

    let loaded = load(config)?;
    let (tables, not_converged) = rate_all(&loaded, config)?;
    let mut summary = RunSummary {
        games_read: loaded.games_read,
        rejected: loaded.rejected,
        slices: loaded.slices.len(),
        not_converged,
        ..RunSummary::default()
    };

    match config.command {
        Command::Rate => {
            let dir = output.expect("checked above");
            fs::create_dir_all(dir).map_err(|source| CliError::Fs {
                path: dir.to_path_buf(),
                source,
            })?;
            for (_, table) in &tables {
                let path = dir.join(rating_file_name(&table.key, table.method));
                ingest::write_ratings(table, &path)?;
                summary.files_written.push(path);
            }
        }
        Command::Predict => {
            let path = output.expect("checked above");
            let sets = tables
                .iter()
                .map(|(i, t)| build_predictions(t, &loaded.slices[*i], &predict_params))
                .collect::<Result<Vec<_>, _>>()?;
            ingest::write_predictions(&sets, path)?;
            summary.files_written.push(path.to_path_buf());
        }
        Command::Evaluate => {
            let path = output.expect("checked above");
            let mut reports: Vec<MetricReport> = Vec::new();
            for (i, table) in &tables {
                let slice = &loaded.slices[*i];
                let set = build_predictions(table, slice, &predict_params)?;
                match evaluate(table, slice, &set) {
                    Ok(r) => reports.push(r),
                    Err(e) => log::warn!("{} {}: {}", slice.key, table.method, e),
                }
            }
            ingest::write_metrics(&reports, path)?;
            summary.files_written.push(path.to_path_buf());
        }
        Command::Top => {
            let text = top_table(&loaded.slices, &tables, config.top_n);
            match output {
                Some(path) => {
                    fs::write(path, text).map_err(|source| CliError::Fs {
                        path: path.to_path_buf(),
                        source,
                    })?;
                    summary.files_written.push(path.to_path_buf());
                }
                None => {
                    let mut stdout = io::stdout().lock();
                    stdout
                        .write_all(text.as_bytes())
                        .and_then(|_| stdout.flush())
                        .map_err(|source| CliError::Fs {
                            path: PathBuf::from("<stdout>"),
                            source,
                        })?;
                }
            }
        }
        Command::Synth => unreachable!("handled above"),
    }
    Ok(summary)
}

pub const TOP_COLUMNS: [&str; 8] = [
    "year",
    "division",
    "rank",
    "usau_team",
    "usau_rating",
    "leastsq_team",
    "leastsq_rating",
    "diff",
];

/// Ranked teams of a table, best first.
fn ranking(table: &RatingTable) -> Vec<(TeamId, f64)> {
    table
        .ordered()
        .into_iter()
        .filter(|(t, _)| table.is_ranked(t))
        .map(|(t, r)| (t.clone(), r))
        .collect()
}

/// Rank movement of a least-squares row: USAU rank minus least-squares rank,
/// so a positive value means the team sits higher under least squares.
pub fn rank_delta(usau_rank: Option<usize>, ls_rank: usize) -> String {
    match usau_rank {
        None => "NR".to_string(),
        Some(u) if u == ls_rank => "-".to_string(),
        Some(u) => format!("{:+}", u as i64 - ls_rank as i64),
    }
}

/// Side-by-side top-N CSV, one block per slice.
pub fn top_table(slices: &[SeasonSlice], tables: &[(usize, RatingTable)], n: usize) -> String {
    let mut out = String::new();
    out.push_str(&TOP_COLUMNS.join(","));
    out.push('\n');
    for (i, slice) in slices.iter().enumerate() {
        let find = |m: Method| tables.iter().find(|(j, t)| *j == i && t.method == m).map(|(_, t)| ranking(t));
        let usau = find(Method::Usau);
        let ls = find(Method::Leastsq);
        let rows = usau
            .as_ref()
            .map_or(0, Vec::len)
            .max(ls.as_ref().map_or(0, Vec::len))
            .min(n);
        for rank in 0..rows {
            let cell = |list: &Option<Vec<(TeamId, f64)>>| match list.as_ref().and_then(|l| l.get(rank)) {
                Some((t, r)) => (csv_field(t.as_str()), fmt_real(*r)),
                None => (String::new(), String::new()),
            };
            let (ut, ur) = cell(&usau);
            let (lt, lr) = cell(&ls);
            let diff = match (&usau, &ls) {
                (Some(u), Some(l)) => l.get(rank).map_or(String::new(), |(team, _)| {
                    rank_delta(u.iter().position(|(t, _)| t == team).map(|p| p + 1), rank + 1)
                }),
                _ => String::new(),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                slice.key.season,
                slice.key.division,
                rank + 1,
                ut,
                ur,
                lt,
                lr,
                diff
            ));
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
