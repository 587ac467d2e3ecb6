//! CSV input and output.
//!
//! Game files use the fixed header
//! `season,division,stage,date,tournament,team_a,team_b,score_a,score_b`.
//! Rating files are `rank,team,rating,ranked` and metric files are
//! `year,division,method,games_predicted,mad,mse,violation_rate`. Reals are
//! written with six decimals.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::domain::{validate_game, Game, GameId, RawGame, RatingTable, RejectReason, TeamId};
use crate::metrics::MetricReport;
use crate::predict::PredictionSet;

pub const GAME_COLUMNS: [&str; 9] = [
    "season",
    "division",
    "stage",
    "date",
    "tournament",
    "team_a",
    "team_b",
    "score_a",
    "score_b",
];
pub const RATING_COLUMNS: [&str; 4] = ["rank", "team", "rating", "ranked"];
pub const METRIC_COLUMNS: [&str; 7] = [
    "year",
    "division",
    "method",
    "games_predicted",
    "mad",
    "mse",
    "violation_rate",
];
pub const PREDICTION_COLUMNS: [&str; 10] = [
    "game_id",
    "year",
    "division",
    "method",
    "favorite",
    "underdog",
    "predicted_diff",
    "actual_diff",
    "higher_rated_won",
    "rating_tie",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: header {found:?} does not match expected {expected:?}")]
    BadHeader {
        path: PathBuf,
        found: Vec<String>,
        expected: Vec<&'static str>,
    },
    #[error("{path}, row {row}: {message}")]
    BadRow {
        path: PathBuf,
        row: usize,
        message: String,
    },
}

impl IngestError {
    fn io(path: &Path, source: io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn csv(path: &Path, source: csv::Error) -> Self {
        IngestError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// A row that did not yield a game. `row` counts data rows from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub row: usize,
    pub reason: RejectReason,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GameFile {
    pub games: Vec<Game>,
    pub rejections: Vec<Rejection>,
}

fn check_header(path: &Path, found: &csv::StringRecord, expected: &[&'static str]) -> Result<(), IngestError> {
    let trimmed: Vec<String> = found
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let h = if i == 0 { h.trim_start_matches('\u{feff}') } else { h };
            h.to_string()
        })
        .collect();
    if trimmed.iter().map(String::as_str).eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(IngestError::BadHeader {
            path: path.to_path_buf(),
            found: trimmed,
            expected: expected.to_vec(),
        })
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input)
}

/// Reads games from any reader. Game ids are `first_id`, `first_id + 1`, ...
/// in row order, rejected rows included, so ids are stable across edits to
/// validation rules.
pub fn read_games_from<R: Read>(input: R, path: &Path, first_id: u64) -> Result<GameFile, IngestError> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| IngestError::csv(path, e))?.clone();
    check_header(path, &header, &GAME_COLUMNS)?;

    let mut out = GameFile::default();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| IngestError::csv(path, e))?;
        let get = |k: usize| record.get(k).map(str::to_string);
        let raw = RawGame {
            season: get(0),
            division: get(1),
            stage: get(2),
            date: get(3),
            tournament: get(4),
            team_a: get(5),
            team_b: get(6),
            score_a: get(7),
            score_b: get(8),
        };
        match validate_game(&raw, GameId(first_id + i as u64)) {
            Ok(g) => out.games.push(g),
            Err(reason) => {
                log::debug!("{}: row {} rejected: {}", path.display(), i + 1, reason);
                out.rejections.push(Rejection { row: i + 1, reason });
            }
        }
    }
    Ok(out)
}

/// Reads one game file. Ids start at 1.
pub fn read_games(path: &Path) -> Result<GameFile, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_games_from(file, path, 1)
}

/// One file's rejections, tagged with the file they came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileRejection {
    pub path: PathBuf,
    pub rejection: Rejection,
}

/// Reads several game files in order; ids continue across files. A directory
/// argument expands to its `*.csv` files in name order.
pub fn read_game_files(paths: &[PathBuf]) -> Result<(Vec<Game>, Vec<FileRejection>), IngestError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| IngestError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    let mut games = Vec::new();
    let mut rejections = Vec::new();
    let mut next_id = 1u64;
    for path in files {
        let file = File::open(&path).map_err(|e| IngestError::io(&path, e))?;
        let before = next_id;
        let parsed = read_games_from(file, &path, before)?;
        next_id += (parsed.games.len() + parsed.rejections.len()) as u64;
        games.extend(parsed.games);
        rejections.extend(parsed.rejections.into_iter().map(|rejection| FileRejection {
            path: path.clone(),
            rejection,
        }));
    }
    Ok((games, rejections))
}

/// Six-decimal formatting without a negative zero.
pub fn fmt_real(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn create(path: &Path) -> Result<csv::Writer<File>, IngestError> {
    let file = File::create(path).map_err(|e| IngestError::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<(), IngestError> {
    w.flush().map_err(|e| IngestError::io(path, e))
}

/// Writes games in the input schema, winner as team A.
pub fn write_games(games: &[Game], path: &Path) -> Result<(), IngestError> {
    let mut w = create(path)?;
    let wrap = |e| IngestError::csv(path, e);
    w.write_record(GAME_COLUMNS).map_err(wrap)?;
    for g in games {
        w.write_record([
            g.season.to_string(),
            g.division.to_string(),
            g.stage.to_string(),
            g.date.format("%Y-%m-%d").to_string(),
            g.tournament.clone(),
            g.winner.to_string(),
            g.loser.to_string(),
            g.winning_score.to_string(),
            g.losing_score.to_string(),
        ])
        .map_err(wrap)?;
    }
    finish(w, path)
}

/// Writes `rank,team,rating,ranked`, best rating first, ties by name.
pub fn write_ratings(table: &RatingTable, path: &Path) -> Result<(), IngestError> {
    let mut w = create(path)?;
    let wrap = |e| IngestError::csv(path, e);
    w.write_record(RATING_COLUMNS).map_err(wrap)?;
    for (rank, (team, rating)) in table.ordered().into_iter().enumerate() {
        w.write_record([
            (rank + 1).to_string(),
            team.to_string(),
            fmt_real(rating),
            table.is_ranked(team).to_string(),
        ])
        .map_err(wrap)?;
    }
    finish(w, path)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatingRow {
    pub rank: usize,
    pub team: TeamId,
    pub rating: f64,
    pub ranked: bool,
}

fn bad_row(path: &Path, row: usize, message: impl Into<String>) -> IngestError {
    IngestError::BadRow {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    row: usize,
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<T, IngestError> {
    record
        .get(idx)
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad_row(path, row, format!("bad or missing `{name}`")))
}

pub fn read_ratings(path: &Path) -> Result<Vec<RatingRow>, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    let mut rdr = reader(file);
    let header = rdr.headers().map_err(|e| IngestError::csv(path, e))?.clone();
    check_header(path, &header, &RATING_COLUMNS)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| IngestError::csv(path, e))?;
        let row = i + 1;
        rows.push(RatingRow {
            rank: parse_field(path, row, &rec, 0, "rank")?,
            team: rec
                .get(1)
                .and_then(TeamId::new)
                .ok_or_else(|| bad_row(path, row, "bad or missing `team`"))?,
            rating: parse_field(path, row, &rec, 2, "rating")?,
            ranked: parse_field(path, row, &rec, 3, "ranked")?,
        });
    }
    Ok(rows)
}

/// Writes metric rows sorted by (year, division, method).
pub fn write_metrics(reports: &[MetricReport], path: &Path) -> Result<(), IngestError> {
    let mut sorted: Vec<&MetricReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.sort_key());
    let mut w = create(path)?;
    let wrap = |e| IngestError::csv(path, e);
    w.write_record(METRIC_COLUMNS).map_err(wrap)?;
    for r in sorted {
        w.write_record([
            r.season.to_string(),
            r.division.to_string(),
            r.method.to_string(),
            r.games_predicted.to_string(),
            fmt_real(r.mad),
            fmt_real(r.mse),
            fmt_real(r.violation_rate),
        ])
        .map_err(wrap)?;
    }
    finish(w, path)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricReport>, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    let mut rdr = reader(file);
    let header = rdr.headers().map_err(|e| IngestError::csv(path, e))?.clone();
    check_header(path, &header, &METRIC_COLUMNS)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| IngestError::csv(path, e))?;
        let row = i + 1;
        rows.push(MetricReport {
            season: parse_field(path, row, &rec, 0, "year")?,
            division: parse_field(path, row, &rec, 1, "division")?,
            method: parse_field(path, row, &rec, 2, "method")?,
            games_predicted: parse_field(path, row, &rec, 3, "games_predicted")?,
            mad: parse_field(path, row, &rec, 4, "mad")?,
            mse: parse_field(path, row, &rec, 5, "mse")?,
            violation_rate: parse_field(path, row, &rec, 6, "violation_rate")?,
        });
    }
    Ok(rows)
}

/// Writes prediction sets back to back, each in slice game order.
pub fn write_predictions(sets: &[PredictionSet], path: &Path) -> Result<(), IngestError> {
    let mut w = create(path)?;
    let wrap = |e| IngestError::csv(path, e);
    w.write_record(PREDICTION_COLUMNS).map_err(wrap)?;
    for set in sets {
        for p in &set.entries {
            w.write_record([
                p.game.to_string(),
                set.key.season.to_string(),
                set.key.division.to_string(),
                set.method.to_string(),
                p.favorite.to_string(),
                p.underdog.to_string(),
                fmt_real(p.predicted_diff),
                p.actual_diff.to_string(),
                p.higher_rated_won.to_string(),
                p.rating_tie.to_string(),
            ])
            .map_err(wrap)?;
        }
    }
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Division, Method, SeasonKey, Stage};
    use std::collections::{BTreeMap, BTreeSet};

    const HEADER: &str = "season,division,stage,date,tournament,team_a,team_b,score_a,score_b";

    fn parse(text: &str) -> Result<GameFile, IngestError> {
        read_games_from(text.as_bytes(), Path::new("mem.csv"), 1)
    }

    #[test]
    fn reads_well_formed_rows() {
        let text = format!(
            "{HEADER}\n2019,mens,regular,2019-06-01,Pool Play,A,B,15,10\n\
             2019,mens,regular,2019-06-01,Pool Play,C,A,9,13\n\
             2019,mens,regular,2019-06-02,\"Finals, Day 2\",B,C,15,14\n"
        );
        let f = parse(&text).unwrap();
        assert_eq!(f.games.len(), 3);
        assert!(f.rejections.is_empty());
        assert_eq!(f.games[1].winner.as_str(), "A");
        assert_eq!(f.games[2].tournament, "Finals, Day 2");
        assert_eq!(f.games.iter().map(|g| g.id.0).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn tie_row_is_rejected_not_fatal() {
        let text = format!(
            "{HEADER}\n2019,mens,regular,2019-06-01,T,A,B,15,10\n2019,mens,regular,2019-06-01,T,A,B,12,12\n"
        );
        let f = parse(&text).unwrap();
        assert_eq!(f.games.len(), 1);
        assert_eq!(
            f.rejections,
            vec![Rejection {
                row: 2,
                reason: RejectReason::Tie
            }]
        );
    }

    #[test]
    fn short_row_is_missing_field() {
        let text = format!("{HEADER}\n2019,mens,regular,2019-06-01,T,A,B,15\n");
        let f = parse(&text).unwrap();
        assert_eq!(f.rejections[0].reason, RejectReason::MissingField("score_b"));
    }

    #[test]
    fn crlf_matches_lf() {
        let lf = format!("{HEADER}\n2019,mixed,post,2019-09-01,T,A,B,15,10\n2019,mixed,post,2019-09-01,T,B,C,11,15\n");
        let crlf = lf.replace('\n', "\r\n");
        assert_eq!(parse(&lf).unwrap(), parse(&crlf).unwrap());
    }

    #[test]
    fn bad_header_is_fatal() {
        let err = parse("season,division,stage,date,tournament,a,b,score_a,score_b\n").unwrap_err();
        assert!(matches!(err, IngestError::BadHeader { .. }));
        assert!(matches!(parse("").unwrap_err(), IngestError::BadHeader { .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_games(Path::new("/nonexistent/games.csv")).unwrap_err();
        assert!(matches!(err, IngestError::Io { .. }));
    }

    #[test]
    fn real_formatting() {
        assert_eq!(fmt_real(6.0), "6.000000");
        assert_eq!(fmt_real(-1e-9), "0.000000");
        assert_eq!(fmt_real(-7.0), "-7.000000");
        assert_eq!(fmt_real(2.0 / 3.0), "0.666667");
    }

    fn table(ratings: &[(&str, f64)]) -> RatingTable {
        RatingTable {
            method: Method::Leastsq,
            key: SeasonKey {
                season: 2019,
                division: Division::Mens,
                stage: Stage::Regular,
            },
            ratings: ratings.iter().map(|(t, r)| (TeamId::new(t).unwrap(), *r)).collect(),
            ranked: ratings.iter().map(|(t, _)| (TeamId::new(t).unwrap(), true)).collect(),
            ignored_games: BTreeSet::new(),
            iterations_used: 0,
            converged: true,
            component: BTreeMap::new(),
        }
    }

    #[test]
    fn ratings_file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_ratings(&table(&[("C", -7.0), ("A", 6.0), ("B", 1.0)]), &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "rank,team,rating,ranked\n1,A,6.000000,true\n2,B,1.000000,true\n3,C,-7.000000,true\n"
        );

        write_ratings(&table(&[("Zed", 2.0), ("Alpha", 2.0)]), &path).unwrap();
        let rows = read_ratings(&path).unwrap();
        assert_eq!(rows[0].team.as_str(), "Alpha");
        assert_eq!(rows[1].team.as_str(), "Zed");

        write_ratings(&table(&[]), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "rank,team,rating,ranked\n");
    }

    #[test]
    fn metrics_file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_metrics(&[], &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "year,division,method,games_predicted,mad,mse,violation_rate\n"
        );
        let report = |season, method| MetricReport {
            season,
            division: Division::Womens,
            method,
            games_predicted: 12,
            mad: 1.0 / 3.0,
            mse: 2.5,
            violation_rate: 0.125,
        };
        let reports = vec![
            report(2019, Method::Usau),
            report(2018, Method::Leastsq),
            report(2019, Method::Leastsq),
            report(2018, Method::Usau),
        ];
        write_metrics(&reports, &path).unwrap();
        let back = read_metrics(&path).unwrap();
        assert_eq!(back.len(), 4);
        let order: Vec<_> = back.iter().map(|r| (r.season, r.method)).collect();
        assert_eq!(
            order,
            vec![
                (2018, Method::Leastsq),
                (2018, Method::Usau),
                (2019, Method::Leastsq),
                (2019, Method::Usau)
            ]
        );
        assert!((back[0].mad - 1.0 / 3.0).abs() < 1e-6);
        assert_eq!(back[0].violation_rate, 0.125);
    }

    #[test]
    fn unwritable_path() {
        let err = write_metrics(&[], Path::new("/nonexistent/dir/m.csv")).unwrap_err();
        assert!(matches!(err, IngestError::Io { .. }));
    }
}
