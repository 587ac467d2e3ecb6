//! Core data types shared by every rating method: teams, games, season
//! slices and rating tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

/// Team identity, keyed by a normalized name.
///
/// Normalization trims the name and collapses internal runs of whitespace to
/// a single space. Case is preserved.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TeamId(String);

impl TeamId {
    pub fn new(raw: &str) -> Option<Self> {
        let name = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        if name.is_empty() {
            None
        } else {
            Some(TeamId(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Division {
    Mens,
    Mixed,
    Womens,
}

impl Division {
    pub const ALL: [Division; 3] = [Division::Mens, Division::Mixed, Division::Womens];

    pub fn as_str(self) -> &'static str {
        match self {
            Division::Mens => "mens",
            Division::Mixed => "mixed",
            Division::Womens => "womens",
        }
    }
}

impl FromStr for Division {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| *c != '\'')
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "mens" | "men" | "open" => Ok(Division::Mens),
            "mixed" => Ok(Division::Mixed),
            "womens" | "women" => Ok(Division::Womens),
            _ => Err(ParseEnumError::new("division", s)),
        }
    }
}

impl fmt::Display for Division {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Regular,
    Post,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Regular => "regular",
            Stage::Post => "post",
        }
    }
}

impl FromStr for Stage {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "regular" => Ok(Stage::Regular),
            "post" | "postseason" => Ok(Stage::Post),
            _ => Err(ParseEnumError::new("stage", s)),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rating method. Declaration order is the output row order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Leastsq,
    Usau,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Leastsq => "leastsq",
            Method::Usau => "usau",
        }
    }
}

impl FromStr for Method {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "leastsq" => Ok(Method::Leastsq),
            "usau" => Ok(Method::Usau),
            _ => Err(ParseEnumError::new("method", s)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid {kind} `{value}`")]
pub struct ParseEnumError {
    pub kind: &'static str,
    pub value: String,
}

impl ParseEnumError {
    fn new(kind: &'static str, value: &str) -> Self {
        ParseEnumError {
            kind,
            value: value.to_string(),
        }
    }
}

/// Stable identifier of a game, assigned at ingest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GameId(pub u64);

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Precondition failures on a (winning, losing) score pair.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ScoreError {
    #[error("losing score {losing} is not below winning score {winning}")]
    NotDecisive { winning: u32, losing: u32 },
    #[error("winning score {0} is below 2")]
    Degenerate(u32),
}

/// Checks `0 <= l < w` and `w >= 2`.
pub fn check_scores(winning: u32, losing: u32) -> Result<(), ScoreError> {
    if losing >= winning {
        return Err(ScoreError::NotDecisive { winning, losing });
    }
    if winning < 2 {
        return Err(ScoreError::Degenerate(winning));
    }
    Ok(())
}

/// One recorded result, oriented winner first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Game {
    pub id: GameId,
    pub season: i32,
    pub division: Division,
    pub stage: Stage,
    pub date: NaiveDate,
    pub tournament: String,
    pub winner: TeamId,
    pub loser: TeamId,
    pub winning_score: u32,
    pub losing_score: u32,
}

impl Game {
    pub fn key(&self) -> SeasonKey {
        SeasonKey {
            season: self.season,
            division: self.division,
            stage: self.stage,
        }
    }

    /// Winning minus losing score; always positive.
    pub fn margin(&self) -> u32 {
        self.winning_score - self.losing_score
    }
}

/// Unvalidated record as read from one input row. `None` marks an absent
/// field.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawGame {
    pub season: Option<String>,
    pub division: Option<String>,
    pub stage: Option<String>,
    pub date: Option<String>,
    pub tournament: Option<String>,
    pub team_a: Option<String>,
    pub team_b: Option<String>,
    pub score_a: Option<String>,
    pub score_b: Option<String>,
}

/// Why a raw record was not turned into a [`Game`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RejectReason {
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("tie")]
    Tie,
    #[error("degenerate score")]
    DegenerateScore,
    #[error("unparseable date `{0}`")]
    BadDate(String),
    #[error("unparseable score `{0}`")]
    BadScore(String),
    #[error("unparseable season `{0}`")]
    BadSeason(String),
    #[error("{0}")]
    BadEnum(ParseEnumError),
    #[error("empty team name")]
    EmptyTeam,
    #[error("team plays itself")]
    SameTeam,
}

impl RejectReason {
    /// Short machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::MissingField(_) => "missing_field",
            RejectReason::Tie => "tie",
            RejectReason::DegenerateScore => "degenerate_score",
            RejectReason::BadDate(_) => "bad_date",
            RejectReason::BadScore(_) => "bad_score",
            RejectReason::BadSeason(_) => "bad_season",
            RejectReason::BadEnum(e) => match e.kind {
                "division" => "bad_division",
                "stage" => "bad_stage",
                _ => "bad_field",
            },
            RejectReason::EmptyTeam => "empty_team",
            RejectReason::SameTeam => "same_team",
        }
    }
}

fn field<'a>(value: &'a Option<String>, name: &'static str) -> Result<&'a str, RejectReason> {
    value
        .as_deref()
        .ok_or(RejectReason::MissingField(name))
}

fn parse_score(raw: &str) -> Result<u32, RejectReason> {
    raw.trim()
        .parse::<u32>()
        .map_err(|_| RejectReason::BadScore(raw.to_string()))
}

/// Validates a raw record and orients it by score.
pub fn validate_game(raw: &RawGame, id: GameId) -> Result<Game, RejectReason> {
    let season_raw = field(&raw.season, "season")?;
    let division_raw = field(&raw.division, "division")?;
    let stage_raw = field(&raw.stage, "stage")?;
    let date_raw = field(&raw.date, "date")?;
    let tournament = field(&raw.tournament, "tournament")?;
    let team_a_raw = field(&raw.team_a, "team_a")?;
    let team_b_raw = field(&raw.team_b, "team_b")?;
    let score_a_raw = field(&raw.score_a, "score_a")?;
    let score_b_raw = field(&raw.score_b, "score_b")?;

    let season = season_raw
        .trim()
        .parse::<i32>()
        .map_err(|_| RejectReason::BadSeason(season_raw.to_string()))?;
    let division = division_raw.parse::<Division>().map_err(RejectReason::BadEnum)?;
    let stage = stage_raw.parse::<Stage>().map_err(RejectReason::BadEnum)?;
    let date = NaiveDate::parse_from_str(date_raw.trim(), "%Y-%m-%d")
        .map_err(|_| RejectReason::BadDate(date_raw.to_string()))?;
    let team_a = TeamId::new(team_a_raw).ok_or(RejectReason::EmptyTeam)?;
    let team_b = TeamId::new(team_b_raw).ok_or(RejectReason::EmptyTeam)?;
    let score_a = parse_score(score_a_raw)?;
    let score_b = parse_score(score_b_raw)?;

    if team_a == team_b {
        return Err(RejectReason::SameTeam);
    }
    if score_a == score_b {
        return Err(RejectReason::Tie);
    }
    let (winner, loser, w, l) = if score_a > score_b {
        (team_a, team_b, score_a, score_b)
    } else {
        (team_b, team_a, score_b, score_a)
    };
    if w < 2 {
        return Err(RejectReason::DegenerateScore);
    }

    Ok(Game {
        id,
        season,
        division,
        stage,
        date,
        tournament: tournament.trim().to_string(),
        winner,
        loser,
        winning_score: w,
        losing_score: l,
    })
}

/// The (season, division, stage) triple a slice is keyed by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeasonKey {
    pub season: i32,
    pub division: Division,
    pub stage: Stage,
}

impl fmt::Display for SeasonKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.season, self.division, self.stage)
    }
}

/// All games for one season key, with each game's week index.
#[derive(Clone, Debug, PartialEq)]
pub struct SeasonSlice {
    pub key: SeasonKey,
    pub games: Vec<Game>,
    /// Number of calendar weeks spanned, `n >= 1`.
    pub week_count: u32,
    /// Week index `t` in `1..=week_count`, parallel to `games`.
    pub week_of: Vec<u32>,
}

impl SeasonSlice {
    /// Builds a slice from games that all share `key`, deriving week indices
    /// from ISO (Monday-start) calendar weeks.
    ///
    /// Returns `None` if `games` is empty or a game has a different key.
    pub fn from_games(key: SeasonKey, games: Vec<Game>) -> Option<Self> {
        if games.is_empty() || games.iter().any(|g| g.key() != key) {
            return None;
        }
        let monday = |d: NaiveDate| d - chrono::Days::new(u64::from(d.weekday().num_days_from_monday()));
        let first = games.iter().map(|g| monday(g.date)).min()?;
        let last = games.iter().map(|g| monday(g.date)).max()?;
        let week_index = |d: NaiveDate| ((monday(d) - first).num_days() / 7) as u32 + 1;
        let week_count = week_index(last);
        let week_of = games.iter().map(|g| week_index(g.date)).collect();
        Some(SeasonSlice {
            key,
            games,
            week_count,
            week_of,
        })
    }

    /// Distinct teams, in first-appearance order.
    pub fn teams(&self) -> Vec<TeamId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for g in &self.games {
            for t in [&g.winner, &g.loser] {
                if seen.insert(t.clone()) {
                    out.push(t.clone());
                }
            }
        }
        out
    }
}

/// Groups games into one slice per (season, division, stage), ordered by key.
/// Within a slice, input order is preserved.
pub fn partition_seasons(games: &[Game]) -> Vec<SeasonSlice> {
    let mut groups: BTreeMap<SeasonKey, Vec<Game>> = BTreeMap::new();
    for g in games {
        groups.entry(g.key()).or_default().push(g.clone());
    }
    groups
        .into_iter()
        .filter_map(|(key, games)| SeasonSlice::from_games(key, games))
        .collect()
}

/// Ratings produced by one method for one slice.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingTable {
    pub method: Method,
    pub key: SeasonKey,
    pub ratings: BTreeMap<TeamId, f64>,
    /// Eligibility for the published ranking.
    pub ranked: BTreeMap<TeamId, bool>,
    /// Games excluded by the blowout rule in the final round (USAU only).
    pub ignored_games: BTreeSet<GameId>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Connected component of each team in the schedule graph (least squares
    /// only). Ratings in different components are not comparable.
    pub component: BTreeMap<TeamId, usize>,
}

impl RatingTable {
    pub fn rating(&self, team: &TeamId) -> Option<f64> {
        self.ratings.get(team).copied()
    }

    pub fn is_ranked(&self, team: &TeamId) -> bool {
        self.ranked.get(team).copied().unwrap_or(false)
    }

    /// Number of distinct schedule-graph components (1 when unknown).
    pub fn component_count(&self) -> usize {
        self.component
            .values()
            .collect::<BTreeSet<_>>()
            .len()
            .max(1)
    }

    /// Teams sorted by rating descending, ties broken by name ascending.
    pub fn ordered(&self) -> Vec<(&TeamId, f64)> {
        let mut rows: Vec<_> = self.ratings.iter().map(|(t, r)| (t, *r)).collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        rows
    }
}
