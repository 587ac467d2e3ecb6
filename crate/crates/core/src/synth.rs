//! Synthetic seasons with known team strengths.

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::domain::{Division, Game, GameId, RatingTable, SeasonKey, SeasonSlice, Stage, TeamId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("teams `{0}` and `{1}` are equally strong and noise is zero; no winner can be drawn")]
    UndecidablePairing(TeamId, TeamId),
    #[error("team `{0}` missing from the estimated table")]
    MissingTeam(TeamId),
    #[error("rating sets differ in size: {truth} true vs {estimated} estimated")]
    MismatchedTeams { truth: usize, estimated: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Every pair plays once.
    RoundRobin,
    /// Teams split into consecutive groups of `k`; round robin within each.
    Pods(usize),
    /// `games` pairings drawn uniformly at random.
    Random { games: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub true_ratings: Vec<(TeamId, f64)>,
    pub schedule: Schedule,
    /// Standard deviation of the per-game margin noise, in goals.
    pub noise_sd: f64,
    pub cap: u32,
    pub seed: u64,
    pub season: i32,
    pub division: Division,
    pub start: NaiveDate,
    /// Number of weeks the games are spread over.
    pub weeks: u32,
}

impl SynthSpec {
    /// `n` teams named `T01`, `T02`, ... with ratings evenly spaced from `hi`
    /// down to `lo`.
    pub fn linear(n: usize, lo: f64, hi: f64) -> Self {
        let true_ratings = (0..n)
            .map(|i| {
                let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                (team_name(i), hi - (hi - lo) * frac)
            })
            .collect();
        SynthSpec {
            true_ratings,
            ..SynthSpec::default()
        }
    }

    pub fn n_teams(&self) -> usize {
        self.true_ratings.len()
    }

    pub fn key(&self) -> SeasonKey {
        SeasonKey {
            season: self.season,
            division: self.division,
            stage: Stage::Regular,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if self.n_teams() < 2 {
            return bad("need at least 2 teams");
        }
        if self.cap < 2 {
            return bad("cap must be at least 2");
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return bad("noise_sd must be finite and non-negative");
        }
        if self.weeks == 0 {
            return bad("weeks must be positive");
        }
        if self.true_ratings.iter().any(|(_, r)| !r.is_finite()) {
            return bad("ratings must be finite");
        }
        let mut names: Vec<_> = self.true_ratings.iter().map(|(t, _)| t).collect();
        names.sort();
        names.dedup();
        if names.len() != self.n_teams() {
            return bad("duplicate team names");
        }
        match self.schedule {
            Schedule::Pods(k) if k < 2 => bad("pod size must be at least 2"),
            Schedule::Random { games: 0 } => bad("random schedule needs at least one game"),
            _ => Ok(()),
        }
    }
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            true_ratings: Vec::new(),
            schedule: Schedule::RoundRobin,
            noise_sd: 0.0,
            cap: 15,
            seed: 0,
            season: 2019,
            division: Division::Mixed,
            start: NaiveDate::from_ymd_opt(2019, 6, 3).expect("valid date"),
            weeks: 10,
        }
    }
}

fn team_name(i: usize) -> TeamId {
    TeamId::new(&format!("T{:02}", i + 1)).expect("non-empty")
}

fn pairings(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let n = spec.n_teams();
    let round_robin = |lo: usize, hi: usize| {
        let mut out = Vec::new();
        for i in lo..hi {
            for j in i + 1..hi {
                out.push((i, j));
            }
        }
        out
    };
    match spec.schedule {
        Schedule::RoundRobin => round_robin(0, n),
        Schedule::Pods(k) => (0..n)
            .step_by(k)
            .flat_map(|lo| round_robin(lo, (lo + k).min(n)))
            .collect(),
        Schedule::Random { games } => (0..games)
            .map(|_| {
                let mut idx: Vec<usize> = (0..n).collect();
                let (pick, _) = idx.partial_shuffle(rng, 2);
                (pick[0], pick[1])
            })
            .collect(),
    }
}

/// Generates one regular-season slice.
///
/// For each pairing the raw margin is `true_i - true_j + N(0, sd)` (exact
/// zeros are redrawn). The winner scores the cap; the loser scores
/// `cap - round(clamp(|margin|, 1, cap - 1))`.
pub fn generate(spec: &SynthSpec) -> Result<SeasonSlice, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sd)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let pairs = pairings(spec, &mut rng);
    let days = i64::from(spec.weeks) * 7;
    let cap = f64::from(spec.cap);

    let mut games = Vec::with_capacity(pairs.len());
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let (ti, ri) = &spec.true_ratings[i];
        let (tj, rj) = &spec.true_ratings[j];
        let mut delta = ri - rj + noise.sample(&mut rng);
        let mut redraws = 0;
        while delta == 0.0 {
            if spec.noise_sd == 0.0 || redraws > 1000 {
                return Err(SynthError::UndecidablePairing(ti.clone(), tj.clone()));
            }
            delta = ri - rj + noise.sample(&mut rng);
            redraws += 1;
        }
        let (winner, loser) = if delta > 0.0 { (ti, tj) } else { (tj, ti) };
        let margin = delta.abs().clamp(1.0, cap - 1.0).round() as u32;
        let offset = (k as i64 * days) / pairs.len() as i64;
        games.push(Game {
            id: GameId(k as u64 + 1),
            season: spec.season,
            division: spec.division,
            stage: Stage::Regular,
            date: spec.start + chrono::Duration::days(offset),
            tournament: format!("Synthetic week {}", offset / 7 + 1),
            winner: winner.clone(),
            loser: loser.clone(),
            winning_score: spec.cap,
            losing_score: spec.cap - margin,
        });
    }
    SeasonSlice::from_games(spec.key(), games)
        .ok_or_else(|| SynthError::InvalidSpec("schedule produced no games".into()))
}

/// Root-mean-square difference between true and estimated ratings after
/// shifting each set to mean zero.
pub fn recovery_error(truth: &[(TeamId, f64)], estimated: &RatingTable) -> Result<f64, SynthError> {
    if truth.len() != estimated.ratings.len() {
        return Err(SynthError::MismatchedTeams {
            truth: truth.len(),
            estimated: estimated.ratings.len(),
        });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let mut pairs = Vec::with_capacity(truth.len());
    for (team, t) in truth {
        let e = estimated
            .rating(team)
            .ok_or_else(|| SynthError::MissingTeam(team.clone()))?;
        pairs.push((*t, e));
    }
    let n = pairs.len() as f64;
    let mean_t = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_e = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sq = pairs
        .iter()
        .map(|(t, e)| ((t - mean_t) - (e - mean_e)).powi(2))
        .sum::<f64>();
    Ok((sq / n).sqrt())
}
