//! USA Ultimate power rating.
//!
//! Every counted game gives each team a *game rating*: the opponent's rating
//! plus (for a win) or minus (for a loss) a score-dependent differential in
//! `[125, 600]`. A team's rating is the weighted mean of its game ratings,
//! with weight = date weight x score weight. Starting from 1000 for every
//! team, the update is repeated until the ratings and the set of ignored
//! blowouts stop changing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;

use thiserror::Error;

use crate::domain::{check_scores, GameId, Method, RatingTable, ScoreError, SeasonSlice, TeamId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UsauError {
    #[error("cannot rate an empty slice")]
    EmptySlice,
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("week index {week} outside 1..={weeks}")]
    WeekOutOfRange { week: u32, weeks: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct UsauParams {
    pub initial_rating: f64,
    /// Differential awarded for a one-point game.
    pub base_diff: f64,
    /// Range of the sine term; `base_diff + span` is the maximum differential.
    pub span: f64,
    /// Phase of the sine curve, in radians.
    pub phase: f64,
    pub max_diff: f64,
    /// Rating gap above which a lopsided win may be ignored.
    pub blowout_gap: f64,
    /// Other counted results the winner must keep for a blowout to be ignored.
    pub min_other_results: usize,
    pub min_games_ranked: usize,
    pub score_weight_denominator: f64,
    pub convergence_tol: f64,
    pub max_iterations: usize,
    /// Fraction of the averaging step applied per round, in `(0, 1]`.
    /// Values below 1 damp the period-2 oscillation that the plain
    /// simultaneous update exhibits on bipartite schedules. Fixed points do
    /// not depend on it.
    pub relaxation: f64,
}

impl Default for UsauParams {
    fn default() -> Self {
        UsauParams {
            initial_rating: 1000.0,
            base_diff: 125.0,
            span: 475.0,
            phase: 0.4 * PI,
            max_diff: 600.0,
            blowout_gap: 600.0,
            min_other_results: 5,
            min_games_ranked: 10,
            score_weight_denominator: 19.0,
            convergence_tol: 1e-6,
            max_iterations: 10_000,
            relaxation: 0.5,
        }
    }
}

impl UsauParams {
    pub fn validate(&self) -> Result<(), UsauError> {
        let positive = [
            (self.initial_rating, "initial_rating"),
            (self.base_diff, "base_diff"),
            (self.span, "span"),
            (self.phase, "phase"),
            (self.max_diff, "max_diff"),
            (self.blowout_gap, "blowout_gap"),
            (self.score_weight_denominator, "score_weight_denominator"),
            (self.convergence_tol, "convergence_tol"),
        ];
        for (v, name) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(UsauError::InvalidParams(name));
            }
        }
        if self.max_iterations == 0 {
            return Err(UsauError::InvalidParams("max_iterations"));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(UsauError::InvalidParams("relaxation"));
        }
        if (self.base_diff + self.span - self.max_diff).abs() > 1e-9 * self.max_diff {
            return Err(UsauError::InvalidParams("base_diff + span must equal max_diff"));
        }
        Ok(())
    }

    /// Score differential term of a game rating. Scores must already satisfy
    /// `l < w`, `w >= 2`.
    pub fn game_diff(&self, w: u32, l: u32) -> f64 {
        let x = (2.0 * (1.0 - f64::from(l) / f64::from(w - 1))).min(1.0);
        self.base_diff + self.span * (x * self.phase).sin() / self.phase.sin()
    }

    pub fn score_weight(&self, w: u32, l: u32) -> f64 {
        let floor_half = (w - 1) / 2;
        let total = f64::from(w + l.max(floor_half));
        (total / self.score_weight_denominator).sqrt().min(1.0)
    }

    pub fn blowout_ignorable(&self, gap: f64, w: u32, l: u32) -> bool {
        gap > self.blowout_gap && w > 2 * l + 1
    }
}

/// Differential for a game won `w`-`l`: 125 for a one-point game, rising
/// concavely to 600 once the winner has more than twice the loser's score.
pub fn game_diff(w: u32, l: u32) -> Result<f64, ScoreError> {
    check_scores(w, l)?;
    Ok(UsauParams::default().game_diff(w, l))
}

/// Opponent rating plus the differential for a win, minus it for a loss.
pub fn game_rating(opponent_rating: f64, w: u32, l: u32, won: bool) -> Result<f64, ScoreError> {
    let diff = game_diff(w, l)?;
    Ok(if won {
        opponent_rating + diff
    } else {
        opponent_rating - diff
    })
}

/// `2^(t/n - 1)` for a game in week `t` of `n`.
pub fn date_weight(week: u32, weeks: u32) -> Result<f64, UsauError> {
    if week == 0 || week > weeks {
        return Err(UsauError::WeekOutOfRange { week, weeks });
    }
    Ok((f64::from(week) / f64::from(weeks) - 1.0).exp2())
}

/// `min(1, sqrt((w + max(l, floor((w-1)/2))) / 19))`.
pub fn score_weight(w: u32, l: u32) -> Result<f64, ScoreError> {
    check_scores(w, l)?;
    Ok(UsauParams::default().score_weight(w, l))
}

/// True iff the winner is rated more than 600 above the loser and won by more
/// than twice the losing score plus one.
pub fn blowout_ignorable(gap: f64, w: u32, l: u32) -> bool {
    UsauParams::default().blowout_ignorable(gap, w, l)
}

struct IndexedGame {
    id: GameId,
    winner: usize,
    loser: usize,
    w: u32,
    l: u32,
    diff: f64,
    weight: f64,
}

/// Runs the power-rating iteration on one slice.
///
/// Non-convergence is not an error: the table comes back with
/// `converged == false` and the caller decides what to do with it.
pub fn compute_usau(slice: &SeasonSlice, params: &UsauParams) -> Result<RatingTable, UsauError> {
    params.validate()?;
    if slice.games.is_empty() {
        return Err(UsauError::EmptySlice);
    }

    let teams = slice.teams();
    let index: HashMap<&TeamId, usize> = teams.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut games = Vec::with_capacity(slice.games.len());
    for (g, &week) in slice.games.iter().zip(&slice.week_of) {
        check_scores(g.winning_score, g.losing_score)?;
        let (w, l) = (g.winning_score, g.losing_score);
        games.push(IndexedGame {
            id: g.id,
            winner: index[&g.winner],
            loser: index[&g.loser],
            w,
            l,
            diff: params.game_diff(w, l),
            weight: date_weight(week, slice.week_count)? * params.score_weight(w, l),
        });
    }
    let total_games = {
        let mut c = vec![0usize; teams.len()];
        for g in &games {
            c[g.winner] += 1;
            c[g.loser] += 1;
        }
        c
    };

    let mut ratings = vec![params.initial_rating; teams.len()];
    let mut ignored = vec![false; games.len()];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iterations {
        iterations += 1;
        let next_ignored = ignored_set(&games, &ratings, &total_games, params);

        let mut num = vec![0.0; teams.len()];
        let mut den = vec![0.0; teams.len()];
        for (g, &skip) in games.iter().zip(&next_ignored) {
            if skip {
                continue;
            }
            num[g.winner] += g.weight * (ratings[g.loser] + g.diff);
            den[g.winner] += g.weight;
            num[g.loser] += g.weight * (ratings[g.winner] - g.diff);
            den[g.loser] += g.weight;
        }

        let mut max_change: f64 = 0.0;
        let next: Vec<f64> = ratings
            .iter()
            .enumerate()
            .map(|(i, &prev)| {
                if den[i] > 0.0 {
                    let target = num[i] / den[i];
                    let r = prev + params.relaxation * (target - prev);
                    max_change = max_change.max((r - prev).abs());
                    r
                } else {
                    prev
                }
            })
            .collect();

        let stable_set = next_ignored == ignored;
        ratings = next;
        ignored = next_ignored;
        if max_change < params.convergence_tol && stable_set {
            converged = true;
            break;
        }
    }

    let mut counted = vec![0usize; teams.len()];
    for (g, &skip) in games.iter().zip(&ignored) {
        if !skip {
            counted[g.winner] += 1;
            counted[g.loser] += 1;
        }
    }

    Ok(RatingTable {
        method: Method::Usau,
        key: slice.key,
        ratings: teams.iter().cloned().zip(ratings.iter().copied()).collect(),
        ranked: teams
            .iter()
            .cloned()
            .zip(counted.iter().map(|&c| c >= params.min_games_ranked))
            .collect(),
        ignored_games: games
            .iter()
            .zip(&ignored)
            .filter(|(_, &skip)| skip)
            .map(|(g, _)| g.id)
            .collect::<BTreeSet<_>>(),
        iterations_used: iterations,
        converged,
        component: BTreeMap::new(),
    })
}

/// Blowouts to ignore under `ratings`. Candidates are taken largest rating
/// gap first (then by game id); one is ignored only if its winner still has
/// at least `min_other_results` other counted games at that point.
fn ignored_set(
    games: &[IndexedGame],
    ratings: &[f64],
    total_games: &[usize],
    params: &UsauParams,
) -> Vec<bool> {
    let mut candidates: Vec<(usize, f64)> = games
        .iter()
        .enumerate()
        .map(|(i, g)| (i, ratings[g.winner] - ratings[g.loser]))
        .filter(|&(i, gap)| params.blowout_ignorable(gap, games[i].w, games[i].l))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(games[a.0].id.cmp(&games[b.0].id)));

    let mut counted = total_games.to_vec();
    let mut ignored = vec![false; games.len()];
    for (i, _) in candidates {
        let g = &games[i];
        if counted[g.winner] > params.min_other_results {
            ignored[i] = true;
            counted[g.winner] -= 1;
            counted[g.loser] -= 1;
        }
    }
    ignored
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Division, Game, SeasonKey, Stage};
    use chrono::NaiveDate;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn game_diff_examples() {
        assert_eq!(game_diff(15, 14).unwrap(), 125.0);
        assert_eq!(game_diff(15, 7).unwrap(), 600.0);
        // 125 + 475 * sin(0.2 pi) / sin(0.4 pi), evaluated to 30 digits.
        assert!(close(game_diff(13, 9).unwrap(), 418.566_144_656_2, 1e-9));
        assert!(game_diff(10, 10).is_err());
        assert!(game_diff(1, 0).is_err());
    }

    #[test]
    fn game_rating_examples() {
        assert_eq!(game_rating(1000.0, 15, 14, true).unwrap(), 1125.0);
        assert_eq!(game_rating(1000.0, 15, 7, false).unwrap(), 400.0);
        assert!(close(game_rating(1500.0, 13, 9, false).unwrap(), 1_081.433_855_343_8, 1e-9));
    }

    #[test]
    fn diff_monotone_and_bounded() {
        for w in 2..=40u32 {
            let mut prev = f64::INFINITY;
            for l in 0..w {
                let d = game_diff(w, l).unwrap();
                assert!((125.0..=600.0).contains(&d));
                assert!(d <= prev);
                prev = d;
            }
        }
    }

    #[test]
    fn date_weight_examples() {
        assert_eq!(date_weight(7, 7).unwrap(), 1.0);
        assert!(close(date_weight(1, 2).unwrap(), std::f64::consts::FRAC_1_SQRT_2, 1e-9));
        assert!(close(date_weight(1, 13).unwrap(), 0.527_383_038_2, 1e-9));
        assert!(date_weight(0, 3).is_err());
        assert!(date_weight(4, 3).is_err());
    }

    #[test]
    fn score_weight_examples() {
        assert_eq!(score_weight(15, 10).unwrap(), 1.0);
        assert!(close(score_weight(11, 5).unwrap(), (16.0f64 / 19.0).sqrt(), 1e-15));
        assert!(close(score_weight(11, 5).unwrap(), 0.917_662_935_5, 1e-9));
        assert!(close(score_weight(9, 2).unwrap(), 0.827_170_191_9, 1e-9));
        for l in 0..15 {
            assert_eq!(score_weight(15, l).unwrap(), 1.0);
        }
    }

    #[test]
    fn blowout_predicate() {
        assert!(blowout_ignorable(601.0, 15, 6));
        assert!(!blowout_ignorable(601.0, 15, 7));
        assert!(!blowout_ignorable(600.0, 15, 2));
    }

    #[test]
    fn params_validation() {
        assert!(UsauParams::default().validate().is_ok());
        let bad = UsauParams {
            span: 400.0,
            ..UsauParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = UsauParams {
            relaxation: 0.0,
            ..UsauParams::default()
        };
        assert!(bad.validate().is_err());
    }

    pub(crate) fn slice_of(results: &[(&str, &str, u32, u32)]) -> SeasonSlice {
        let key = SeasonKey {
            season: 2019,
            division: Division::Mens,
            stage: Stage::Regular,
        };
        let games = results
            .iter()
            .enumerate()
            .map(|(i, &(w, l, ws, ls))| Game {
                id: GameId(i as u64 + 1),
                season: 2019,
                division: Division::Mens,
                stage: Stage::Regular,
                date: NaiveDate::from_ymd_opt(2019, 7, 1).unwrap(),
                tournament: "T".into(),
                winner: TeamId::new(w).unwrap(),
                loser: TeamId::new(l).unwrap(),
                winning_score: ws,
                losing_score: ls,
            })
            .collect();
        SeasonSlice::from_games(key, games).unwrap()
    }

    fn rating(t: &RatingTable, name: &str) -> f64 {
        t.rating(&TeamId::new(name).unwrap()).unwrap()
    }

    #[test]
    fn two_team_fixed_point() {
        // Fixed point: R_w = R_l + 125 and R_l = R_w - 125; every update
        // preserves the mean of 1000, so {1062.5, 937.5}.
        let t = compute_usau(&slice_of(&[("A", "B", 15, 14)]), &UsauParams::default()).unwrap();
        assert!(t.converged);
        assert!(t.iterations_used < 100);
        assert!(close(rating(&t, "A"), 1062.5, 1e-6));
        assert!(close(rating(&t, "B"), 937.5, 1e-6));
    }

    #[test]
    fn undamped_update_oscillates_on_two_teams() {
        let params = UsauParams {
            relaxation: 1.0,
            max_iterations: 50,
            ..UsauParams::default()
        };
        let t = compute_usau(&slice_of(&[("A", "B", 15, 14)]), &params).unwrap();
        assert!(!t.converged);
        assert_eq!(t.iterations_used, 50);
    }

    #[test]
    fn triangle_matches_weighted_fixed_point() {
        // Same-week games to 15, so all weights are 1. With one game per pair
        // the fixed point solves r_i = mean over opponents of (r_j +/- d).
        let s = slice_of(&[("A", "B", 15, 14), ("B", "C", 15, 14), ("A", "C", 15, 7)]);
        let t = compute_usau(&s, &UsauParams::default()).unwrap();
        assert!(t.converged);
        let (a, b, c) = (rating(&t, "A"), rating(&t, "B"), rating(&t, "C"));
        assert!(close(a, ((b + 125.0) + (c + 600.0)) / 2.0, 1e-5));
        assert!(close(b, ((a - 125.0) + (c + 125.0)) / 2.0, 1e-5));
        assert!(close(c, ((b - 125.0) + (a - 600.0)) / 2.0, 1e-5));
        assert!(close(a + b + c, 3000.0, 1e-6));
        assert!(t.ranked.values().all(|r| !r));
    }

    #[test]
    fn ranked_requires_ten_counted_games() {
        let mut results = Vec::new();
        for _ in 0..5 {
            results.push(("A", "B", 15, 12));
            results.push(("B", "A", 15, 13));
        }
        results.push(("A", "C", 15, 13));
        let t = compute_usau(&slice_of(&results), &UsauParams::default()).unwrap();
        let ranked = |n: &str| t.is_ranked(&TeamId::new(n).unwrap());
        assert!(ranked("A"));
        assert!(ranked("B"));
        assert!(!ranked("C"));
        assert!(t.rating(&TeamId::new("C").unwrap()).unwrap().is_finite());
    }

    #[test]
    fn empty_slice_is_an_error() {
        let s = SeasonSlice {
            key: slice_of(&[("A", "B", 15, 14)]).key,
            games: vec![],
            week_count: 1,
            week_of: vec![],
        };
        assert_eq!(compute_usau(&s, &UsauParams::default()), Err(UsauError::EmptySlice));
    }

    #[test]
    fn ignore_guard_needs_other_results() {
        let games = vec![
            IndexedGame { id: GameId(1), winner: 0, loser: 1, w: 15, l: 4, diff: 600.0, weight: 1.0 },
            IndexedGame { id: GameId(2), winner: 0, loser: 2, w: 15, l: 14, diff: 125.0, weight: 1.0 },
        ];
        let ratings = [2000.0, 1000.0, 1900.0];
        let p = UsauParams::default();
        // Winner has only one other result.
        assert_eq!(ignored_set(&games, &ratings, &[2, 1, 1], &p), vec![false, false]);
        let p1 = UsauParams {
            min_other_results: 1,
            ..p
        };
        assert_eq!(ignored_set(&games, &ratings, &[2, 1, 1], &p1), vec![true, false]);
    }
}
