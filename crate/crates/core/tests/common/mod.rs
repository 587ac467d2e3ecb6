#![allow(dead_code)]

use chrono::NaiveDate;
use ultirate::domain::{Division, Game, GameId, SeasonKey, SeasonSlice, Stage, TeamId};

pub fn key() -> SeasonKey {
    SeasonKey {
        season: 2019,
        division: Division::Mens,
        stage: Stage::Regular,
    }
}

pub fn team(name: &str) -> TeamId {
    TeamId::new(name).unwrap()
}

/// Games `(winner, loser, w, l)`, all on the same day.
pub fn slice_of(results: &[(&str, &str, u32, u32)]) -> SeasonSlice {
    let games = results
        .iter()
        .enumerate()
        .map(|(i, &(w, l, ws, ls))| Game {
            id: GameId(i as u64 + 1),
            season: 2019,
            division: Division::Mens,
            stage: Stage::Regular,
            date: NaiveDate::from_ymd_opt(2019, 7, 1).unwrap(),
            tournament: "Fixture".into(),
            winner: team(w),
            loser: team(l),
            winning_score: ws,
            losing_score: ls,
        })
        .collect();
    SeasonSlice::from_games(key(), games).unwrap()
}

/// Minimizes ||A r - b||^2 by gradient descent from r = 0, projecting onto
/// sum(r) = 0 after every step. Starting at zero keeps the iterates in the
/// row space of A, so the limit is the minimum-norm minimizer.
///
/// `rows` are (winner column, loser column, margin).
pub fn projected_gradient_oracle(n: usize, rows: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut degree = vec![0usize; n];
    for &(i, j, _) in rows {
        degree[i] += 1;
        degree[j] += 1;
    }
    // Laplacian spectral radius is at most 2 * max degree.
    let step = 1.0 / (2.0 * *degree.iter().max().unwrap() as f64);
    let mut r = vec![0.0; n];
    for _ in 0..2_000_000 {
        let mut grad = vec![0.0; n];
        for &(i, j, b) in rows {
            let e = r[i] - r[j] - b;
            grad[i] += e;
            grad[j] -= e;
        }
        let norm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-13 {
            break;
        }
        for (x, g) in r.iter_mut().zip(&grad) {
            *x -= step * g;
        }
        let mean = r.iter().sum::<f64>() / n as f64;
        for x in r.iter_mut() {
            *x -= mean;
        }
    }
    r
}

pub fn table(method: ultirate::Method, ratings: &[(&str, f64)]) -> ultirate::RatingTable {
    ultirate::RatingTable {
        method,
        key: key(),
        ratings: ratings.iter().map(|(t, r)| (team(t), *r)).collect(),
        ranked: ratings.iter().map(|(t, _)| (team(t), true)).collect(),
        ignored_games: Default::default(),
        iterations_used: 0,
        converged: true,
        component: Default::default(),
    }
}

pub const FIXTURE_RATINGS: [(&str, f64); 5] = [("A", 6.0), ("B", 3.0), ("C", 1.0), ("D", 0.0), ("E", -2.0)];

/// Ten games against `FIXTURE_RATINGS`. Errors toward the favorite:
/// 1, 0, 1, -4, 0, -3, 0, 0, -8, 0; three upsets.
pub const FIXTURE_GAMES: [(&str, &str, u32, u32); 10] = [
    ("A", "B", 15, 11),
    ("A", "C", 15, 10),
    ("B", "C", 15, 12),
    ("C", "B", 15, 13),
    ("D", "E", 15, 13),
    ("E", "D", 15, 14),
    ("A", "E", 15, 7),
    ("B", "D", 15, 12),
    ("D", "A", 15, 13),
    ("C", "E", 15, 12),
];
