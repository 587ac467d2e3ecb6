//! Least-squares ratings.
//!
//! Each game is one equation `r_winner - r_loser = diff`, with the margin
//! rescaled to a reference cap of 15. The ratings are the minimum-norm
//! minimizer of `||A r - b||^2`, which sums to zero on every connected
//! component of the schedule graph.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::domain::{check_scores, Method, RatingTable, ScoreError, SeasonKey, SeasonSlice, TeamId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LsError {
    #[error("cannot rate an empty slice")]
    EmptySlice,
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("reference cap must be at least 2, got {0}")]
    BadCap(f64),
    #[error("schedule normal equations are not positive definite")]
    Singular,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsParams {
    pub reference_cap: f64,
}

impl Default for LsParams {
    fn default() -> Self {
        LsParams { reference_cap: 15.0 }
    }
}

impl LsParams {
    pub fn validate(&self) -> Result<(), LsError> {
        if self.reference_cap.is_finite() && self.reference_cap >= 2.0 {
            Ok(())
        } else {
            Err(LsError::BadCap(self.reference_cap))
        }
    }
}

/// Margin rescaled so the winner's score equals the reference cap: a 12-8
/// game counts as 15-10.
pub fn normalize_diff(w: u32, l: u32, params: &LsParams) -> Result<f64, ScoreError> {
    check_scores(w, l)?;
    Ok(f64::from(w - l) * params.reference_cap / f64::from(w))
}

/// One winner-oriented equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleRow {
    pub winner: usize,
    pub loser: usize,
    pub diff: f64,
}

/// The sparse schedule matrix `A` with right-hand side `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleSystem {
    pub key: SeasonKey,
    /// Teams in column order (first appearance in the slice).
    pub teams: Vec<TeamId>,
    pub rows: Vec<ScheduleRow>,
    /// Connected components as sorted column lists, ordered by smallest column.
    pub components: Vec<Vec<usize>>,
}

impl ScheduleSystem {
    pub fn n_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn n_games(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, team: &TeamId) -> Option<usize> {
        self.teams.iter().position(|t| t == team)
    }

    /// `A r - b`.
    pub fn residual(&self, ratings: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| ratings[row.winner] - ratings[row.loser] - row.diff)
            .collect()
    }

    /// `A^T b`.
    pub fn rhs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_teams()];
        for row in &self.rows {
            out[row.winner] += row.diff;
            out[row.loser] -= row.diff;
        }
        out
    }

    /// `A^T A r`, i.e. the schedule-graph Laplacian applied to `r`.
    pub fn laplacian_apply(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_teams()];
        for row in &self.rows {
            let d = r[row.winner] - r[row.loser];
            out[row.winner] += d;
            out[row.loser] -= d;
        }
        out
    }
}

pub fn build_system(slice: &SeasonSlice, params: &LsParams) -> Result<ScheduleSystem, LsError> {
    params.validate()?;
    if slice.games.is_empty() {
        return Err(LsError::EmptySlice);
    }
    let mut index: HashMap<TeamId, usize> = HashMap::new();
    let mut teams = Vec::new();
    let mut col = |t: &TeamId| {
        *index.entry(t.clone()).or_insert_with(|| {
            teams.push(t.clone());
            teams.len() - 1
        })
    };
    let mut rows = Vec::with_capacity(slice.games.len());
    for g in &slice.games {
        let winner = col(&g.winner);
        let loser = col(&g.loser);
        rows.push(ScheduleRow {
            winner,
            loser,
            diff: normalize_diff(g.winning_score, g.losing_score, params)?,
        });
    }
    let components = components(teams.len(), &rows);
    Ok(ScheduleSystem {
        key: slice.key,
        teams,
        rows,
        components,
    })
}

fn components(n: usize, rows: &[ScheduleRow]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for row in rows {
        let a = find(&mut parent, row.winner);
        let b = find(&mut parent, row.loser);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Minimum-norm least-squares ratings, as a raw vector in column order.
///
/// Each component `C` is solved from `(L_C + 1 1^T) r = (A^T b)_C`. Since
/// `(A^T b)_C` sums to zero and `1` spans the kernel of `L_C`, the solution
/// satisfies `L_C r = (A^T b)_C` with `sum(r) = 0`.
pub fn solve_vector(system: &ScheduleSystem) -> Result<Vec<f64>, LsError> {
    if system.rows.is_empty() {
        return Err(LsError::EmptySlice);
    }
    let rhs = system.rhs();
    let mut ratings = vec![0.0; system.n_teams()];
    for comp in &system.components {
        if comp.len() == 1 {
            continue;
        }
        let local: HashMap<usize, usize> = comp.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let k = comp.len();
        let mut m = vec![1.0; k * k];
        for row in &system.rows {
            let (Some(&i), Some(&j)) = (local.get(&row.winner), local.get(&row.loser)) else {
                continue;
            };
            m[i * k + i] += 1.0;
            m[j * k + j] += 1.0;
            m[i * k + j] -= 1.0;
            m[j * k + i] -= 1.0;
        }
        let b: Vec<f64> = comp.iter().map(|&c| rhs[c]).collect();
        let factor = Cholesky::new(m, k).ok_or(LsError::Singular)?;
        let mut x = factor.solve(&b);

        // One step of iterative refinement against the same matrix.
        let mut mx = vec![0.0; k];
        for (i, out) in mx.iter_mut().enumerate() {
            *out = (0..k).map(|j| factor.original[i * k + j] * x[j]).sum();
        }
        let r: Vec<f64> = b.iter().zip(&mx).map(|(bi, mi)| bi - mi).collect();
        let dx = factor.solve(&r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }

        for (&c, xi) in comp.iter().zip(x) {
            ratings[c] = xi;
        }
    }
    Ok(ratings)
}

pub fn solve_ratings(system: &ScheduleSystem) -> Result<RatingTable, LsError> {
    let ratings = solve_vector(system)?;
    let mut component = BTreeMap::new();
    for (ci, comp) in system.components.iter().enumerate() {
        for &c in comp {
            component.insert(system.teams[c].clone(), ci);
        }
    }
    Ok(RatingTable {
        method: Method::Leastsq,
        key: system.key,
        ratings: system.teams.iter().cloned().zip(ratings).collect(),
        ranked: system.teams.iter().map(|t| (t.clone(), true)).collect(),
        ignored_games: BTreeSet::new(),
        iterations_used: 0,
        converged: true,
        component,
    })
}

/// Builds and solves the schedule system for one slice.
pub fn compute_leastsq(slice: &SeasonSlice, params: &LsParams) -> Result<RatingTable, LsError> {
    solve_ratings(&build_system(slice, params)?)
}

/// Dense lower Cholesky factor of a symmetric positive definite matrix.
struct Cholesky {
    lower: Vec<f64>,
    original: Vec<f64>,
    n: usize,
}

impl Cholesky {
    fn new(matrix: Vec<f64>, n: usize) -> Option<Self> {
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = matrix[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d.is_nan() || d <= 0.0 {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = matrix[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Some(Cholesky {
            lower: l,
            original: matrix,
            n,
        })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= l[i * n + k] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= l[k * n + i] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        y
    }
}
