//! Score-differential predictions from a rating table.

use thiserror::Error;

use crate::domain::{GameId, Method, RatingTable, SeasonKey, SeasonSlice, TeamId};
use crate::leastsq::LsParams;
use crate::usau::UsauParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error("winning score {0} is below 2")]
    BadWinningScore(u32),
    #[error("rating gap {0} is negative or not finite")]
    BadGap(f64),
    #[error("team `{0}` has no rating")]
    MissingRating(TeamId),
    #[error("table is for {table}, slice is {slice}")]
    KeyMismatch { table: SeasonKey, slice: SeasonKey },
}

/// Inverts the USAU game differential at winning score `w`: returns the
/// margin `w - l` whose differential equals `gap`.
///
/// Gaps below 125 map linearly onto `[0, 1)`; gaps above 600 map to the
/// smallest saturating margin `w - (w - 1) / 2`.
pub fn invert_usau_diff(gap: f64, w: u32) -> Result<f64, PredictError> {
    invert_with(&UsauParams::default(), gap, w)
}

pub(crate) fn invert_with(p: &UsauParams, gap: f64, w: u32) -> Result<f64, PredictError> {
    if w < 2 {
        return Err(PredictError::BadWinningScore(w));
    }
    if !gap.is_finite() || gap < 0.0 {
        return Err(PredictError::BadGap(gap));
    }
    let w = f64::from(w);
    if gap < p.base_diff {
        return Ok(gap / p.base_diff);
    }
    if gap >= p.max_diff {
        return Ok(w - (w - 1.0) / 2.0);
    }
    let s = ((gap - p.base_diff) * p.phase.sin() / p.span).min(1.0);
    let losing = (w - 1.0) * (1.0 - s.asin() / (2.0 * p.phase));
    Ok(w - losing)
}

/// Least-squares rating gap scaled from the reference cap back to the cap
/// proxy `w`.
pub fn predict_ls_diff(rating_i: f64, rating_j: f64, w: u32, params: &LsParams) -> f64 {
    (rating_i - rating_j).abs() * f64::from(w) / params.reference_cap
}

/// One predicted game, oriented toward the higher-rated team.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub game: GameId,
    pub favorite: TeamId,
    pub underdog: TeamId,
    /// Predicted margin for the favorite, `>= 0`.
    pub predicted_diff: f64,
    /// Actual winning margin, always positive.
    pub actual_diff: u32,
    pub higher_rated_won: bool,
    /// Both teams carry exactly the same rating; the winner is taken as the
    /// favorite.
    pub rating_tie: bool,
}

impl Prediction {
    /// Actual margin seen from the favorite's side.
    pub fn signed_actual(&self) -> f64 {
        let a = f64::from(self.actual_diff);
        if self.higher_rated_won {
            a
        } else {
            -a
        }
    }

    pub fn error(&self) -> f64 {
        self.signed_actual() - self.predicted_diff
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSet {
    pub method: Method,
    pub key: SeasonKey,
    pub entries: Vec<Prediction>,
    /// Games skipped because a team had no rating.
    pub skipped: usize,
}

/// Parameters used to turn ratings back into margins.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictParams {
    pub usau: UsauParams,
    pub leastsq: LsParams,
}

/// Predicts every game of `slice` whose teams both have a rating, in slice
/// order. The game's actual winning score stands in for its cap.
pub fn build_predictions(
    table: &RatingTable,
    slice: &SeasonSlice,
    params: &PredictParams,
) -> Result<PredictionSet, PredictError> {
    if table.key != slice.key {
        return Err(PredictError::KeyMismatch {
            table: table.key,
            slice: slice.key,
        });
    }
    let mut entries = Vec::with_capacity(slice.games.len());
    let mut skipped = 0;
    for g in &slice.games {
        let (Some(rw), Some(rl)) = (table.rating(&g.winner), table.rating(&g.loser)) else {
            skipped += 1;
            continue;
        };
        let higher_rated_won = rw >= rl;
        let (favorite, underdog) = if higher_rated_won {
            (g.winner.clone(), g.loser.clone())
        } else {
            (g.loser.clone(), g.winner.clone())
        };
        let predicted_diff = match table.method {
            Method::Usau => invert_with(&params.usau, (rw - rl).abs(), g.winning_score)?,
            Method::Leastsq => predict_ls_diff(rw, rl, g.winning_score, &params.leastsq),
        };
        entries.push(Prediction {
            game: g.id,
            favorite,
            underdog,
            predicted_diff,
            actual_diff: g.margin(),
            higher_rated_won,
            rating_tie: rw == rl,
        });
    }
    Ok(PredictionSet {
        method: table.method,
        key: table.key,
        entries,
        skipped,
    })
}

/// Forward-looking prediction for a pairing with unknown cap; assumes the
/// reference cap of 15. Returns the favorite and its predicted margin.
pub fn predict_matchup<'a>(
    table: &RatingTable,
    a: &'a TeamId,
    b: &'a TeamId,
    params: &PredictParams,
) -> Result<(&'a TeamId, f64), PredictError> {
    let ra = table.rating(a).ok_or_else(|| PredictError::MissingRating(a.clone()))?;
    let rb = table.rating(b).ok_or_else(|| PredictError::MissingRating(b.clone()))?;
    let favorite = if ra >= rb { a } else { b };
    let diff = match table.method {
        Method::Usau => invert_with(&params.usau, (ra - rb).abs(), 15)?,
        Method::Leastsq => predict_ls_diff(ra, rb, 15, &params.leastsq),
    };
    Ok((favorite, diff))
}
