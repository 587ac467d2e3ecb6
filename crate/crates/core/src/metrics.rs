//! Retrodictive accuracy: mean absolute deviation, mean squared error and
//! ranking violations.
//!
//! Errors are signed toward the higher-rated team: an upset by 3 against a
//! predicted margin of 2 is an error of -5.

use thiserror::Error;

use crate::domain::{Division, Method, RatingTable, SeasonSlice};
use crate::predict::PredictionSet;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no predictions to score")]
    Empty,
}

/// Neumaier-compensated sum. Order effects stay far below 1e-12 for the sizes
/// seen here.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mad(predictions: &PredictionSet) -> Result<f64, MetricsError> {
    let n = predictions.entries.len();
    if n == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(compensated_sum(predictions.entries.iter().map(|p| p.error().abs())) / n as f64)
}

pub fn mse(predictions: &PredictionSet) -> Result<f64, MetricsError> {
    let n = predictions.entries.len();
    if n == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(compensated_sum(predictions.entries.iter().map(|p| p.error().powi(2))) / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViolationCount {
    pub violations: usize,
    /// Games between exactly equal ratings; never violations.
    pub ties: usize,
    /// Games with both teams rated.
    pub total: usize,
    /// `violations / total`, or 0 when `total == 0`.
    pub rate: f64,
}

impl ViolationCount {
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

/// Counts games the lower-rated team won.
pub fn violation_rate(table: &RatingTable, slice: &SeasonSlice) -> ViolationCount {
    let mut violations = 0;
    let mut ties = 0;
    let mut total = 0;
    for g in &slice.games {
        let (Some(rw), Some(rl)) = (table.rating(&g.winner), table.rating(&g.loser)) else {
            continue;
        };
        total += 1;
        if rl > rw {
            violations += 1;
        } else if rl == rw {
            ties += 1;
        }
    }
    let rate = if total == 0 {
        0.0
    } else {
        violations as f64 / total as f64
    };
    ViolationCount {
        violations,
        ties,
        total,
        rate,
    }
}

/// One row of the evaluation output.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub season: i32,
    pub division: Division,
    pub method: Method,
    pub games_predicted: usize,
    pub mad: f64,
    pub mse: f64,
    pub violation_rate: f64,
}

impl MetricReport {
    pub fn sort_key(&self) -> (i32, Division, Method) {
        (self.season, self.division, self.method)
    }
}

/// Scores a prediction set against its slice.
pub fn evaluate(
    table: &RatingTable,
    slice: &SeasonSlice,
    predictions: &PredictionSet,
) -> Result<MetricReport, MetricsError> {
    let violations = violation_rate(table, slice);
    Ok(MetricReport {
        season: table.key.season,
        division: table.key.division,
        method: table.method,
        games_predicted: predictions.entries.len(),
        mad: mad(predictions)?,
        mse: mse(predictions)?,
        violation_rate: violations.rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{GameId, SeasonKey, Stage, TeamId};
    use crate::predict::Prediction;

    fn set(pairs: &[(f64, f64)]) -> PredictionSet {
        let t = TeamId::new("x").unwrap();
        PredictionSet {
            method: Method::Leastsq,
            key: SeasonKey {
                season: 2019,
                division: Division::Mens,
                stage: Stage::Regular,
            },
            entries: pairs
                .iter()
                .enumerate()
                .map(|(i, &(pred, signed))| Prediction {
                    game: GameId(i as u64),
                    favorite: t.clone(),
                    underdog: t.clone(),
                    predicted_diff: pred,
                    actual_diff: signed.abs() as u32,
                    higher_rated_won: signed > 0.0,
                    rating_tie: false,
                })
                .collect(),
            skipped: 0,
        }
    }

    #[test]
    fn mad_examples() {
        assert_eq!(mad(&set(&[(5.0, 4.0), (3.0, 5.0)])).unwrap(), 1.5);
        assert_eq!(mad(&set(&[(4.0, 4.0), (2.0, 2.0)])).unwrap(), 0.0);
        assert_eq!(mad(&set(&[(2.0, -3.0)])).unwrap(), 5.0);
        assert_eq!(mad(&set(&[])), Err(MetricsError::Empty));
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&set(&[(5.0, 4.0), (3.0, 5.0)])).unwrap(), 2.5);
        assert_eq!(mse(&set(&[(4.0, 4.0)])).unwrap(), 0.0);
        assert_eq!(mse(&set(&[(1.0, 4.0)])).unwrap(), 9.0);
        assert_eq!(mse(&set(&[])), Err(MetricsError::Empty));
    }

    #[test]
    fn compensated_sum_handles_cancellation() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v.into_iter()), 2.0);
    }
}
