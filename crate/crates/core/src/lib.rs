//! Team ratings for ultimate frisbee seasons.
//!
//! Two methods are provided: the USA Ultimate iterative power rating
//! ([`usau`]) and least-squares ratings on the schedule graph ([`leastsq`]).
//! Both can be turned back into per-game margin predictions ([`predict`]) and
//! scored retrodictively ([`metrics`]).

pub mod cli;
pub mod domain;
pub mod ingest;
pub mod leastsq;
pub mod metrics;
pub mod predict;
pub mod synth;
pub mod usau;

pub use domain::{Division, Game, GameId, Method, RatingTable, SeasonKey, SeasonSlice, Stage, TeamId};
