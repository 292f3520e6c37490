//! Prosumer EV energy market: route energy, traffic, renewables, dispatch,
//! incentive game and closed-form supply/demand bounds.

pub mod bounds;
pub mod error;
pub mod ev;
pub mod game;
pub mod mobility;
pub mod optimizer;
pub mod renewables;

pub use error::{Error, Result};
