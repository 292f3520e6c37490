//! Scenario orchestration for the prosumer EV energy market: configuration,
//! seeded market rounds, parameter sweeps and result export.

pub mod analysis;
pub mod config;
pub mod error;
pub mod export;
pub mod messages;
pub mod round;
pub mod seeds;
pub mod sweep;

pub use config::{load_config, parse_config, ScenarioConfig};
pub use error::{HarnessError, Result};
