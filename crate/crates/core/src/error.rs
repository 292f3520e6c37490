use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("non-finite input `{0}`")]
    NonFinite(&'static str),

    #[error("malformed velocity trace: {0}")]
    MalformedTrace(String),

    #[error("efficiency undefined at zero velocity")]
    UndefinedEfficiency,

    #[error("vehicles overlap: gap {gap:.3} m between follower {follower} and leader {leader}")]
    Collision { follower: u64, leader: u64, gap: f64 },

    #[error("road of {road_m} m cannot hold {requested} vehicles at minimum headway (capacity {capacity})")]
    RoadCapacity {
        road_m: f64,
        requested: usize,
        capacity: usize,
    },

    #[error("brute-force solver limited to {max} offers, got {got}")]
    TooManyOffers { max: usize, got: usize },

    #[error("player index {index} out of range for {players} players")]
    PlayerIndex { index: usize, players: usize },

    #[error("player {0} has no surplus and cannot cooperate")]
    NoSurplus(usize),

    #[error("empty candidate range")]
    EmptyRange,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, name: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

pub(crate) fn ensure_positive(value: f64, field: &'static str) -> Result<()> {
    ensure_finite(value, field)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: format!("must be > 0, got {value}"),
        })
    }
}

pub(crate) fn ensure_non_negative(value: f64, field: &'static str) -> Result<()> {
    ensure_finite(value, field)?;
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: format!("must be >= 0, got {value}"),
        })
    }
}
