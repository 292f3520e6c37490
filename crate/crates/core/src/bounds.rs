//! Closed-form estimators: lognormal SOC tails, class supply and demand
//! bounds, and per-station Poisson expectations.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::optimizer::{ev_utility, GridParams, SupplyOffer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocDistribution {
    pub mu_log: f64,
    pub sigma_log: f64,
    pub source_note: String,
}

impl SocDistribution {
    pub fn from_median(median_wh: f64, sigma_log: f64, source_note: impl Into<String>) -> Result<Self> {
        ensure_positive(median_wh, "soc.median_wh")?;
        let d = SocDistribution {
            mu_log: median_wh.ln(),
            sigma_log,
            source_note: source_note.into(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.mu_log, "soc.mu_log")?;
        ensure_positive(self.sigma_log, "soc.sigma_log")
    }

    pub fn mean(&self) -> f64 {
        (self.mu_log + self.sigma_log * self.sigma_log / 2.0).exp()
    }

    pub fn median(&self) -> f64 {
        self.mu_log.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    AboveMax,
    BelowMin,
}

pub fn lognormal_tail(dist: &SocDistribution, threshold_wh: f64, side: TailSide) -> Result<f64> {
    dist.validate()?;
    ensure_non_negative(threshold_wh, "threshold_wh")?;
    let below = if threshold_wh == 0.0 {
        0.0
    } else {
        let z = (threshold_wh.ln() - dist.mu_log) / dist.sigma_log;
        0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
    };
    Ok(match side {
        TailSide::BelowMin => below,
        TailSide::AboveMax => 1.0 - below,
    })
}

/// Which tail triggers the demand bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandTrigger {
    /// Remaining charge at or below the minimum, as in the classification rule.
    #[default]
    LowerTail,
    /// Upper tail, as the bound is printed.
    Literal,
}

/// Limits and expectations the bounds are evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub min_wh: f64,
    pub max_wh: f64,
    pub alpha: f64,
    /// Expected charge before the route.
    pub mean_current_wh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassBounds {
    pub s_ub_wh: f64,
    pub d_ub_wh: f64,
}

/// Class totals: `n_ev * class_prob` EVs whose remaining charge follows `dist`.
pub fn supply_demand_upper_bounds(
    n_ev: usize,
    class_prob: f64,
    dist: &SocDistribution,
    inputs: &BoundInputs,
    trigger: DemandTrigger,
) -> Result<ClassBounds> {
    ensure_non_negative(class_prob, "class_prob")?;
    if class_prob > 1.0 {
        return Err(Error::InvalidParameter {
            field: "class_prob",
            reason: format!("{class_prob} > 1"),
        });
    }
    ensure_non_negative(inputs.min_wh, "min_wh")?;
    ensure_non_negative(inputs.mean_current_wh, "mean_current_wh")?;
    if inputs.max_wh.is_nan() || inputs.max_wh <= inputs.min_wh {
        return Err(Error::InvalidParameter {
            field: "max_wh",
            reason: "must exceed min_wh".into(),
        });
    }
    if !(inputs.alpha > 0.0 && inputs.alpha <= 1.0) {
        return Err(Error::InvalidParameter {
            field: "alpha",
            reason: format!("{} not in (0, 1]", inputs.alpha),
        });
    }
    let count = n_ev as f64 * class_prob;
    let p_supply = lognormal_tail(dist, inputs.max_wh, TailSide::AboveMax)?;
    let p_demand = match trigger {
        DemandTrigger::LowerTail => lognormal_tail(dist, inputs.min_wh, TailSide::BelowMin)?,
        DemandTrigger::Literal => p_supply,
    };
    Ok(ClassBounds {
        s_ub_wh: count * p_supply * inputs.alpha * dist.mean(),
        d_ub_wh: count * p_demand * (inputs.max_wh - inputs.mean_current_wh).max(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationLayout {
    pub road_length_m: f64,
    pub mean_trip_m: f64,
    pub n_stations: usize,
    /// Arrivals per hour.
    pub lambda_supp: f64,
    pub lambda_dem: f64,
}

impl StationLayout {
    /// One station per mean trip length, at least one.
    pub fn from_trip(road_length_m: f64, mean_trip_m: f64, lambda_supp: f64, lambda_dem: f64) -> Result<Self> {
        ensure_positive(road_length_m, "road_length_m")?;
        ensure_positive(mean_trip_m, "mean_trip_m")?;
        let layout = StationLayout {
            road_length_m,
            mean_trip_m,
            n_stations: ((road_length_m / mean_trip_m).floor() as usize).max(1),
            lambda_supp,
            lambda_dem,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_stations == 0 {
            return Err(Error::InvalidParameter {
                field: "n_stations",
                reason: "must be >= 1".into(),
            });
        }
        ensure_non_negative(self.lambda_supp, "lambda_supp")?;
        ensure_non_negative(self.lambda_dem, "lambda_dem")
    }
}

/// `sum_{k=0}^{kmax} k * Poisson(k; mean)`.
pub fn truncated_poisson_mean(mean: f64, kmax: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    (1..=kmax)
        .map(|k| {
            let k = k as f64;
            k * (-mean + k * ln_mean - ln_gamma(k + 1.0)).exp()
        })
        .sum()
}

pub fn expected_sellers_per_station(layout: &StationLayout) -> Result<f64> {
    layout.validate()?;
    let n = layout.n_stations;
    Ok(truncated_poisson_mean(layout.lambda_supp / n as f64, n))
}

pub fn expected_buyers_per_station(layout: &StationLayout) -> Result<f64> {
    layout.validate()?;
    Ok(layout.lambda_dem / layout.n_stations as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationChoice {
    pub n_stations: usize,
    pub score: f64,
    /// `(n_stations, qualifying sellers, expected sellers per station)` per candidate.
    pub scan: Vec<(usize, usize, f64)>,
}

/// Picks the station count maximising expected sellers per station. An EV
/// qualifies as a seller when its best utility over the nearest-station trip
/// `road_length_m / (2 n)` is positive and reaches `threshold`.
pub fn optimal_station_count(
    road_length_m: f64,
    grid: &GridParams,
    offers: &[SupplyOffer],
    threshold: f64,
    candidates: RangeInclusive<usize>,
) -> Result<StationChoice> {
    ensure_positive(road_length_m, "road_length_m")?;
    ensure_finite(threshold, "threshold")?;
    grid.validate()?;
    if candidates.is_empty() || *candidates.start() == 0 {
        return Err(Error::EmptyRange);
    }
    let best_volume = (grid.p_ev + grid.beta - grid.b) / (2.0 * grid.a) * grid.energy_unit_wh;
    let mut scan = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for n in candidates {
        let trip = road_length_m / (2.0 * n as f64);
        let sellers = offers
            .iter()
            .filter(|o| {
                let at = SupplyOffer {
                    trip_m: trip,
                    ..(*o).clone()
                };
                let u = ev_utility(grid, &at, o.offered_wh.min(best_volume.max(0.0)));
                u > grid.u_min && u >= threshold
            })
            .count();
        let layout = StationLayout {
            road_length_m,
            mean_trip_m: trip,
            n_stations: n,
            lambda_supp: sellers as f64,
            lambda_dem: 0.0,
        };
        let score = expected_sellers_per_station(&layout)?;
        scan.push((n, sellers, score));
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((n, score));
        }
    }
    let (n_stations, score) = best.expect("non-empty range");
    Ok(StationChoice {
        n_stations,
        score,
        scan,
    })
}
