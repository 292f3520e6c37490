//! Synthetic hourly wind and PV output.
//!
//! Every value is a pure function of `(fleet, month, hour)`: noise terms are
//! drawn from generators seeded by a hash of the fleet seed, the timestamp and
//! the source, so profiles can be evaluated in any order or in parallel.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, Error, Result};

/// Hours of daylight per month, London-like.
pub const DAYLENGTH_H: [f64; 12] = [8.0, 9.8, 11.8, 13.8, 15.6, 16.6, 16.2, 14.6, 12.6, 10.6, 8.7, 7.8];

const WIND_AR_LAGS: usize = 48;
const HOURS_PER_CYCLE: i64 = 12 * 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HourStamp {
    pub month: u8,
    pub hour: u8,
}

impl HourStamp {
    pub fn new(month: u8, hour: u8) -> Result<Self> {
        let t = HourStamp { month, hour };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=12).contains(&self.month) {
            return Err(Error::InvalidParameter {
                field: "month",
                reason: format!("{} not in 1..=12", self.month),
            });
        }
        if self.hour > 23 {
            return Err(Error::InvalidParameter {
                field: "hour",
                reason: format!("{} not in 0..=23", self.hour),
            });
        }
        Ok(())
    }

    pub fn all() -> impl Iterator<Item = HourStamp> {
        (1..=12u8).flat_map(|month| (0..24u8).map(move |hour| HourStamp { month, hour }))
    }

    fn index(&self) -> i64 {
        (self.month as i64 - 1) * 24 + self.hour as i64
    }

    fn from_index(idx: i64) -> HourStamp {
        let idx = idx.rem_euclid(HOURS_PER_CYCLE);
        HourStamp {
            month: (idx / 24 + 1) as u8,
            hour: (idx % 24) as u8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerSourceMean {
    pub wind: f64,
    pub pv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenewableFleet {
    pub n_wind: u32,
    pub n_pv: u32,
    /// Long-run mean per unit; for PV the mean over daylight hours.
    pub per_source_mean_wh: PerSourceMean,
    pub seasonal_amplitude: f64,
    pub noise_sigma: f64,
    pub wind_ar_coeff: f64,
    pub rng_seed: u64,
}

impl Default for RenewableFleet {
    fn default() -> Self {
        RenewableFleet {
            n_wind: 50,
            n_pv: 50,
            per_source_mean_wh: PerSourceMean { wind: 386.5, pv: 371.0 },
            seasonal_amplitude: 0.3,
            noise_sigma: 0.2,
            wind_ar_coeff: 0.8,
            rng_seed: 0,
        }
    }
}

impl RenewableFleet {
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative(self.per_source_mean_wh.wind, "fleet.per_source_mean_wh.wind")?;
        ensure_non_negative(self.per_source_mean_wh.pv, "fleet.per_source_mean_wh.pv")?;
        ensure_non_negative(self.noise_sigma, "fleet.noise_sigma")?;
        ensure_non_negative(self.seasonal_amplitude, "fleet.seasonal_amplitude")?;
        if self.seasonal_amplitude >= 1.0 {
            return Err(Error::InvalidParameter {
                field: "fleet.seasonal_amplitude",
                reason: "must be < 1 to keep season factors positive".into(),
            });
        }
        if !(0.0..1.0).contains(&self.wind_ar_coeff) {
            return Err(Error::InvalidParameter {
                field: "fleet.wind_ar_coeff",
                reason: "must be in [0, 1)".into(),
            });
        }
        Ok(())
    }
}

fn pv_season(fleet: &RenewableFleet, month: u8) -> f64 {
    1.0 + fleet.seasonal_amplitude * (2.0 * PI * (month as f64 - 6.0) / 12.0).cos()
}

fn wind_season(fleet: &RenewableFleet, month: u8) -> f64 {
    1.0 + fleet.seasonal_amplitude * (2.0 * PI * (month as f64 - 1.0) / 12.0).cos()
}

/// Sun elevation shape in [0, 1], evaluated at the middle of the hour.
pub fn pv_shape(t: HourStamp) -> f64 {
    let daylength = DAYLENGTH_H[t.month as usize - 1];
    let sunrise = 12.0 - daylength / 2.0;
    (PI * (t.hour as f64 + 0.5 - sunrise) / daylength).sin().max(0.0)
}

pub fn is_daylight(t: HourStamp) -> bool {
    pv_shape(t) > 0.0
}

/// Per-unit PV scale that makes the noise-free daylight mean hit the target.
fn pv_base(fleet: &RenewableFleet) -> f64 {
    let (sum, count) = HourStamp::all()
        .filter(|t| is_daylight(*t))
        .fold((0.0, 0usize), |(s, c), t| {
            (s + pv_shape(t) * pv_season(fleet, t.month), c + 1)
        });
    fleet.per_source_mean_wh.pv * count as f64 / sum
}

fn normal_draw(seed: u64, t: HourStamp, source: u64) -> f64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for part in [t.month as u64, t.hour as u64, source] {
        h = splitmix(h ^ part);
    }
    StandardNormal.sample(&mut ChaCha8Rng::seed_from_u64(h))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Noise-free PV output of the whole fleet.
pub fn pv_expected(fleet: &RenewableFleet, t: HourStamp) -> f64 {
    if fleet.n_pv == 0 {
        return 0.0;
    }
    fleet.n_pv as f64 * pv_base(fleet) * pv_shape(t) * pv_season(fleet, t.month)
}

pub fn pv_output(fleet: &RenewableFleet, t: HourStamp) -> Result<f64> {
    fleet.validate()?;
    t.validate()?;
    let expected = pv_expected(fleet, t);
    if expected == 0.0 {
        return Ok(0.0);
    }
    // Mean-one lognormal multiplier keeps the output non-negative and unbiased.
    let s = fleet.noise_sigma;
    let z = normal_draw(fleet.rng_seed, t, 1);
    Ok(expected * (s * z - s * s / 2.0).exp())
}

/// Noise-free wind output of the whole fleet.
pub fn wind_expected(fleet: &RenewableFleet, t: HourStamp) -> f64 {
    fleet.n_wind as f64 * fleet.per_source_mean_wh.wind * wind_season(fleet, t.month)
}

/// Stationary unit-variance AR(1) value at `t`, as a truncated moving average
/// of seeded innovations over the preceding hours.
fn wind_ar_noise(fleet: &RenewableFleet, t: HourStamp) -> f64 {
    let phi = fleet.wind_ar_coeff;
    let scale = (1.0 - phi * phi).sqrt();
    let mut acc = 0.0;
    let mut weight = 1.0;
    for lag in 0..WIND_AR_LAGS {
        let stamp = HourStamp::from_index(t.index() - lag as i64);
        acc += weight * normal_draw(fleet.rng_seed, stamp, 2);
        weight *= phi;
    }
    acc * scale
}

pub fn wind_output(fleet: &RenewableFleet, t: HourStamp) -> Result<f64> {
    fleet.validate()?;
    t.validate()?;
    if fleet.n_wind == 0 {
        return Ok(0.0);
    }
    let multiplier = (1.0 + fleet.noise_sigma * wind_ar_noise(fleet, t)).max(0.0);
    Ok(wind_expected(fleet, t) * multiplier)
}

/// Returns `(wind_wh, pv_wh)`.
pub fn aggregate_renewables(fleet: &RenewableFleet, t: HourStamp) -> Result<(f64, f64)> {
    Ok((wind_output(fleet, t)?, pv_output(fleet, t)?))
}
