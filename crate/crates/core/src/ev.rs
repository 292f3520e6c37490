//! Longitudinal EV energy model and demand/surplus classification.
//!
//! Energy is accounted in Wh, power in W, distances in m and velocities in
//! m/s throughout. Conversion to market units happens in the optimizer.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// Lower clamp applied to the drivetrain efficiency.
pub const ETA_FLOOR: f64 = 0.05;

/// Velocity floor used when converting segment length to travel time.
pub const V_FLOOR_M_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleClass {
    Car,
    Bus,
    Lorry,
}

impl VehicleClass {
    pub const ALL: [VehicleClass; 3] = [VehicleClass::Car, VehicleClass::Bus, VehicleClass::Lorry];

    pub fn name(self) -> &'static str {
        match self {
            VehicleClass::Car => "car",
            VehicleClass::Bus => "bus",
            VehicleClass::Lorry => "lorry",
        }
    }

    pub fn index(self) -> usize {
        match self {
            VehicleClass::Car => 0,
            VehicleClass::Bus => 1,
            VehicleClass::Lorry => 2,
        }
    }
}

impl std::fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Static vehicle parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvSpec {
    pub class: VehicleClass,
    pub mass_kg: f64,
    pub frontal_area_m2: f64,
    pub rolling_resist: f64,
    pub drag_coeff: f64,
    pub wheel_radius_m: f64,
    pub gear_ratio: f64,
    pub motor_power_w: f64,
    pub battery_capacity_wh: f64,
    /// Energy spent per metre travelled to reach a charging station (Wh/m).
    pub per_unit_consumption: f64,
}

impl EvSpec {
    pub fn preset(class: VehicleClass) -> Self {
        let (cr, cd, m, a, rw, gr, mp_kw, bc_kwh) = match class {
            VehicleClass::Car => (0.01, 0.28, 1619.0, 2.56, 0.2, 7.94, 110.0, 40.0),
            VehicleClass::Bus => (0.08, 0.6, 2375.0, 2.56, 0.28, 3.98, 200.0, 320.0),
            VehicleClass::Lorry => (0.011, 0.8, 3556.0, 5.98, 0.28, 3.73, 220.0, 112.0),
        };
        EvSpec {
            class,
            mass_kg: m,
            frontal_area_m2: a,
            rolling_resist: cr,
            drag_coeff: cd,
            wheel_radius_m: rw,
            gear_ratio: gr,
            motor_power_w: mp_kw * 1000.0,
            battery_capacity_wh: bc_kwh * 1000.0,
            per_unit_consumption: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.mass_kg, "mass_kg")?;
        ensure_positive(self.frontal_area_m2, "frontal_area_m2")?;
        ensure_positive(self.rolling_resist, "rolling_resist")?;
        ensure_positive(self.drag_coeff, "drag_coeff")?;
        ensure_positive(self.wheel_radius_m, "wheel_radius_m")?;
        ensure_positive(self.gear_ratio, "gear_ratio")?;
        ensure_positive(self.motor_power_w, "motor_power_w")?;
        ensure_positive(self.battery_capacity_wh, "battery_capacity_wh")?;
        ensure_positive(self.per_unit_consumption, "per_unit_consumption")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Environment {
    /// Slope as rise over run; the inclination angle is `atan(road_grade)`.
    pub road_grade: f64,
    pub air_density_kg_m3: f64,
    pub gravity_m_s2: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            road_grade: 0.06,
            air_density_kg_m3: 1.28,
            gravity_m_s2: 9.81,
        }
    }
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.road_grade, "road_grade")?;
        if self.road_grade.abs() >= 1.0 {
            return Err(Error::InvalidParameter {
                field: "road_grade",
                reason: format!("|grade| must be < 1, got {}", self.road_grade),
            });
        }
        ensure_positive(self.air_density_kg_m3, "air_density_kg_m3")?;
        ensure_positive(self.gravity_m_s2, "gravity_m_s2")
    }

    fn angle(&self) -> f64 {
        self.road_grade.atan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length_m: f64,
    pub velocity_m_s: f64,
}

/// Route split into consecutive segments, each travelled at one velocity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityTrace {
    pub segments: Vec<Segment>,
    /// Velocity entering the first segment; defaults to the first segment's.
    #[serde(default)]
    pub initial_velocity_m_s: Option<f64>,
}

impl VelocityTrace {
    pub fn new(segments: Vec<Segment>) -> Self {
        VelocityTrace {
            segments,
            initial_velocity_m_s: None,
        }
    }

    /// Route of `length_m` cut into pieces of at most `seg_len_m`, all at `velocity`.
    pub fn constant(length_m: f64, seg_len_m: f64, velocity: f64) -> Self {
        let mut segments = Vec::new();
        let mut covered = 0.0;
        while length_m - covered > 1e-9 * length_m.max(1.0) {
            let len = seg_len_m.min(length_m - covered);
            segments.push(Segment {
                length_m: len,
                velocity_m_s: velocity,
            });
            covered += len;
        }
        VelocityTrace::new(segments)
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_length_m(&self) -> f64 {
        self.segments.iter().map(|s| s.length_m).sum()
    }

    pub fn total_time_s(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.length_m / s.velocity_m_s.max(V_FLOOR_M_S))
            .sum()
    }

    pub fn entry_velocity(&self) -> f64 {
        self.initial_velocity_m_s
            .or_else(|| self.segments.first().map(|s| s.velocity_m_s))
            .unwrap_or(0.0)
    }

    pub fn exit_velocity(&self) -> f64 {
        self.segments.last().map_or(self.entry_velocity(), |s| s.velocity_m_s)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v0) = self.initial_velocity_m_s {
            if !v0.is_finite() || v0 < 0.0 {
                return Err(Error::MalformedTrace(format!("initial velocity {v0}")));
            }
        }
        for (k, seg) in self.segments.iter().enumerate() {
            if !seg.length_m.is_finite() || seg.length_m <= 0.0 {
                return Err(Error::MalformedTrace(format!(
                    "segment {k} has length {}",
                    seg.length_m
                )));
            }
            if !seg.velocity_m_s.is_finite() || seg.velocity_m_s < 0.0 {
                return Err(Error::MalformedTrace(format!(
                    "segment {k} has velocity {}",
                    seg.velocity_m_s
                )));
            }
        }
        Ok(())
    }

    /// Appends `other`; its entry velocity is superseded by this trace's exit.
    pub fn concat(&self, other: &VelocityTrace) -> VelocityTrace {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&other.segments);
        VelocityTrace {
            segments,
            initial_velocity_m_s: self.initial_velocity_m_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocState {
    pub current_wh: f64,
    pub min_wh: f64,
    pub max_wh: f64,
    /// Share of the remaining charge offered as surplus.
    pub surplus_fraction: f64,
}

impl SocState {
    /// SOC limits at 20% / 80% of capacity with a 20% surplus share.
    pub fn standard(spec: &EvSpec, current_wh: f64) -> Self {
        SocState {
            current_wh,
            min_wh: 0.2 * spec.battery_capacity_wh,
            max_wh: 0.8 * spec.battery_capacity_wh,
            surplus_fraction: 0.2,
        }
    }

    pub fn validate(&self, battery_capacity_wh: f64) -> Result<()> {
        ensure_non_negative(self.current_wh, "current_wh")?;
        ensure_non_negative(self.min_wh, "min_wh")?;
        ensure_finite(self.max_wh, "max_wh")?;
        if self.min_wh >= self.max_wh || self.max_wh > battery_capacity_wh {
            return Err(Error::InvalidParameter {
                field: "max_wh",
                reason: format!(
                    "need min < max <= capacity, got {} / {} / {}",
                    self.min_wh, self.max_wh, battery_capacity_wh
                ),
            });
        }
        if self.current_wh > battery_capacity_wh {
            return Err(Error::InvalidParameter {
                field: "current_wh",
                reason: format!("{} exceeds capacity {}", self.current_wh, battery_capacity_wh),
            });
        }
        if !(self.surplus_fraction > 0.0 && self.surplus_fraction <= 1.0) {
            return Err(Error::InvalidParameter {
                field: "surplus_fraction",
                reason: format!("must lie in (0, 1], got {}", self.surplus_fraction),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPosition {
    pub demand_wh: f64,
    pub supply_wh: f64,
    pub remaining_wh: f64,
    /// The route drains the battery below zero.
    pub battery_infeasible: bool,
}

impl EnergyPosition {
    pub fn is_demander(&self) -> bool {
        self.demand_wh > 0.0
    }

    pub fn is_supplier(&self) -> bool {
        self.supply_wh > 0.0
    }
}

/// How segment energy is integrated over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    /// Each segment contributes power times its own travel time.
    #[default]
    PerSegment,
    /// Each segment's power is multiplied by the whole route time.
    RouteTotal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyModelConfig {
    pub time_mode: TimeMode,
    /// Fraction of negative traction power recovered; 0 disables regeneration.
    pub regen_efficiency: f64,
}

impl Default for EnergyModelConfig {
    fn default() -> Self {
        EnergyModelConfig {
            time_mode: TimeMode::PerSegment,
            regen_efficiency: 0.0,
        }
    }
}

/// Traction force in newtons; negative while decelerating hard or downhill.
pub fn traction_force(spec: &EvSpec, env: &Environment, v_prev: f64, v: f64, seg_len: f64) -> Result<f64> {
    ensure_finite(v_prev, "v_prev")?;
    ensure_finite(v, "v")?;
    ensure_finite(seg_len, "seg_len")?;
    if seg_len <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "seg_len",
            reason: format!("must be > 0, got {seg_len}"),
        });
    }
    if v < 0.0 || v_prev < 0.0 {
        return Err(Error::InvalidParameter {
            field: "v",
            reason: format!("velocities must be >= 0, got {v_prev} -> {v}"),
        });
    }
    let theta = env.angle();
    let m = spec.mass_kg;
    let g = env.gravity_m_s2;
    let accel = (v * v - v_prev * v_prev) / (2.0 * seg_len);
    let grade = m * g * theta.sin();
    let rolling = m * g * theta.cos() * spec.rolling_resist;
    let aero = env.air_density_kg_m3 * spec.frontal_area_m2 * spec.drag_coeff * v * v / 2.0;
    Ok(grade + rolling + aero + m * accel)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    pub eta: f64,
    /// The raw value fell outside `(ETA_FLOOR, 1]` and was clamped.
    pub saturated: bool,
}

/// Motor efficiency as torque times traction speed over rated power.
pub fn drivetrain_efficiency(spec: &EvSpec, force: f64, v: f64) -> Result<Efficiency> {
    ensure_finite(force, "force")?;
    ensure_finite(v, "v")?;
    if v <= 0.0 {
        return Err(Error::UndefinedEfficiency);
    }
    let torque = force * spec.wheel_radius_m / spec.gear_ratio;
    let omega = v * spec.gear_ratio / spec.wheel_radius_m;
    let raw = torque * omega / spec.motor_power_w;
    Ok(if raw > 1.0 {
        Efficiency {
            eta: 1.0,
            saturated: true,
        }
    } else if raw <= ETA_FLOOR {
        Efficiency {
            eta: ETA_FLOOR,
            saturated: true,
        }
    } else {
        Efficiency {
            eta: raw,
            saturated: false,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RouteEnergy {
    pub energy_wh: f64,
    pub saturated_segments: usize,
}

pub fn route_energy(
    spec: &EvSpec,
    env: &Environment,
    trace: &VelocityTrace,
    cfg: &EnergyModelConfig,
) -> Result<RouteEnergy> {
    trace.validate()?;
    let route_time = trace.total_time_s();
    let mut out = RouteEnergy::default();
    let mut v_prev = trace.entry_velocity();
    for seg in &trace.segments {
        let v = seg.velocity_m_s;
        let force = traction_force(spec, env, v_prev, v, seg.length_m)?;
        v_prev = v;
        if v <= 0.0 {
            continue;
        }
        let time = match cfg.time_mode {
            TimeMode::PerSegment => seg.length_m / v.max(V_FLOOR_M_S),
            TimeMode::RouteTotal => route_time,
        };
        let power = if force < 0.0 {
            cfg.regen_efficiency * force * v
        } else {
            let eff = drivetrain_efficiency(spec, force, v)?;
            if eff.saturated {
                out.saturated_segments += 1;
            }
            force * v / eff.eta
        };
        out.energy_wh += power * time / SECONDS_PER_HOUR;
    }
    if !out.energy_wh.is_finite() {
        return Err(Error::NonFinite("route energy"));
    }
    Ok(out)
}

/// Classifies the EV as demander, surplus supplier, or neither.
pub fn energy_position(soc: &SocState, ec_wh: f64) -> Result<EnergyPosition> {
    ensure_non_negative(ec_wh, "ec_wh")?;
    let remaining = soc.current_wh - ec_wh;
    let demand = if remaining <= soc.min_wh {
        (soc.max_wh - soc.current_wh).max(0.0)
    } else {
        0.0
    };
    let supply = if remaining >= soc.max_wh {
        soc.surplus_fraction * remaining
    } else {
        0.0
    };
    Ok(EnergyPosition {
        demand_wh: demand,
        supply_wh: supply,
        remaining_wh: remaining,
        battery_infeasible: remaining < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car() -> EvSpec {
        EvSpec::preset(VehicleClass::Car)
    }

    fn flat() -> Environment {
        Environment {
            road_grade: 0.0,
            ..Environment::default()
        }
    }

    #[test]
    fn rolling_only_at_standstill() {
        let f = traction_force(&car(), &flat(), 0.0, 0.0, 10.0).unwrap();
        assert!((f - 158.8239).abs() < 1e-3, "{f}");
    }

    #[test]
    fn zero_density_constant_speed_is_pure_rolling() {
        let env = Environment {
            road_grade: 0.0,
            air_density_kg_m3: 0.0,
            gravity_m_s2: 9.81,
        };
        for class in VehicleClass::ALL {
            let spec = EvSpec::preset(class);
            let f = traction_force(&spec, &env, 17.0, 17.0, 50.0).unwrap();
            assert_eq!(f, spec.mass_kg * 9.81 * spec.rolling_resist);
        }
    }

    #[test]
    fn four_term_sum_on_grade() {
        let spec = car();
        let env = Environment::default();
        let f = traction_force(&spec, &env, 20.0, 25.0, 100.0).unwrap();
        // Term-by-term recomputation.
        let theta = 0.06f64.atan();
        let grade = 1619.0 * 9.81 * theta.sin();
        let rolling = 1619.0 * 9.81 * theta.cos() * 0.01;
        let aero = 1.28 * 2.56 * 0.28 * 625.0 / 2.0;
        let inertial = 1619.0 * (625.0 - 400.0) / 200.0;
        let expected = grade + rolling + aero + inertial;
        assert!((f - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn traction_rejects_bad_inputs() {
        let spec = car();
        let env = flat();
        assert!(traction_force(&spec, &env, 0.0, f64::NAN, 1.0).is_err());
        assert!(traction_force(&spec, &env, 0.0, 1.0, 0.0).is_err());
        assert!(traction_force(&spec, &env, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn efficiency_cases() {
        let spec = car();
        let rated = drivetrain_efficiency(&spec, 110_000.0 / 20.0, 20.0).unwrap();
        assert!((rated.eta - 1.0).abs() < 1e-12);
        assert!(!rated.saturated);

        let e = drivetrain_efficiency(&spec, 500.0, 22.0).unwrap();
        assert!((e.eta - 0.1).abs() < 1e-12);

        let over = drivetrain_efficiency(&spec, 10_000.0, 22.0).unwrap();
        assert_eq!(over.eta, 1.0);
        assert!(over.saturated);

        let low = drivetrain_efficiency(&spec, 1.0, 1.0).unwrap();
        assert_eq!(low.eta, ETA_FLOOR);
        assert!(low.saturated);

        assert_eq!(
            drivetrain_efficiency(&spec, 500.0, 0.0),
            Err(Error::UndefinedEfficiency)
        );
    }

    #[test]
    fn stopped_trace_consumes_nothing() {
        let trace = VelocityTrace::new(vec![
            Segment {
                length_m: 10.0,
                velocity_m_s: 0.0
            };
            5
        ]);
        let e = route_energy(&car(), &Environment::default(), &trace, &EnergyModelConfig::default()).unwrap();
        assert_eq!(e.energy_wh, 0.0);
        assert_eq!(
            route_energy(
                &car(),
                &flat(),
                &VelocityTrace::default(),
                &EnergyModelConfig::default()
            )
            .unwrap()
            .energy_wh,
            0.0
        );
    }

    #[test]
    fn constant_speed_matches_closed_form() {
        let spec = car();
        let env = flat();
        let v = 25.0;
        let length = 5_000.0;
        let trace = VelocityTrace::constant(length, 100.0, v);
        let e = route_energy(&spec, &env, &trace, &EnergyModelConfig::default()).unwrap();
        let force = spec.mass_kg * 9.81 * spec.rolling_resist + 1.28 * 2.56 * 0.28 * v * v / 2.0;
        let eta = (force * v / spec.motor_power_w).clamp(ETA_FLOOR, 1.0);
        let expected = force * length / eta / 3600.0;
        assert!(
            (e.energy_wh - expected).abs() <= 1e-9 * expected,
            "{} vs {expected}",
            e.energy_wh
        );
    }

    #[test]
    fn route_total_mode_scales_by_segment_count() {
        let spec = car();
        let env = flat();
        let trace = VelocityTrace::constant(1_000.0, 100.0, 20.0);
        let per_seg = route_energy(&spec, &env, &trace, &EnergyModelConfig::default()).unwrap();
        let literal = route_energy(
            &spec,
            &env,
            &trace,
            &EnergyModelConfig {
                time_mode: TimeMode::RouteTotal,
                regen_efficiency: 0.0,
            },
        )
        .unwrap();
        assert!((literal.energy_wh - 10.0 * per_seg.energy_wh).abs() < 1e-9 * literal.energy_wh);
    }

    #[test]
    fn heavier_vehicle_never_cheaper() {
        let env = flat();
        let cfg = EnergyModelConfig::default();
        let light = car();
        let heavy = EvSpec {
            mass_kg: 2.0 * light.mass_kg,
            ..light.clone()
        };
        // Efficiency floor regime: energy scales with force.
        let slow = VelocityTrace::constant(1_000.0, 50.0, 1.0);
        let a = route_energy(&light, &env, &slow, &cfg).unwrap().energy_wh;
        let b = route_energy(&heavy, &env, &slow, &cfg).unwrap().energy_wh;
        assert!(b > a);
        // Mid-range efficiency: electrical power pins to motor power.
        let fast = VelocityTrace::constant(1_000.0, 50.0, 25.0);
        let a = route_energy(&light, &env, &fast, &cfg).unwrap().energy_wh;
        let b = route_energy(&heavy, &env, &fast, &cfg).unwrap().energy_wh;
        assert!(b >= a);
    }

    #[test]
    fn regeneration_policy() {
        let spec = car();
        let env = Environment {
            road_grade: -0.08,
            ..Environment::default()
        };
        let trace = VelocityTrace::constant(500.0, 100.0, 5.0);
        let none = route_energy(&spec, &env, &trace, &EnergyModelConfig::default()).unwrap();
        assert_eq!(none.energy_wh, 0.0);
        let regen = route_energy(
            &spec,
            &env,
            &trace,
            &EnergyModelConfig {
                regen_efficiency: 0.6,
                ..EnergyModelConfig::default()
            },
        )
        .unwrap();
        assert!(regen.energy_wh < 0.0);
    }

    #[test]
    fn malformed_trace_rejected() {
        let trace = VelocityTrace::new(vec![Segment {
            length_m: -1.0,
            velocity_m_s: 3.0,
        }]);
        assert!(matches!(
            route_energy(&car(), &flat(), &trace, &EnergyModelConfig::default()),
            Err(Error::MalformedTrace(_))
        ));
    }

    #[test]
    fn full_battery_no_trip_offers_surplus() {
        let spec = car();
        let soc = SocState::standard(&spec, 32_000.0);
        let pos = energy_position(&soc, 0.0).unwrap();
        assert!((pos.supply_wh - 0.2 * 32_000.0).abs() < 1e-9);
        assert_eq!(pos.demand_wh, 0.0);
    }

    #[test]
    fn depleted_route_demands_recharge() {
        let spec = car();
        let soc = SocState::standard(&spec, 20_000.0);
        let pos = energy_position(&soc, 15_000.0).unwrap();
        assert_eq!(pos.remaining_wh, 5_000.0);
        assert_eq!(pos.demand_wh, 12_000.0);
        assert_eq!(pos.supply_wh, 0.0);
    }

    #[test]
    fn middle_band_is_neutral() {
        let spec = car();
        let soc = SocState::standard(&spec, 25_000.0);
        let pos = energy_position(&soc, 5_000.0).unwrap();
        assert_eq!((pos.demand_wh, pos.supply_wh), (0.0, 0.0));
    }

    #[test]
    fn negative_remainder_flagged() {
        let spec = car();
        let soc = SocState::standard(&spec, 10_000.0);
        let pos = energy_position(&soc, 12_000.0).unwrap();
        assert!(pos.battery_infeasible);
        assert_eq!(pos.demand_wh, 22_000.0);
    }

    #[test]
    fn soc_validation() {
        let spec = car();
        assert!(SocState::standard(&spec, 10_000.0)
            .validate(spec.battery_capacity_wh)
            .is_ok());
        let bad = SocState {
            surplus_fraction: 0.0,
            ..SocState::standard(&spec, 10_000.0)
        };
        assert!(bad.validate(spec.battery_capacity_wh).is_err());
        assert!(spec.validate().is_ok());
        assert!(Environment {
            road_grade: 1.5,
            ..Environment::default()
        }
        .validate()
        .is_err());
    }
}
