use std::ops::RangeInclusive;
use std::path::Path;

use netzero_core::bounds::DemandTrigger;
use netzero_core::ev::{EnergyModelConfig, Environment, EvSpec, VehicleClass};
use netzero_core::game::KnowledgeBase;
use netzero_core::mobility::{normalize_class_probs, road_capacity, ForecasterKind, RoadConfig, RouteDistribution};
use netzero_core::optimizer::GridParams;
use netzero_core::renewables::{HourStamp, RenewableFleet};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

/// One value per vehicle class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassValues<T> {
    pub car: T,
    pub bus: T,
    pub lorry: T,
}

impl<T> ClassValues<T> {
    pub fn get(&self, class: VehicleClass) -> &T {
        match class {
            VehicleClass::Car => &self.car,
            VehicleClass::Bus => &self.bus,
            VehicleClass::Lorry => &self.lorry,
        }
    }
}

impl Default for ClassValues<EvSpec> {
    fn default() -> Self {
        ClassValues {
            car: EvSpec::preset(VehicleClass::Car),
            bus: EvSpec::preset(VehicleClass::Bus),
            lorry: EvSpec::preset(VehicleClass::Lorry),
        }
    }
}

/// Pre-route charge and the SOC limits, as fractions of battery capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SocConfig {
    /// Median charge before the route.
    pub median_fraction: ClassValues<f64>,
    /// Log-scale spread of the pre-route charge.
    pub sigma_log: f64,
    pub min_fraction: f64,
    pub max_fraction: f64,
    /// Share of the remaining charge offered as surplus.
    pub alpha: f64,
}

impl Default for SocConfig {
    fn default() -> Self {
        SocConfig {
            median_fraction: ClassValues {
                car: 0.35,
                bus: 0.75,
                lorry: 0.4,
            },
            sigma_log: 0.1,
            min_fraction: 0.2,
            max_fraction: 0.8,
            alpha: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Traffic simulated before each market round.
    pub trace_horizon_s: f64,
    pub dt_s: f64,
    pub forecast_seg_len_m: f64,
    pub hour: HourStamp,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            trace_horizon_s: 3600.0,
            dt_s: 1.0,
            forecast_seg_len_m: 100.0,
            hour: HourStamp { month: 6, hour: 12 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSettings {
    pub road_charge: f64,
    pub n_threshold: usize,
    pub tournament_rounds: usize,
    pub knowledge_base: KnowledgeBase,
}

impl Default for GameSettings {
    fn default() -> Self {
        GameSettings {
            road_charge: 150.0,
            n_threshold: 5,
            tournament_rounds: 50,
            knowledge_base: KnowledgeBase::QPrime,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub p_ev: Vec<f64>,
    pub m_g: Vec<f64>,
    pub s_g_cap_wh: Vec<f64>,
    pub n_ev: Vec<usize>,
    pub repetitions: usize,
}

impl Default for SweepAxes {
    fn default() -> Self {
        SweepAxes {
            p_ev: vec![6.0],
            m_g: vec![0.05],
            s_g_cap_wh: vec![29.0e6],
            n_ev: vec![500],
            repetitions: 100,
        }
    }
}

/// Where the remaining-charge median of the bound distribution comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocSource {
    /// Median pre-route charge minus the energy of a median route.
    #[default]
    Derived,
    /// The fixed per-class medians in `table_median_wh`.
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSettings {
    pub demand_trigger: DemandTrigger,
    pub soc_source: SocSource,
    pub table_median_wh: ClassValues<f64>,
    pub station_min: usize,
    pub station_max: usize,
}

impl Default for BoundsSettings {
    fn default() -> Self {
        BoundsSettings {
            demand_trigger: DemandTrigger::LowerTail,
            soc_source: SocSource::Derived,
            table_median_wh: ClassValues {
                car: 5_000.0,
                bus: 50_000.0,
                lorry: 10_000.0,
            },
            station_min: 1,
            station_max: 20,
        }
    }
}

impl BoundsSettings {
    pub fn station_candidates(&self) -> RangeInclusive<usize> {
        self.station_min..=self.station_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub road: RoadConfig,
    pub routes: RouteDistribution,
    pub environment: Environment,
    pub energy_model: EnergyModelConfig,
    pub ev_specs: ClassValues<EvSpec>,
    /// Relative car / bus / lorry shares; normalised on use.
    pub class_weights: [f64; 3],
    pub soc: SocConfig,
    pub fleet: RenewableFleet,
    pub grid: GridParams,
    pub n_ev: usize,
    pub forecaster: ForecasterKind,
    pub simulation: SimulationConfig,
    pub game: GameSettings,
    pub sweep: SweepAxes,
    pub bounds: BoundsSettings,
    pub rng_seed: u64,
    pub output_dir: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            road: RoadConfig::default(),
            routes: RouteDistribution::default(),
            environment: Environment::default(),
            energy_model: EnergyModelConfig::default(),
            ev_specs: ClassValues::default(),
            class_weights: [0.6, 0.4, 0.4],
            soc: SocConfig::default(),
            fleet: RenewableFleet::default(),
            grid: GridParams::default(),
            n_ev: 500,
            forecaster: ForecasterKind::Oracle,
            simulation: SimulationConfig::default(),
            game: GameSettings::default(),
            sweep: SweepAxes::default(),
            bounds: BoundsSettings::default(),
            rng_seed: 42,
            output_dir: "results".into(),
        }
    }
}

fn core_field(err: netzero_core::Error) -> HarnessError {
    match err {
        netzero_core::Error::InvalidParameter { field, reason } => HarnessError::config(field, reason),
        netzero_core::Error::NonFinite(field) => HarnessError::config(field, "must be finite"),
        other => HarnessError::Core(other),
    }
}

fn fraction(v: f64, field: &str) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(HarnessError::config(field, format!("must lie in (0, 1), got {v}")))
    }
}

fn non_empty<T>(axis: &[T], field: &str) -> Result<()> {
    if axis.is_empty() {
        Err(HarnessError::config(field, "sweep axis must not be empty"))
    } else {
        Ok(())
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.road.validate().map_err(core_field)?;
        self.routes.validate().map_err(core_field)?;
        self.environment.validate().map_err(core_field)?;
        for class in VehicleClass::ALL {
            let spec = self.ev_specs.get(class);
            spec.validate().map_err(core_field)?;
            if spec.class != class {
                return Err(HarnessError::config(
                    format!("ev_specs.{}.class", class.name()),
                    format!("preset declares class {:?}", spec.class),
                ));
            }
            fraction(
                *self.soc.median_fraction.get(class),
                &format!("soc.median_fraction.{}", class.name()),
            )?;
        }
        if !(self.energy_model.regen_efficiency >= 0.0 && self.energy_model.regen_efficiency <= 1.0) {
            return Err(HarnessError::config(
                "energy_model.regen_efficiency",
                "must lie in [0, 1]",
            ));
        }
        normalize_class_probs(self.class_weights).map_err(core_field)?;
        if !(self.soc.sigma_log > 0.0 && self.soc.sigma_log.is_finite()) {
            return Err(HarnessError::config("soc.sigma_log", "must be > 0"));
        }
        fraction(self.soc.min_fraction, "soc.min_fraction")?;
        fraction(self.soc.max_fraction, "soc.max_fraction")?;
        if self.soc.min_fraction >= self.soc.max_fraction {
            return Err(HarnessError::config("soc.max_fraction", "must exceed soc.min_fraction"));
        }
        if !(self.soc.alpha > 0.0 && self.soc.alpha <= 1.0) {
            return Err(HarnessError::config("soc.alpha", "must lie in (0, 1]"));
        }
        self.fleet.validate().map_err(core_field)?;
        self.grid.validate().map_err(core_field)?;
        self.forecaster.validate().map_err(core_field)?;
        let sim = &self.simulation;
        if !(sim.dt_s > 0.0 && sim.dt_s.is_finite()) {
            return Err(HarnessError::config("simulation.dt_s", "must be > 0"));
        }
        if !(sim.trace_horizon_s >= sim.dt_s && sim.trace_horizon_s.is_finite()) {
            return Err(HarnessError::config(
                "simulation.trace_horizon_s",
                "must cover at least one step",
            ));
        }
        if !(sim.forecast_seg_len_m > 0.0 && sim.forecast_seg_len_m.is_finite()) {
            return Err(HarnessError::config("simulation.forecast_seg_len_m", "must be > 0"));
        }
        sim.hour.validate().map_err(|e| match core_field(e) {
            HarnessError::Config { field, reason } => HarnessError::config(format!("simulation.hour.{field}"), reason),
            other => other,
        })?;
        if !(self.game.road_charge >= 0.0 && self.game.road_charge.is_finite()) {
            return Err(HarnessError::config(
                "game.road_charge",
                format!("must be >= 0, got {}", self.game.road_charge),
            ));
        }
        if self.game.n_threshold == 0 {
            return Err(HarnessError::config("game.n_threshold", "must be >= 1"));
        }
        if self.game.tournament_rounds == 0 {
            return Err(HarnessError::config("game.tournament_rounds", "must be >= 1"));
        }
        let sw = &self.sweep;
        non_empty(&sw.p_ev, "sweep.p_ev")?;
        non_empty(&sw.m_g, "sweep.m_g")?;
        non_empty(&sw.s_g_cap_wh, "sweep.s_g_cap_wh")?;
        non_empty(&sw.n_ev, "sweep.n_ev")?;
        if sw.repetitions == 0 {
            return Err(HarnessError::config("sweep.repetitions", "must be >= 1"));
        }
        for (axis, field) in [
            (&sw.p_ev, "sweep.p_ev"),
            (&sw.m_g, "sweep.m_g"),
            (&sw.s_g_cap_wh, "sweep.s_g_cap_wh"),
        ] {
            if let Some(v) = axis.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(HarnessError::config(
                    field,
                    format!("values must be finite and >= 0, got {v}"),
                ));
            }
        }
        let capacity = road_capacity(&self.road);
        for (n, field) in std::iter::once((self.n_ev, "n_ev")).chain(sw.n_ev.iter().map(|n| (*n, "sweep.n_ev"))) {
            if n > capacity {
                return Err(HarnessError::config(
                    field,
                    format!("{n} EVs exceed the road capacity of {capacity}"),
                ));
            }
        }
        for class in VehicleClass::ALL {
            let v = *self.bounds.table_median_wh.get(class);
            if !(v > 0.0 && v.is_finite()) {
                return Err(HarnessError::config(
                    format!("bounds.table_median_wh.{}", class.name()),
                    format!("must be > 0, got {v}"),
                ));
            }
        }
        if self.bounds.station_min == 0 || self.bounds.station_min > self.bounds.station_max {
            return Err(HarnessError::config(
                "bounds.station_min",
                "need 1 <= station_min <= station_max",
            ));
        }
        Ok(())
    }

    /// Canonical JSON used for hashing and manifests.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn class_probs(&self) -> [f64; 3] {
        normalize_class_probs(self.class_weights).expect("validated")
    }
}

/// Parses and validates a config document; blank input yields the defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg = if text.trim().is_empty() {
        ScenarioConfig::default()
    } else {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            HarnessError::config(
                if path == "." { "<root>".to_string() } else { path },
                e.inner().to_string(),
            )
        })?
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config(&text)
}
