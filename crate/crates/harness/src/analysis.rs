//! Closed-form bound tables, station count selection and tournament setup
//! derived from a scenario.

use netzero_core::bounds::{
    optimal_station_count, supply_demand_upper_bounds, BoundInputs, ClassBounds, SocDistribution, StationChoice,
};
use netzero_core::ev::{route_energy, VehicleClass, VelocityTrace};
use netzero_core::game::{conspiracy_threshold, GameConfig, Player};
use netzero_core::optimizer::{ev_utility, feasible_supply_interval, GridParams, SupplyOffer};
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioConfig, SocSource};
use crate::error::Result;
use crate::round::{FleetOutcome, RoundReport};

/// Remaining-charge distribution of a class and the limits its bounds use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub class: VehicleClass,
    pub dist: SocDistribution,
    pub inputs: BoundInputs,
}

/// The remaining charge is lognormal with the configured log spread. Its
/// median is either the median pre-route charge minus the energy of a
/// median route at the class speed limit, or a fixed per-class value.
pub fn class_model(cfg: &ScenarioConfig, class: VehicleClass) -> Result<ClassModel> {
    let spec = cfg.ev_specs.get(class);
    let bc = spec.battery_capacity_wh;
    let median_current = cfg.soc.median_fraction.get(class) * bc;
    let dist = match cfg.bounds.soc_source {
        SocSource::Derived => {
            let trace = VelocityTrace::constant(
                cfg.routes.median_route_m,
                cfg.simulation.forecast_seg_len_m,
                cfg.road.speed_limit_m_s.for_class(class),
            );
            let ec = route_energy(spec, &cfg.environment, &trace, &cfg.energy_model)?.energy_wh;
            let median_remaining = (median_current - ec).max(1.0);
            SocDistribution::from_median(
                median_remaining,
                cfg.soc.sigma_log,
                format!(
                    "median {:.0} Wh = median current {:.0} Wh - {:.0} Wh for a {:.0} m route at the speed limit",
                    median_remaining, median_current, ec, cfg.routes.median_route_m
                ),
            )?
        }
        SocSource::Table => {
            let median = *cfg.bounds.table_median_wh.get(class);
            SocDistribution::from_median(median, cfg.soc.sigma_log, format!("configured median {median:.0} Wh"))?
        }
    };
    let sigma = cfg.soc.sigma_log;
    Ok(ClassModel {
        class,
        dist,
        inputs: BoundInputs {
            min_wh: cfg.soc.min_fraction * bc,
            max_wh: cfg.soc.max_fraction * bc,
            alpha: cfg.soc.alpha,
            mean_current_wh: median_current * (sigma * sigma / 2.0).exp(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub class: VehicleClass,
    pub s_ub_wh: f64,
    pub d_ub_wh: f64,
    pub sim_supply_wh: f64,
    pub sim_demand_wh: f64,
    pub sim_supply_max_wh: f64,
    pub sim_demand_max_wh: f64,
    pub mu_log: f64,
    pub sigma_log: f64,
}

pub fn class_bounds(cfg: &ScenarioConfig, n_ev: usize, class: VehicleClass) -> Result<ClassBounds> {
    let model = class_model(cfg, class)?;
    let prob = cfg.class_probs()[class.index()];
    Ok(supply_demand_upper_bounds(
        n_ev,
        prob,
        &model.dist,
        &model.inputs,
        cfg.bounds.demand_trigger,
    )?)
}

/// Bounds per class against the simulated class totals of `fleets`.
pub fn bound_table(cfg: &ScenarioConfig, n_ev: usize, fleets: &[FleetOutcome]) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::new();
    for class in VehicleClass::ALL {
        let model = class_model(cfg, class)?;
        let b = class_bounds(cfg, n_ev, class)?;
        let stats: Vec<_> = fleets.iter().map(|f| f.class_stats(class)).collect();
        let n = stats.len().max(1) as f64;
        rows.push(BoundRow {
            class,
            s_ub_wh: b.s_ub_wh,
            d_ub_wh: b.d_ub_wh,
            sim_supply_wh: stats.iter().map(|s| s.supply_wh).sum::<f64>() / n,
            sim_demand_wh: stats.iter().map(|s| s.demand_wh).sum::<f64>() / n,
            sim_supply_max_wh: stats.iter().map(|s| s.supply_wh).fold(0.0, f64::max),
            sim_demand_max_wh: stats.iter().map(|s| s.demand_wh).fold(0.0, f64::max),
            mu_log: model.dist.mu_log,
            sigma_log: model.dist.sigma_log,
        });
    }
    Ok(rows)
}

pub fn fleet_offers(cfg: &ScenarioConfig, fleet: &FleetOutcome) -> Vec<SupplyOffer> {
    fleet
        .evs
        .iter()
        .filter(|e| e.position.is_supplier())
        .map(|e| SupplyOffer {
            ev_id: e.id,
            offered_wh: e.position.supply_wh,
            trip_m: e.supply_trip_m,
            delta: cfg.ev_specs.get(e.class).per_unit_consumption,
        })
        .collect()
}

/// Station count maximising expected sellers per station, with every
/// current supplier counted as a potential cooperator.
pub fn station_choice(cfg: &ScenarioConfig, grid: &GridParams, fleet: &FleetOutcome) -> Result<StationChoice> {
    let offers = fleet_offers(cfg, fleet);
    let threshold = conspiracy_threshold(cfg.game.road_charge, offers.len().max(1))?;
    Ok(optimal_station_count(
        cfg.road.length_m,
        grid,
        &offers,
        threshold,
        cfg.bounds.station_candidates(),
    )?)
}

/// Game over the round's viable offers; utilities at the accepted volume.
pub fn tournament_config(cfg: &ScenarioConfig, report: &RoundReport, fleet: &FleetOutcome) -> Option<GameConfig> {
    let grid = &report.solution;
    let players: Vec<Player> = fleet_offers(cfg, fleet)
        .iter()
        .filter(|o| feasible_supply_interval(&cfg.grid, o).is_some())
        .map(|o| Player {
            utility_if_coop: ev_utility(&cfg.grid, o, grid.accepted.get(&o.ev_id).copied().unwrap_or(0.0)),
            has_surplus: true,
        })
        .collect();
    if players.is_empty() {
        return None;
    }
    Some(GameConfig {
        road_charge: cfg.game.road_charge,
        n_threshold: cfg.game.n_threshold,
        players,
    })
}
