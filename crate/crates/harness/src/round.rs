//! One hourly market round: traffic, energy positions, dispatch, baselines,
//! game bookkeeping and message counts.

use netzero_core::ev::{energy_position, route_energy, EnergyPosition, SocState, VehicleClass};
use netzero_core::game::{best_response, payoff, Action, ActionProfile, GameConfig, Player};
use netzero_core::mobility::{forecast_route_velocities, spawn_traffic, trace_from_samples, RecordMode, World};
use netzero_core::optimizer::{
    branch_and_bound_solve, ev_utility, feasible_supply_interval, grid_cost, verify_net_zero, DispatchSolution,
    GridParams, MarketSnapshot, SolveStatus, SupplyOffer,
};
use netzero_core::renewables::{aggregate_renewables, HourStamp};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::seeds::{SeedStreams, Subsystem};

/// Grid broadcasts per round on top of the per-EV uplinks.
pub const BROADCAST_MESSAGES: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvRecord {
    pub id: u64,
    pub class: VehicleClass,
    pub route_m: f64,
    pub supply_trip_m: f64,
    pub soc_current_wh: f64,
    pub energy_wh: f64,
    pub position: EnergyPosition,
}

/// Energy positions of every EV at market time; independent of grid prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetOutcome {
    pub evs: Vec<EvRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassStats {
    pub count: usize,
    pub n_demanders: usize,
    pub n_suppliers: usize,
    pub demand_wh: f64,
    pub supply_wh: f64,
    pub accepted_wh: f64,
}

impl FleetOutcome {
    pub fn class_stats(&self, class: VehicleClass) -> ClassStats {
        let mut s = ClassStats::default();
        for ev in self.evs.iter().filter(|e| e.class == class) {
            s.count += 1;
            if ev.position.is_demander() {
                s.n_demanders += 1;
                s.demand_wh += ev.position.demand_wh;
            }
            if ev.position.is_supplier() {
                s.n_suppliers += 1;
                s.supply_wh += ev.position.supply_wh;
            }
        }
        s
    }

    pub fn total_demand_wh(&self) -> f64 {
        self.evs.iter().map(|e| e.position.demand_wh).sum()
    }

    pub fn total_supply_wh(&self) -> f64 {
        self.evs.iter().map(|e| e.position.supply_wh).sum()
    }
}

/// Spawns `n_ev` vehicles and drives them for the configured horizon.
pub fn simulate_traffic(
    cfg: &ScenarioConfig,
    n_ev: usize,
    streams: &SeedStreams,
    rep: u64,
    mode: RecordMode,
) -> Result<World> {
    let vehicles = spawn_traffic(
        &cfg.road,
        n_ev,
        cfg.class_weights,
        &cfg.routes,
        streams.seed(Subsystem::Spawn, rep),
    )?;
    let mut world = World::new(
        cfg.road.clone(),
        cfg.routes,
        vehicles,
        streams.seed(Subsystem::Traffic, rep),
    )?;
    world.set_recording(mode);
    let steps = (cfg.simulation.trace_horizon_s / cfg.simulation.dt_s).round() as usize;
    world.run(steps, cfg.simulation.dt_s)?;
    Ok(world)
}

/// Forecasts each route from the recorded velocities and classifies the EVs.
pub fn assess_fleet(cfg: &ScenarioConfig, world: &World, soc_seed: u64) -> Result<FleetOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(soc_seed);
    let mut evs = Vec::with_capacity(world.vehicles().len());
    for (idx, v) in world.vehicles().iter().enumerate() {
        let spec = cfg.ev_specs.get(v.class);
        let bc = spec.battery_capacity_wh;
        let median = cfg.soc.median_fraction.get(v.class) * bc;
        let draw = LogNormal::new(median.ln(), cfg.soc.sigma_log)
            .map_err(|e| HarnessError::config("soc.sigma_log", e.to_string()))?
            .sample(&mut rng);
        let soc = SocState {
            current_wh: draw.min(bc),
            min_wh: cfg.soc.min_fraction * bc,
            max_wh: cfg.soc.max_fraction * bc,
            surplus_fraction: cfg.soc.alpha,
        };
        let history = trace_from_samples(world.velocity_history(idx), cfg.simulation.dt_s);
        let trace = forecast_route_velocities(
            cfg.forecaster,
            &history,
            v.route_length_m,
            cfg.simulation.forecast_seg_len_m,
            cfg.road.speed_limit_m_s.for_class(v.class),
        )?;
        let energy = route_energy(spec, &cfg.environment, &trace, &cfg.energy_model)?.energy_wh;
        evs.push(EvRecord {
            id: v.id,
            class: v.class,
            route_m: v.route_length_m,
            supply_trip_m: v.supply_trip_m,
            soc_current_wh: soc.current_wh,
            energy_wh: energy,
            position: energy_position(&soc, energy)?,
        });
    }
    Ok(FleetOutcome { evs })
}

/// Traffic plus classification for repetition `rep`; the expensive, price-free part of a round.
pub fn simulate_fleet(cfg: &ScenarioConfig, n_ev: usize, streams: &SeedStreams, rep: u64) -> Result<FleetOutcome> {
    let world = simulate_traffic(cfg, n_ev, streams, rep, RecordMode::Velocities)?;
    assess_fleet(cfg, &world, streams.seed(Subsystem::Soc, rep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub status: SolveStatus,
    pub s_g_wh: f64,
    pub cost_c_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageCounts {
    pub demand_uplinks: usize,
    pub supply_uplinks: usize,
    pub broadcasts: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameBook {
    pub players: usize,
    pub n_coop: usize,
    /// Players whose best response to the realised profile is Coop.
    pub coop_best_responses: usize,
    pub mean_payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: VehicleClass,
    #[serde(flatten)]
    pub stats: ClassStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub rep: u64,
    pub hour: HourStamp,
    pub n_ev: usize,
    pub n_demanders: usize,
    pub n_suppliers: usize,
    /// Suppliers with a non-empty positive-utility interval.
    pub n_viable_offers: usize,
    pub total_demand_wh: f64,
    pub offered_supply_wh: f64,
    pub wind_wh: f64,
    pub pv_wh: f64,
    pub solution: DispatchSolution,
    pub accepted_total_wh: f64,
    /// Accepted over offered surplus; 0 when nothing is offered.
    pub accepted_fraction: f64,
    /// Delivered energy over demand; 1 when there is no demand.
    pub demand_coverage: f64,
    pub no_prosumer: BaselineOutcome,
    /// Constant grid output at the cap, no prosumers.
    pub no_optimization: BaselineOutcome,
    pub grid_load_reduction: f64,
    pub messages: MessageCounts,
    pub net_zero_residual_wh: f64,
    pub game: Option<GameBook>,
    pub per_class: Vec<ClassRow>,
}

fn game_round(
    cfg: &ScenarioConfig,
    grid: &GridParams,
    offers: &[SupplyOffer],
    sol: &DispatchSolution,
) -> Result<Option<GameBook>> {
    if offers.is_empty() {
        return Ok(None);
    }
    let accepted: Vec<f64> = offers
        .iter()
        .map(|o| sol.accepted.get(&o.ev_id).copied().unwrap_or(0.0))
        .collect();
    let game = GameConfig {
        road_charge: cfg.game.road_charge,
        n_threshold: cfg.game.n_threshold,
        players: offers
            .iter()
            .zip(&accepted)
            .map(|(o, &x)| Player {
                utility_if_coop: ev_utility(grid, o, x),
                has_surplus: true,
            })
            .collect(),
    };
    let profile = ActionProfile {
        actions: accepted
            .iter()
            .map(|&x| if x > 0.0 { Action::Coop } else { Action::NonCoop })
            .collect(),
    };
    let mut total = 0.0;
    let mut coop_br = 0;
    for i in 0..offers.len() {
        total += payoff(&game, &profile, i)?;
        if best_response(&game, i, &profile)? == Action::Coop {
            coop_br += 1;
        }
    }
    Ok(Some(GameBook {
        players: offers.len(),
        n_coop: profile.n_coop(),
        coop_best_responses: coop_br,
        mean_payoff: total / offers.len() as f64,
    }))
}

/// Clears the market for one repetition given precomputed fleet positions.
pub fn market_round(
    cfg: &ScenarioConfig,
    grid: &GridParams,
    fleet: &FleetOutcome,
    streams: &SeedStreams,
    rep: u64,
    hour: HourStamp,
) -> Result<RoundReport> {
    grid.validate()?;
    let mut renewables = cfg.fleet.clone();
    renewables.rng_seed = streams.seed(Subsystem::Renewables, rep);
    let (wind_wh, pv_wh) = aggregate_renewables(&renewables, hour)?;

    let offers: Vec<SupplyOffer> = fleet
        .evs
        .iter()
        .filter(|e| e.position.is_supplier())
        .map(|e| SupplyOffer {
            ev_id: e.id,
            offered_wh: e.position.supply_wh,
            trip_m: e.supply_trip_m,
            delta: cfg.ev_specs.get(e.class).per_unit_consumption,
        })
        .collect();
    let n_suppliers = offers.len();
    let offered_supply_wh: f64 = offers.iter().map(|o| o.offered_wh).sum();
    let viable: Vec<SupplyOffer> = offers
        .into_iter()
        .filter(|o| feasible_supply_interval(grid, o).is_some())
        .collect();

    let snapshot = MarketSnapshot {
        offers: viable,
        total_demand_wh: fleet.total_demand_wh(),
        renewables_wh: wind_wh + pv_wh,
        grid: grid.clone(),
    };
    let solution = branch_and_bound_solve(&snapshot)?;
    if !solution.is_optimal() {
        return Err(HarnessError::Infeasible(Box::new(snapshot)));
    }
    let bare = branch_and_bound_solve(&snapshot.without_offers())?;
    let no_prosumer = BaselineOutcome {
        status: bare.status,
        s_g_wh: bare.s_g_wh,
        cost_c_g: bare.cost_c_g,
    };
    let no_optimization = BaselineOutcome {
        status: SolveStatus::Optimal,
        s_g_wh: grid.s_g_cap_wh,
        cost_c_g: grid_cost(grid, grid.s_g_cap_wh, 0.0),
    };

    let accepted_total_wh = solution.accepted_total_wh();
    let demand = snapshot.total_demand_wh;
    let delivered = solution.s_g_wh * (1.0 - grid.loss_fraction) + snapshot.renewables_wh + accepted_total_wh;
    let n_demanders = fleet.evs.iter().filter(|e| e.position.is_demander()).count();
    let messages = MessageCounts {
        demand_uplinks: n_demanders,
        supply_uplinks: n_suppliers,
        broadcasts: BROADCAST_MESSAGES,
        total: n_demanders + n_suppliers + BROADCAST_MESSAGES,
    };
    let game = game_round(cfg, grid, &snapshot.offers, &solution)?;
    let per_class = VehicleClass::ALL
        .iter()
        .map(|&class| {
            let mut stats = fleet.class_stats(class);
            stats.accepted_wh = fleet
                .evs
                .iter()
                .filter(|e| e.class == class)
                .filter_map(|e| solution.accepted.get(&e.id))
                .sum();
            ClassRow { class, stats }
        })
        .collect();

    Ok(RoundReport {
        rep,
        hour,
        n_ev: fleet.evs.len(),
        n_demanders,
        n_suppliers,
        n_viable_offers: snapshot.offers.len(),
        total_demand_wh: demand,
        offered_supply_wh,
        wind_wh,
        pv_wh,
        accepted_total_wh,
        accepted_fraction: if offered_supply_wh > 0.0 {
            accepted_total_wh / offered_supply_wh
        } else {
            0.0
        },
        demand_coverage: if demand > 0.0 { delivered / demand } else { 1.0 },
        grid_load_reduction: if grid.s_g_cap_wh > 0.0 {
            1.0 - solution.s_g_wh / grid.s_g_cap_wh
        } else {
            0.0
        },
        net_zero_residual_wh: verify_net_zero(&snapshot, &solution),
        solution,
        no_prosumer,
        no_optimization,
        messages,
        game,
        per_class,
    })
}

/// Full round for repetition `rep` at the configured fleet size and prices.
pub fn run_round(cfg: &ScenarioConfig, hour: HourStamp, rep: u64) -> Result<RoundReport> {
    let streams = SeedStreams::new(cfg.rng_seed);
    let fleet = simulate_fleet(cfg, cfg.n_ev, &streams, rep)?;
    market_round(cfg, &cfg.grid, &fleet, &streams, rep, hour)
}
