//! Highway traffic with Krauss car-following and route-velocity forecasters.
//!
//! The road is a ring: a vehicle leaving at `length_m` re-enters at 0 in the
//! same lane with a freshly drawn route, so lane order is cyclic and density
//! stays constant. Lane changes are not modelled.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::ev::{Segment, VehicleClass, VelocityTrace};

pub const CAR_BUS_LIMIT_M_S: f64 = 112.65 / 3.6;
pub const LORRY_LIMIT_M_S: f64 = 96.56 / 3.6;

/// Spacing kept between bumpers when vehicles are placed.
pub const MIN_GAP_M: f64 = 2.5;

/// Slack kept by the guard pass so rounding in position updates cannot overlap.
const GUARD_SLACK_M: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimits {
    pub car: f64,
    pub bus: f64,
    pub lorry: f64,
}

impl Default for SpeedLimits {
    fn default() -> Self {
        SpeedLimits {
            car: CAR_BUS_LIMIT_M_S,
            bus: CAR_BUS_LIMIT_M_S,
            lorry: LORRY_LIMIT_M_S,
        }
    }
}

impl SpeedLimits {
    pub fn for_class(&self, class: VehicleClass) -> f64 {
        match class {
            VehicleClass::Car => self.car,
            VehicleClass::Bus => self.bus,
            VehicleClass::Lorry => self.lorry,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadConfig {
    pub length_m: f64,
    pub lane_count: usize,
    pub speed_limit_m_s: SpeedLimits,
    pub station_positions_m: Vec<f64>,
}

impl Default for RoadConfig {
    fn default() -> Self {
        RoadConfig {
            length_m: 20_000.0,
            lane_count: 3,
            speed_limit_m_s: SpeedLimits::default(),
            station_positions_m: Vec::new(),
        }
    }
}

impl RoadConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.length_m, "road.length_m")?;
        if self.lane_count == 0 {
            return Err(Error::InvalidParameter {
                field: "road.lane_count",
                reason: "need at least one lane".into(),
            });
        }
        for class in VehicleClass::ALL {
            ensure_positive(self.speed_limit_m_s.for_class(class), "road.speed_limit_m_s")?;
        }
        if let Some(bad) = self
            .station_positions_m
            .iter()
            .find(|p| !(0.0..=self.length_m).contains(*p))
        {
            return Err(Error::InvalidParameter {
                field: "road.station_positions_m",
                reason: format!("station at {bad} outside [0, {}]", self.length_m),
            });
        }
        Ok(())
    }
}

/// Per-class car-following parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KraussParams {
    pub accel_m_s2: f64,
    pub decel_m_s2: f64,
    pub reaction_s: f64,
    pub length_m: f64,
}

impl KraussParams {
    pub fn for_class(class: VehicleClass) -> Self {
        let (accel, length) = match class {
            VehicleClass::Car => (1.5, 5.0),
            VehicleClass::Bus => (1.5, 12.0),
            VehicleClass::Lorry => (1.0, 16.0),
        };
        KraussParams {
            accel_m_s2: accel,
            decel_m_s2: 4.5,
            reaction_s: 1.0,
            length_m: length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: u64,
    pub class: VehicleClass,
    /// Front bumper position along the road.
    pub position_m: f64,
    pub lane: usize,
    pub velocity_m_s: f64,
    pub route_length_m: f64,
    pub supply_trip_m: f64,
}

/// Lognormal route and supply-trip lengths, parameterised by their medians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouteDistribution {
    pub median_route_m: f64,
    pub median_supply_trip_m: f64,
    pub sigma_log: f64,
}

impl Default for RouteDistribution {
    fn default() -> Self {
        RouteDistribution {
            median_route_m: 10_000.0,
            median_supply_trip_m: 6_000.0,
            sigma_log: 1.0,
        }
    }
}

impl RouteDistribution {
    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.median_route_m, "routes.median_route_m")?;
        ensure_positive(self.median_supply_trip_m, "routes.median_supply_trip_m")?;
        ensure_finite(self.sigma_log, "routes.sigma_log")?;
        if self.sigma_log < 0.0 {
            return Err(Error::InvalidParameter {
                field: "routes.sigma_log",
                reason: "must be >= 0".into(),
            });
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        if self.sigma_log == 0.0 {
            return (self.median_route_m, self.median_supply_trip_m);
        }
        let route = LogNormal::new(self.median_route_m.ln(), self.sigma_log).expect("validated");
        let trip = LogNormal::new(self.median_supply_trip_m.ln(), self.sigma_log).expect("validated");
        (route.sample(rng), trip.sample(rng))
    }
}

/// Normalises class weights so they sum to one.
pub fn normalize_class_probs(weights: [f64; 3]) -> Result<[f64; 3]> {
    for w in weights {
        ensure_finite(w, "class_probs")?;
        if w < 0.0 {
            return Err(Error::InvalidParameter {
                field: "class_probs",
                reason: format!("negative weight {w}"),
            });
        }
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "class_probs",
            reason: "weights sum to zero".into(),
        });
    }
    Ok(weights.map(|w| w / total))
}

fn headway_slot_m() -> f64 {
    VehicleClass::ALL
        .iter()
        .map(|c| KraussParams::for_class(*c).length_m)
        .fold(0.0, f64::max)
        + MIN_GAP_M
}

/// Number of vehicles the road holds at the placement headway.
pub fn road_capacity(road: &RoadConfig) -> usize {
    road.lane_count * (road.length_m / headway_slot_m()).floor() as usize
}

pub fn spawn_traffic(
    road: &RoadConfig,
    n_ev: usize,
    class_weights: [f64; 3],
    routes: &RouteDistribution,
    rng_seed: u64,
) -> Result<Vec<VehicleState>> {
    road.validate()?;
    routes.validate()?;
    let probs = normalize_class_probs(class_weights)?;
    let capacity = road_capacity(road);
    if n_ev > capacity {
        return Err(Error::RoadCapacity {
            road_m: road.length_m,
            requested: n_ev,
            capacity,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let slot = headway_slot_m();
    let slots_per_lane = capacity / road.lane_count;
    let mut chosen = sample(&mut rng, capacity, n_ev).into_vec();
    chosen.sort_unstable();
    let mut vehicles = Vec::with_capacity(n_ev);
    for (id, slot_idx) in chosen.into_iter().enumerate() {
        let draw: f64 = rng.random();
        let class = if draw < probs[0] {
            VehicleClass::Car
        } else if draw < probs[0] + probs[1] {
            VehicleClass::Bus
        } else {
            VehicleClass::Lorry
        };
        let lane = slot_idx / slots_per_lane;
        let position = (slot_idx % slots_per_lane) as f64 * slot + KraussParams::for_class(class).length_m;
        let limit = road.speed_limit_m_s.for_class(class);
        let velocity = limit * rng.random_range(0.5..=1.0);
        let (route, trip) = routes.sample(&mut rng);
        vehicles.push(VehicleState {
            id: id as u64,
            class,
            position_m: position,
            lane,
            velocity_m_s: velocity,
            route_length_m: route,
            supply_trip_m: trip,
        });
    }
    Ok(vehicles)
}

/// Bumper-to-bumper distance; the leader occupies `[position - length, position]`.
pub fn gap_m(follower: &VehicleState, leader: &VehicleState) -> f64 {
    leader.position_m - KraussParams::for_class(leader.class).length_m - follower.position_m
}

/// Largest velocity the follower can drive while still able to stop behind the leader.
pub fn krauss_safe_velocity(
    follower: &VehicleState,
    leader: &VehicleState,
    reaction_s: f64,
    max_decel_m_s2: f64,
) -> Result<f64> {
    let gap = gap_m(follower, leader);
    if gap < 0.0 {
        return Err(Error::Collision {
            follower: follower.id,
            leader: leader.id,
            gap,
        });
    }
    Ok(safe_velocity(
        gap,
        leader.velocity_m_s,
        follower.velocity_m_s,
        reaction_s,
        max_decel_m_s2,
    ))
}

fn safe_velocity(gap: f64, v_leader: f64, v_follower: f64, reaction_s: f64, decel: f64) -> f64 {
    v_leader + (gap - v_leader * reaction_s) / ((v_leader + v_follower) / (2.0 * decel) + reaction_s)
}

/// Krauss update without dawdling: accelerate, respect the limit and the safe speed.
pub fn krauss_desired_velocity(v: f64, v_safe: f64, accel_m_s2: f64, dt_s: f64, v_limit: f64) -> f64 {
    (v + accel_m_s2 * dt_s).min(v_limit).min(v_safe).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecordMode {
    #[default]
    None,
    Velocities,
    /// Velocities and positions.
    Full,
}

/// Single-owner traffic state advanced in fixed steps.
#[derive(Debug, Clone)]
pub struct World {
    pub road: RoadConfig,
    pub routes: RouteDistribution,
    pub time_s: f64,
    vehicles: Vec<VehicleState>,
    /// Per lane, vehicle indices ordered by ascending position.
    lanes: Vec<Vec<usize>>,
    rng: ChaCha8Rng,
    record: RecordMode,
    velocity_log: Vec<Vec<f64>>,
    position_log: Vec<Vec<f64>>,
    recycled: Vec<u32>,
}

impl World {
    pub fn new(
        road: RoadConfig,
        routes: RouteDistribution,
        vehicles: Vec<VehicleState>,
        rng_seed: u64,
    ) -> Result<Self> {
        road.validate()?;
        let mut lanes = vec![Vec::new(); road.lane_count];
        for (idx, v) in vehicles.iter().enumerate() {
            if v.lane >= road.lane_count {
                return Err(Error::InvalidParameter {
                    field: "lane",
                    reason: format!("vehicle {} in lane {} of {}", v.id, v.lane, road.lane_count),
                });
            }
            lanes[v.lane].push(idx);
        }
        for lane in &mut lanes {
            lane.sort_by(|a, b| vehicles[*a].position_m.total_cmp(&vehicles[*b].position_m));
        }
        let n = vehicles.len();
        Ok(World {
            road,
            routes,
            time_s: 0.0,
            vehicles,
            lanes,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            record: RecordMode::None,
            velocity_log: vec![Vec::new(); n],
            position_log: vec![Vec::new(); n],
            recycled: vec![0; n],
        })
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    /// Starts recording from the next step, discarding anything recorded so far.
    pub fn set_recording(&mut self, mode: RecordMode) {
        self.record = mode;
        self.velocity_log.iter_mut().for_each(Vec::clear);
        self.position_log.iter_mut().for_each(Vec::clear);
    }

    /// Velocity after each recorded step.
    pub fn velocity_history(&self, idx: usize) -> &[f64] {
        &self.velocity_log[idx]
    }

    /// Position after each recorded step; empty unless recording `Full`.
    pub fn position_history(&self, idx: usize) -> &[f64] {
        &self.position_log[idx]
    }

    /// How many times the vehicle wrapped around and received a new route.
    pub fn recycled_count(&self, idx: usize) -> u32 {
        self.recycled[idx]
    }

    /// Leader of `idx` in its lane, with the positional offset applied when
    /// the leader is reached by wrapping around the ring.
    fn leader_of(&self, lane: &[usize], pos_in_lane: usize) -> (usize, f64) {
        if pos_in_lane + 1 < lane.len() {
            (lane[pos_in_lane + 1], 0.0)
        } else {
            (lane[0], self.road.length_m)
        }
    }

    pub fn step(&mut self, dt_s: f64) -> Result<()> {
        ensure_positive(dt_s, "dt_s")?;
        let mut new_v = vec![0.0; self.vehicles.len()];
        for lane_idx in 0..self.lanes.len() {
            let lane = std::mem::take(&mut self.lanes[lane_idx]);
            let n = lane.len();
            let mut gaps = vec![0.0; n];
            for k in 0..n {
                let idx = lane[k];
                let (lead_idx, offset) = self.leader_of(&lane, k);
                let me = &self.vehicles[idx];
                let params = KraussParams::for_class(me.class);
                let limit = self.road.speed_limit_m_s.for_class(me.class);
                let (v_safe, gap) = if lead_idx == idx {
                    (f64::INFINITY, f64::INFINITY)
                } else {
                    let leader = &self.vehicles[lead_idx];
                    let gap =
                        leader.position_m + offset - KraussParams::for_class(leader.class).length_m - me.position_m;
                    if gap < 0.0 {
                        return Err(Error::Collision {
                            follower: me.id,
                            leader: leader.id,
                            gap,
                        });
                    }
                    (
                        safe_velocity(
                            gap,
                            leader.velocity_m_s,
                            me.velocity_m_s,
                            params.reaction_s,
                            params.decel_m_s2,
                        ),
                        gap,
                    )
                };
                gaps[k] = gap;
                new_v[idx] = krauss_desired_velocity(me.velocity_m_s, v_safe, params.accel_m_s2, dt_s, limit);
            }
            // Guard pass: nobody may close more than the current gap within the step.
            if n > 1 {
                loop {
                    let mut changed = false;
                    for k in (0..n).rev() {
                        let idx = lane[k];
                        let lead_idx = if k + 1 < n { lane[k + 1] } else { lane[0] };
                        let cap = new_v[lead_idx] + (gaps[k] - GUARD_SLACK_M) / dt_s;
                        if new_v[idx] > cap {
                            new_v[idx] = cap.max(0.0);
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
            }
            self.lanes[lane_idx] = lane;
        }

        self.time_s += dt_s;
        for lane_idx in 0..self.lanes.len() {
            let mut wrapped = 0;
            for &idx in &self.lanes[lane_idx] {
                let v = new_v[idx];
                let veh = &mut self.vehicles[idx];
                veh.velocity_m_s = v;
                veh.position_m += v * dt_s;
                if veh.position_m >= self.road.length_m {
                    veh.position_m -= self.road.length_m;
                    let (route, trip) = self.routes.sample(&mut self.rng);
                    veh.route_length_m = route;
                    veh.supply_trip_m = trip;
                    self.recycled[idx] += 1;
                    wrapped += 1;
                }
            }
            // Wrapped vehicles were the frontmost ones and are now rearmost.
            self.lanes[lane_idx].rotate_right(wrapped);
        }

        if self.record != RecordMode::None {
            for (idx, veh) in self.vehicles.iter().enumerate() {
                self.velocity_log[idx].push(veh.velocity_m_s);
                if self.record == RecordMode::Full {
                    self.position_log[idx].push(veh.position_m);
                }
            }
        }
        Ok(())
    }

    pub fn run(&mut self, steps: usize, dt_s: f64) -> Result<()> {
        for _ in 0..steps {
            self.step(dt_s)?;
        }
        Ok(())
    }

    /// Smallest bumper gap over all same-lane neighbour pairs.
    pub fn min_gap_m(&self) -> f64 {
        let mut best = f64::INFINITY;
        for lane in &self.lanes {
            if lane.len() < 2 {
                continue;
            }
            for k in 0..lane.len() {
                let (lead, offset) = self.leader_of(lane, k);
                let me = &self.vehicles[lane[k]];
                let leader = &self.vehicles[lead];
                let gap = leader.position_m + offset - KraussParams::for_class(leader.class).length_m - me.position_m;
                best = best.min(gap);
            }
        }
        best
    }

    /// Vehicle ids per lane in cyclic order starting from the rearmost.
    pub fn lane_order(&self) -> Vec<Vec<u64>> {
        self.lanes
            .iter()
            .map(|lane| lane.iter().map(|&i| self.vehicles[i].id).collect())
            .collect()
    }
}

/// Converts fixed-step velocity samples into distance segments, dropping stops.
pub fn trace_from_samples(velocities: &[f64], dt_s: f64) -> VelocityTrace {
    let segments = velocities
        .iter()
        .filter(|v| **v > 0.0)
        .map(|&v| Segment {
            length_m: v * dt_s,
            velocity_m_s: v,
        })
        .collect();
    VelocityTrace::new(segments)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "window")]
pub enum ForecasterKind {
    /// Perfect prediction: the observed trace replayed over the route.
    #[default]
    Oracle,
    SpeedLimit,
    MovingAverage(usize),
}

impl ForecasterKind {
    pub fn validate(&self) -> Result<()> {
        if let ForecasterKind::MovingAverage(0) = self {
            return Err(Error::InvalidParameter {
                field: "forecaster.window",
                reason: "window must be >= 1".into(),
            });
        }
        Ok(())
    }
}

pub fn forecast_route_velocities(
    kind: ForecasterKind,
    history: &VelocityTrace,
    route_len_m: f64,
    seg_len_m: f64,
    class_limit_m_s: f64,
) -> Result<VelocityTrace> {
    ensure_positive(route_len_m, "route_len_m")?;
    ensure_positive(seg_len_m, "seg_len_m")?;
    kind.validate()?;
    history.validate()?;
    if history.is_empty() {
        return Ok(VelocityTrace::constant(route_len_m, seg_len_m, class_limit_m_s));
    }
    match kind {
        ForecasterKind::SpeedLimit => Ok(VelocityTrace::constant(route_len_m, seg_len_m, class_limit_m_s)),
        ForecasterKind::MovingAverage(window) => {
            let tail = &history.segments[history.segments.len().saturating_sub(window)..];
            let mean = tail.iter().map(|s| s.velocity_m_s).sum::<f64>() / tail.len() as f64;
            Ok(VelocityTrace::constant(route_len_m, seg_len_m, mean))
        }
        ForecasterKind::Oracle => Ok(replay(history, route_len_m)),
    }
}

/// Repeats the trace cyclically until `route_len_m` is covered, trimming the last segment.
fn replay(history: &VelocityTrace, route_len_m: f64) -> VelocityTrace {
    let tol = 1e-9 * route_len_m.max(1.0);
    let mut segments = Vec::new();
    let mut covered = 0.0;
    'outer: loop {
        for seg in &history.segments {
            let left = route_len_m - covered;
            if left <= tol {
                break 'outer;
            }
            let len = if seg.length_m >= left - tol { left } else { seg.length_m };
            segments.push(Segment {
                length_m: len,
                velocity_m_s: seg.velocity_m_s,
            });
            covered += len;
        }
    }
    VelocityTrace {
        segments,
        initial_velocity_m_s: history.initial_velocity_m_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vehicle(id: u64, class: VehicleClass, position: f64, velocity: f64) -> VehicleState {
        VehicleState {
            id,
            class,
            position_m: position,
            lane: 0,
            velocity_m_s: velocity,
            route_length_m: 10_000.0,
            supply_trip_m: 6_000.0,
        }
    }

    #[test]
    fn bumper_to_bumper_stop() {
        let leader = vehicle(1, VehicleClass::Car, 105.0, 0.0);
        let follower = vehicle(0, VehicleClass::Car, 100.0, 10.0);
        let v_safe = krauss_safe_velocity(&follower, &leader, 1.0, 4.5).unwrap();
        assert!(v_safe <= 0.0);
        assert_eq!(krauss_desired_velocity(10.0, v_safe, 1.5, 1.0, 31.0), 0.0);
    }

    #[test]
    fn free_flow_when_leader_far() {
        let leader = vehicle(1, VehicleClass::Car, 1.0e9, 30.0);
        let follower = vehicle(0, VehicleClass::Car, 0.0, 20.0);
        let v_safe = krauss_safe_velocity(&follower, &leader, 1.0, 4.5).unwrap();
        assert_eq!(krauss_desired_velocity(20.0, v_safe, 1.5, 1.0, 31.29), 21.5);
        assert_eq!(krauss_desired_velocity(31.0, v_safe, 1.5, 1.0, 31.29), 31.29);
    }

    #[test]
    fn overlap_is_rejected() {
        let leader = vehicle(1, VehicleClass::Lorry, 110.0, 0.0);
        let follower = vehicle(0, VehicleClass::Car, 100.0, 10.0);
        assert!(matches!(
            krauss_safe_velocity(&follower, &leader, 1.0, 4.5),
            Err(Error::Collision { .. })
        ));
    }

    #[test]
    fn spawn_edge_cases() {
        let road = RoadConfig::default();
        let routes = RouteDistribution::default();
        assert!(spawn_traffic(&road, 0, [0.6, 0.4, 0.4], &routes, 1).unwrap().is_empty());
        let a = spawn_traffic(&road, 300, [0.6, 0.4, 0.4], &routes, 9).unwrap();
        let b = spawn_traffic(&road, 300, [0.6, 0.4, 0.4], &routes, 9).unwrap();
        assert_eq!(a, b);
        let tiny = RoadConfig {
            length_m: 100.0,
            lane_count: 1,
            ..RoadConfig::default()
        };
        assert!(matches!(
            spawn_traffic(&tiny, 10, [1.0, 0.0, 0.0], &routes, 1),
            Err(Error::RoadCapacity { .. })
        ));
    }

    #[test]
    fn class_weights_normalised() {
        let p = normalize_class_probs([0.6, 0.4, 0.4]).unwrap();
        assert!((p[0] - 3.0 / 7.0).abs() < 1e-15);
        assert!((p[1] - 2.0 / 7.0).abs() < 1e-15);
        assert!(normalize_class_probs([0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn empty_world_steps() {
        let mut w = World::new(RoadConfig::default(), RouteDistribution::default(), vec![], 1).unwrap();
        w.step(1.0).unwrap();
        assert!(w.vehicles().is_empty());
        assert!(w.step(0.0).is_err());
    }

    #[test]
    fn lone_vehicle_reaches_limit_monotonically() {
        let v = vehicle(0, VehicleClass::Car, 10.0, 0.0);
        let mut w = World::new(RoadConfig::default(), RouteDistribution::default(), vec![v], 1).unwrap();
        let mut last = 0.0;
        for _ in 0..40 {
            w.step(1.0).unwrap();
            let now = w.vehicles()[0].velocity_m_s;
            assert!(now >= last);
            last = now;
        }
        assert!((last - CAR_BUS_LIMIT_M_S).abs() < 1e-12);
    }

    #[test]
    fn follower_never_passes_leader() {
        let leader = vehicle(1, VehicleClass::Lorry, 80.0, 0.0);
        let follower = vehicle(0, VehicleClass::Car, 0.0, 31.0);
        let road = RoadConfig {
            length_m: 2_000.0,
            lane_count: 1,
            ..RoadConfig::default()
        };
        let mut w = World::new(road, RouteDistribution::default(), vec![follower, leader], 3).unwrap();
        for _ in 0..2_000 {
            w.step(1.0).unwrap();
            assert!(w.min_gap_m() >= 0.0);
            assert_eq!(w.lane_order()[0].len(), 2);
        }
    }

    #[test]
    fn recording_modes() {
        let v = vehicle(0, VehicleClass::Bus, 50.0, 10.0);
        let mut w = World::new(RoadConfig::default(), RouteDistribution::default(), vec![v], 1).unwrap();
        w.run(3, 1.0).unwrap();
        assert!(w.velocity_history(0).is_empty());
        w.set_recording(RecordMode::Velocities);
        w.run(5, 1.0).unwrap();
        assert_eq!(w.velocity_history(0), &[16.0, 17.5, 19.0, 20.5, 22.0]);
        assert!(w.position_history(0).is_empty());
        w.set_recording(RecordMode::Full);
        w.step(1.0).unwrap();
        assert_eq!(w.position_history(0), &[w.vehicles()[0].position_m]);
    }

    #[test]
    fn samples_to_trace() {
        let t = trace_from_samples(&[10.0, 0.0, 20.0], 1.0);
        assert_eq!(t.segments.len(), 2);
        assert_eq!(t.total_length_m(), 30.0);
    }

    #[test]
    fn forecasters() {
        let history = VelocityTrace::new(
            [10.0, 20.0, 30.0]
                .iter()
                .map(|&v| Segment {
                    length_m: v,
                    velocity_m_s: v,
                })
                .collect(),
        );
        let same = forecast_route_velocities(ForecasterKind::Oracle, &history, 60.0, 100.0, 31.0).unwrap();
        assert_eq!(same, history);

        let avg = forecast_route_velocities(ForecasterKind::MovingAverage(3), &history, 1_000.0, 100.0, 31.0).unwrap();
        assert!(avg.segments.iter().all(|s| (s.velocity_m_s - 20.0).abs() < 1e-12));
        assert!((avg.total_length_m() - 1_000.0).abs() < 1e-9);

        let lorry =
            forecast_route_velocities(ForecasterKind::SpeedLimit, &history, 500.0, 100.0, LORRY_LIMIT_M_S).unwrap();
        assert!(lorry.segments.iter().all(|s| (s.velocity_m_s - 26.82).abs() < 0.01));

        let fallback = forecast_route_velocities(
            ForecasterKind::MovingAverage(5),
            &VelocityTrace::default(),
            300.0,
            100.0,
            LORRY_LIMIT_M_S,
        )
        .unwrap();
        assert_eq!(fallback.segments.len(), 3);
        assert_eq!(fallback.segments[0].velocity_m_s, LORRY_LIMIT_M_S);
        assert!(ForecasterKind::MovingAverage(0).validate().is_err());
    }

    #[test]
    fn oracle_replays_cyclically() {
        let history = trace_from_samples(&[10.0, 20.0], 1.0);
        let t = forecast_route_velocities(ForecasterKind::Oracle, &history, 75.0, 100.0, 31.0).unwrap();
        let v: Vec<f64> = t.segments.iter().map(|s| s.velocity_m_s).collect();
        assert_eq!(v, vec![10.0, 20.0, 10.0, 20.0, 10.0, 20.0]);
        assert!((t.segments[5].length_m - 5.0).abs() < 1e-9);
        assert!((t.total_length_m() - 75.0).abs() < 1e-9);
    }
}
