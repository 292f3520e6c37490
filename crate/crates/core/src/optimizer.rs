//! Grid dispatch: minimise grid cost over grid output and per-EV accepted
//! surplus, where each EV sells either nothing or an amount inside its
//! positive-utility interval.
//!
//! Energies are in Wh. Prices and the quadratic utility coefficients are per
//! market energy unit of `energy_unit_wh` (1 kWh by default).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

pub const BRUTE_FORCE_MAX_OFFERS: usize = 20;
const PRUNE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub p_g: f64,
    /// kg CO2 per market unit generated.
    pub m_g: f64,
    /// Penalty per kg CO2.
    pub pc: f64,
    pub p_ev: f64,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    pub loss_fraction: f64,
    pub s_g_cap_wh: f64,
    pub energy_unit_wh: f64,
    /// Smallest utility that counts as positive.
    pub u_min: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            p_g: 12.0,
            m_g: 0.05,
            pc: 10.0,
            p_ev: 6.0,
            beta: 10.0,
            a: 0.01,
            b: 0.1,
            loss_fraction: 0.02,
            s_g_cap_wh: 29.0e6,
            energy_unit_wh: 1000.0,
            u_min: 1e-6,
        }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        for (v, f) in [
            (self.p_g, "grid.p_g"),
            (self.m_g, "grid.m_g"),
            (self.pc, "grid.pc"),
            (self.p_ev, "grid.p_ev"),
            (self.beta, "grid.beta"),
            (self.loss_fraction, "grid.loss_fraction"),
            (self.s_g_cap_wh, "grid.s_g_cap_wh"),
            (self.u_min, "grid.u_min"),
        ] {
            ensure_non_negative(v, f)?;
        }
        ensure_positive(self.a, "grid.a")?;
        ensure_positive(self.b, "grid.b")?;
        ensure_positive(self.energy_unit_wh, "grid.energy_unit_wh")?;
        if self.loss_fraction >= 1.0 {
            return Err(Error::InvalidParameter {
                field: "grid.loss_fraction",
                reason: "must be < 1".into(),
            });
        }
        Ok(())
    }

    /// Price of one generated market unit including the emission penalty.
    pub fn grid_unit_cost(&self) -> f64 {
        self.p_g + self.m_g * self.pc
    }

    /// Grid cost per delivered market unit after losses.
    pub fn grid_delivered_cost(&self) -> f64 {
        self.grid_unit_cost() / (1.0 - self.loss_fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplyOffer {
    pub ev_id: u64,
    pub offered_wh: f64,
    pub trip_m: f64,
    /// Wh per metre of supply trip.
    pub delta: f64,
}

impl SupplyOffer {
    pub fn validate(&self) -> Result<()> {
        ensure_positive(self.offered_wh, "offer.offered_wh")?;
        ensure_non_negative(self.trip_m, "offer.trip_m")?;
        ensure_non_negative(self.delta, "offer.delta")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSnapshot {
    pub offers: Vec<SupplyOffer>,
    pub total_demand_wh: f64,
    pub renewables_wh: f64,
    pub grid: GridParams,
}

impl MarketSnapshot {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        ensure_non_negative(self.total_demand_wh, "total_demand_wh")?;
        ensure_non_negative(self.renewables_wh, "renewables_wh")?;
        for o in &self.offers {
            o.validate()?;
        }
        Ok(())
    }

    /// Demand left after free renewable energy.
    pub fn residual_need_wh(&self) -> f64 {
        self.total_demand_wh - self.renewables_wh
    }

    pub fn without_offers(&self) -> MarketSnapshot {
        MarketSnapshot {
            offers: Vec::new(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub s_g_wh: f64,
    /// Accepted Wh per offering EV; zero for declined offers.
    pub accepted: BTreeMap<u64, f64>,
    pub cost_c_g: f64,
    pub status: SolveStatus,
}

impl DispatchSolution {
    pub fn infeasible() -> Self {
        DispatchSolution {
            s_g_wh: 0.0,
            accepted: BTreeMap::new(),
            cost_c_g: 0.0,
            status: SolveStatus::Infeasible,
        }
    }

    pub fn accepted_total_wh(&self) -> f64 {
        self.accepted.values().sum()
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

pub fn grid_cost(params: &GridParams, s_g_wh: f64, accepted_total_wh: f64) -> f64 {
    let u = params.energy_unit_wh;
    params.grid_unit_cost() * s_g_wh / u + params.p_ev * accepted_total_wh / u
}

pub fn ev_utility(params: &GridParams, offer: &SupplyOffer, s_wh: f64) -> f64 {
    let u = params.energy_unit_wh;
    let x = s_wh / u;
    (params.p_ev + params.beta) * x - offer.delta * offer.trip_m / u - params.a * x * x - params.b * x
}

/// Closed interval of supplies with utility at least `u_min`, capped at the offer.
pub fn feasible_supply_interval(params: &GridParams, offer: &SupplyOffer) -> Option<(f64, f64)> {
    let u = params.energy_unit_wh;
    let slope = params.p_ev + params.beta - params.b;
    let k = offer.delta * offer.trip_m / u + params.u_min;
    if slope <= 0.0 {
        return None;
    }
    let disc = slope * slope - 4.0 * params.a * k;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Stable root pair for a*x^2 - slope*x + k = 0.
    let lo = 2.0 * k / (slope + sq) * u;
    let hi = ((slope + sq) / (2.0 * params.a) * u).min(offer.offered_wh);
    if lo > hi {
        return None;
    }
    Some((lo, hi))
}

/// Supply-minus-demand balance including grid losses.
pub fn verify_net_zero(snapshot: &MarketSnapshot, solution: &DispatchSolution) -> f64 {
    let g = solution.s_g_wh;
    g + snapshot.renewables_wh + solution.accepted_total_wh()
        - snapshot.total_demand_wh
        - snapshot.grid.loss_fraction * g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeState {
    Free,
    Active,
    Inactive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub bound: f64,
    pub s_g_wh: f64,
    pub supplies_wh: Vec<f64>,
}

type Interval = Option<(f64, f64)>;

fn intervals(snapshot: &MarketSnapshot) -> Vec<Interval> {
    snapshot
        .offers
        .iter()
        .map(|o| feasible_supply_interval(&snapshot.grid, o))
        .collect()
}

/// Continuous relaxation with lower bounds dropped for free EVs. Returns
/// `None` when even full grid output plus every permitted offer falls short.
pub fn lp_relaxation(snapshot: &MarketSnapshot, states: &[NodeState]) -> Result<Option<Relaxation>> {
    snapshot.validate()?;
    if states.len() != snapshot.offers.len() {
        return Err(Error::InvalidParameter {
            field: "states",
            reason: format!("{} states for {} offers", states.len(), snapshot.offers.len()),
        });
    }
    Ok(relax(snapshot, &intervals(snapshot), states))
}

fn relax(snapshot: &MarketSnapshot, iv: &[Interval], states: &[NodeState]) -> Option<Relaxation> {
    let grid = &snapshot.grid;
    let keep = 1.0 - grid.loss_fraction;
    let n = iv.len();
    let mut s = vec![0.0; n];
    for i in 0..n {
        if states[i] == NodeState::Active {
            s[i] = iv[i]?.0;
        }
    }
    let mut left = snapshot.residual_need_wh() - s.iter().sum::<f64>();
    let mut g = 0.0;

    let ev_room: f64 = (0..n)
        .filter_map(|i| match (states[i], iv[i]) {
            (NodeState::Active, Some((lo, hi))) => Some(hi - lo),
            (NodeState::Free, Some((_, hi))) => Some(hi),
            _ => None,
        })
        .sum();
    let grid_room = keep * grid.s_g_cap_wh;
    if left > ev_room + grid_room + 1e-9 * left.abs().max(1.0) {
        return None;
    }

    if left > 0.0 {
        let ev_first = grid.p_ev < grid.grid_delivered_cost();
        let ev_fill = if ev_first {
            left.min(ev_room)
        } else {
            (left - grid_room).clamp(0.0, ev_room)
        };
        let grid_fill = (left - ev_fill).max(0.0).min(grid_room);
        g = (grid_fill / keep).min(grid.s_g_cap_wh);
        distribute(iv, states, &mut s, ev_fill);
        left = 0.0;
    }
    let _ = left;
    let bound = grid_cost(grid, g, s.iter().sum());
    Some(Relaxation {
        bound,
        s_g_wh: g,
        supplies_wh: s,
    })
}

/// Spreads `amount` over active headroom first, then free EVs by descending
/// cap, steering the final partial share to an EV whose lower bound it meets.
fn distribute(iv: &[Interval], states: &[NodeState], s: &mut [f64], mut amount: f64) {
    for i in 0..iv.len() {
        if amount <= 0.0 {
            return;
        }
        if let (NodeState::Active, Some((lo, hi))) = (states[i], iv[i]) {
            let take = (hi - lo).min(amount);
            s[i] += take;
            amount -= take;
        }
    }
    let mut free: Vec<usize> = (0..iv.len())
        .filter(|&i| states[i] == NodeState::Free && iv[i].is_some())
        .collect();
    free.sort_by(|&x, &y| iv[y].unwrap().1.total_cmp(&iv[x].unwrap().1).then(x.cmp(&y)));
    let mut k = 0;
    while amount > 0.0 && k < free.len() {
        let i = free[k];
        let (lo, hi) = iv[i].unwrap();
        if amount >= hi {
            s[i] = hi;
            amount -= hi;
            k += 1;
            continue;
        }
        let target = if amount >= lo {
            i
        } else {
            free[k..]
                .iter()
                .copied()
                .find(|&j| {
                    let (lo_j, hi_j) = iv[j].unwrap();
                    lo_j <= amount && amount <= hi_j
                })
                .unwrap_or(i)
        };
        s[target] = amount;
        amount = 0.0;
    }
}

fn is_integral(iv: &[Interval], s: &[f64]) -> bool {
    s.iter().zip(iv).all(|(&x, r)| match r {
        _ if x == 0.0 => true,
        Some((lo, _)) => x >= *lo,
        None => false,
    })
}

fn build_solution(snapshot: &MarketSnapshot, s_g: f64, s: &[f64]) -> DispatchSolution {
    let accepted: BTreeMap<u64, f64> = snapshot.offers.iter().zip(s).map(|(o, &x)| (o.ev_id, x)).collect();
    DispatchSolution {
        s_g_wh: s_g,
        cost_c_g: grid_cost(&snapshot.grid, s_g, s.iter().sum()),
        accepted,
        status: SolveStatus::Optimal,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchLogEntry {
    pub node: usize,
    pub depth: usize,
    pub bound: Option<f64>,
    pub incumbent: Option<f64>,
    pub outcome: NodeOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOutcome {
    Infeasible,
    Pruned,
    Integral,
    Branched,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    pub nodes_expanded: usize,
    pub log: Vec<SearchLogEntry>,
}

pub fn branch_and_bound_solve(snapshot: &MarketSnapshot) -> Result<DispatchSolution> {
    branch_and_bound_logged(snapshot, false).map(|(sol, _)| sol)
}

/// Depth-first branch and bound over EV activation. When `log` is set every
/// expanded node is recorded in the returned stats.
pub fn branch_and_bound_logged(snapshot: &MarketSnapshot, log: bool) -> Result<(DispatchSolution, SearchStats)> {
    snapshot.validate()?;
    let iv = intervals(snapshot);
    let root: Vec<NodeState> = iv
        .iter()
        .map(|r| {
            if r.is_some() {
                NodeState::Free
            } else {
                NodeState::Inactive
            }
        })
        .collect();

    let mut stats = SearchStats::default();
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut stack = vec![(root, 0usize)];
    while let Some((states, depth)) = stack.pop() {
        stats.nodes_expanded += 1;
        let node = stats.nodes_expanded;
        let incumbent = best.as_ref().map(|b| b.0);
        let mut record = |bound: Option<f64>, outcome| {
            if log {
                stats.log.push(SearchLogEntry {
                    node,
                    depth,
                    bound,
                    incumbent,
                    outcome,
                });
            }
        };
        let Some(rel) = relax(snapshot, &iv, &states) else {
            record(None, NodeOutcome::Infeasible);
            continue;
        };
        if let Some(inc) = incumbent {
            if rel.bound >= inc - PRUNE_TOL * inc.abs().max(1.0) {
                record(Some(rel.bound), NodeOutcome::Pruned);
                continue;
            }
        }
        if is_integral(&iv, &rel.supplies_wh) {
            record(Some(rel.bound), NodeOutcome::Integral);
            best = Some((rel.bound, rel.s_g_wh, rel.supplies_wh));
            continue;
        }
        record(Some(rel.bound), NodeOutcome::Branched);
        let pick = branch_variable(snapshot, &iv, &rel.supplies_wh);
        let mut off = states.clone();
        off[pick] = NodeState::Inactive;
        let mut on = states;
        on[pick] = NodeState::Active;
        // Active child is explored first.
        stack.push((off, depth + 1));
        stack.push((on, depth + 1));
    }

    let sol = match best {
        Some((_, g, s)) => build_solution(snapshot, g, &s),
        None => DispatchSolution::infeasible(),
    };
    Ok((sol, stats))
}

/// Most fractional EV relative to its lower bound; ties go to the larger offer.
fn branch_variable(snapshot: &MarketSnapshot, iv: &[Interval], s: &[f64]) -> usize {
    let mut pick: Option<usize> = None;
    let mut best_score = f64::NEG_INFINITY;
    for (i, (&x, r)) in s.iter().zip(iv).enumerate() {
        let Some((lo, _)) = r else { continue };
        if x <= 0.0 || x >= *lo {
            continue;
        }
        let frac = x / lo;
        let score = frac.min(1.0 - frac);
        let better = match pick {
            None => true,
            Some(p) => {
                score > best_score
                    || (score == best_score && snapshot.offers[i].offered_wh > snapshot.offers[p].offered_wh)
            }
        };
        if better {
            pick = Some(i);
            best_score = score;
        }
    }
    pick.expect("non-integral relaxation has a fractional EV")
}

/// Exhaustive reference solver over every subset of active EVs.
pub fn brute_force_solve(snapshot: &MarketSnapshot) -> Result<DispatchSolution> {
    snapshot.validate()?;
    let n = snapshot.offers.len();
    if n > BRUTE_FORCE_MAX_OFFERS {
        return Err(Error::TooManyOffers {
            max: BRUTE_FORCE_MAX_OFFERS,
            got: n,
        });
    }
    let iv = intervals(snapshot);
    let grid = &snapshot.grid;
    let keep = 1.0 - grid.loss_fraction;
    let cap = grid.s_g_cap_wh;
    let need = snapshot.residual_need_wh();
    let mut best: Option<(f64, u32, f64, f64)> = None;

    'subsets: for mask in 0u32..(1u32 << n) {
        let (mut lo_sum, mut hi_sum) = (0.0, 0.0);
        for (i, interval) in iv.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let Some((lo, hi)) = *interval else { continue 'subsets };
                lo_sum += lo;
                hi_sum += hi;
            }
        }
        // Cost is piecewise linear in grid output; its minimum sits at a kink or an end.
        let candidates = [0.0, cap, (need - lo_sum) / keep, (need - hi_sum) / keep];
        for g in candidates {
            if !(0.0..=cap).contains(&g) {
                continue;
            }
            let x = (need - keep * g).max(lo_sum);
            if x > hi_sum * (1.0 + 1e-12) + 1e-9 {
                continue;
            }
            let x = x.min(hi_sum);
            let cost = grid_cost(grid, g, x);
            if best.is_none_or(|b| cost < b.0) {
                best = Some((cost, mask, g, x));
            }
        }
    }

    let Some((_, mask, g, x)) = best else {
        return Ok(DispatchSolution::infeasible());
    };
    let mut s = vec![0.0; n];
    let mut extra = x;
    for i in 0..n {
        if mask & (1 << i) != 0 {
            let lo = iv[i].unwrap().0;
            s[i] = lo;
            extra -= lo;
        }
    }
    for i in 0..n {
        if mask & (1 << i) != 0 && extra > 0.0 {
            let (lo, hi) = iv[i].unwrap();
            let take = (hi - lo).min(extra);
            s[i] += take;
            extra -= take;
        }
    }
    Ok(build_solution(snapshot, g, &s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offer(id: u64, wh: f64, trip_m: f64) -> SupplyOffer {
        SupplyOffer {
            ev_id: id,
            offered_wh: wh,
            trip_m,
            delta: 0.1,
        }
    }

    fn snapshot(offers: Vec<SupplyOffer>, demand: f64, renewables: f64) -> MarketSnapshot {
        MarketSnapshot {
            offers,
            total_demand_wh: demand,
            renewables_wh: renewables,
            grid: GridParams::default(),
        }
    }

    #[test]
    fn cost_examples() {
        let p = GridParams::default();
        assert_eq!(grid_cost(&p, 0.0, 0.0), 0.0);
        assert!((grid_cost(&p, 2000.0, 0.0) - 25.0).abs() < 1e-12);
        let fossil = GridParams {
            m_g: 0.786,
            ..p.clone()
        };
        let diff = grid_cost(&fossil, 5000.0, 0.0) - grid_cost(&p, 5000.0, 0.0);
        assert!((diff - 5.0 * 10.0 * 0.736).abs() < 1e-9);
    }

    #[test]
    fn utility_examples() {
        let p = GridParams {
            p_ev: 10.0,
            ..GridParams::default()
        };
        let o = offer(1, 50_000.0, 6_000.0);
        assert!((ev_utility(&p, &o, 0.0) + 0.6).abs() < 1e-12);
        assert!((ev_utility(&p, &o, 1000.0) - 19.29).abs() < 1e-12);
        let peak = (p.p_ev + p.beta - p.b) / (2.0 * p.a) * 1000.0;
        let u = ev_utility(&p, &o, peak);
        assert!(u > ev_utility(&p, &o, peak * 0.99) && u > ev_utility(&p, &o, peak * 1.01));
    }

    #[test]
    fn interval_examples() {
        let p = GridParams {
            p_ev: 10.0,
            u_min: 0.0,
            ..GridParams::default()
        };
        let big = offer(1, 5.0e6, 6_000.0);
        let (lo, hi) = feasible_supply_interval(&p, &big).unwrap();
        let disc: f64 = 19.9f64 * 19.9 - 4.0 * 0.01 * 0.6;
        assert!((lo / 1000.0 - (19.9 - disc.sqrt()) / 0.02).abs() < 1e-9);
        assert!((lo / 1000.0 - 0.0302).abs() < 1e-4);
        assert!((hi / 1000.0 - 1989.97).abs() < 1e-2);

        let small = offer(2, 10_000.0, 6_000.0);
        assert_eq!(feasible_supply_interval(&p, &small).unwrap().1, 10_000.0);

        let free_trip = offer(3, 10_000.0, 0.0);
        let p_tol = GridParams {
            p_ev: 10.0,
            ..GridParams::default()
        };
        let (lo, _) = feasible_supply_interval(&p_tol, &free_trip).unwrap();
        assert!(lo > 0.0 && lo < 1e-3);

        let broke = GridParams {
            p_ev: 0.0,
            beta: 0.0,
            ..GridParams::default()
        };
        assert!(feasible_supply_interval(&broke, &big).is_none());
    }

    #[test]
    fn renewables_cover_demand() {
        let snap = snapshot(vec![offer(1, 10_000.0, 6_000.0)], 5_000.0, 8_000.0);
        let sol = branch_and_bound_solve(&snap).unwrap();
        assert_eq!(sol.cost_c_g, 0.0);
        assert_eq!(sol.s_g_wh, 0.0);
        assert_eq!(sol.accepted_total_wh(), 0.0);
    }

    #[test]
    fn grid_only_dispatch() {
        let snap = snapshot(vec![], 10_000.0, 0.0);
        let sol = branch_and_bound_solve(&snap).unwrap();
        assert!((sol.s_g_wh - 10_000.0 / 0.98).abs() < 1e-6);
        assert!((sol.cost_c_g - 12.5 * 10.0 / 0.98).abs() < 1e-9);
        assert!(verify_net_zero(&snap, &sol) >= -1e-6);
    }

    #[test]
    fn cheap_ev_filled_before_grid() {
        let snap = snapshot(vec![offer(7, 4_000.0, 1_000.0)], 10_000.0, 0.0);
        let rel = lp_relaxation(&snap, &[NodeState::Free]).unwrap().unwrap();
        assert_eq!(rel.supplies_wh[0], 4_000.0);
        let sol = branch_and_bound_solve(&snap).unwrap();
        assert_eq!(sol.accepted[&7], 4_000.0);
        assert_eq!(sol, brute_force_solve(&snap).unwrap());
    }

    #[test]
    fn single_offer_covers_need() {
        let snap = snapshot(vec![offer(1, 50_000.0, 1_000.0)], 3_000.0, 0.0);
        let sol = brute_force_solve(&snap).unwrap();
        assert!((sol.accepted[&1] - 3_000.0).abs() < 1e-9);
        assert_eq!(sol.s_g_wh, 0.0);
    }

    #[test]
    fn empty_snapshot() {
        let snap = snapshot(vec![], 0.0, 0.0);
        for sol in [
            branch_and_bound_solve(&snap).unwrap(),
            brute_force_solve(&snap).unwrap(),
        ] {
            assert!(sol.is_optimal());
            assert_eq!(sol.cost_c_g, 0.0);
            assert_eq!(verify_net_zero(&snap, &sol), 0.0);
        }
    }

    #[test]
    fn infeasible_when_short() {
        let mut snap = snapshot(vec![offer(1, 1_000.0, 100.0)], 1.0e6, 0.0);
        snap.grid.s_g_cap_wh = 10_000.0;
        assert_eq!(branch_and_bound_solve(&snap).unwrap().status, SolveStatus::Infeasible);
        assert_eq!(brute_force_solve(&snap).unwrap().status, SolveStatus::Infeasible);
        assert_eq!(lp_relaxation(&snap, &[NodeState::Free]).unwrap(), None);
    }

    #[test]
    fn undersupply_detected() {
        let snap = snapshot(vec![], 10_000.0, 0.0);
        let mut sol = branch_and_bound_solve(&snap).unwrap();
        sol.s_g_wh *= 0.5;
        assert!(verify_net_zero(&snap, &sol) < 0.0);
    }

    #[test]
    fn fractional_residue_is_branched() {
        // Need left after the big offer is below the small offer's lower bound.
        let grid = GridParams {
            s_g_cap_wh: 0.0,
            ..GridParams::default()
        };
        let trip = 100_000.0;
        let small = SupplyOffer {
            ev_id: 2,
            offered_wh: 3_000.0,
            trip_m: trip,
            delta: 0.1,
        };
        let (lo, _) = feasible_supply_interval(&grid, &small).unwrap();
        let snap = MarketSnapshot {
            offers: vec![offer(1, 4_000.0, 1_000.0), small],
            total_demand_wh: 4_000.0 + lo / 2.0,
            renewables_wh: 0.0,
            grid,
        };
        let (sol, stats) = branch_and_bound_logged(&snap, true).unwrap();
        assert!(stats.nodes_expanded > 1);
        assert_eq!(stats.log.len(), stats.nodes_expanded);
        let bf = brute_force_solve(&snap).unwrap();
        assert!((sol.cost_c_g - bf.cost_c_g).abs() <= 1e-9 * bf.cost_c_g);
        for (id, &x) in &sol.accepted {
            let o = snap.offers.iter().find(|o| o.ev_id == *id).unwrap();
            assert!(x == 0.0 || ev_utility(&snap.grid, o, x) > 0.0);
        }
    }

    #[test]
    fn too_many_for_brute_force() {
        let offers = (0..21).map(|i| offer(i, 1_000.0, 10.0)).collect();
        assert!(matches!(
            brute_force_solve(&snapshot(offers, 1.0, 0.0)),
            Err(Error::TooManyOffers { .. })
        ));
    }

    #[test]
    fn bad_inputs_rejected() {
        let mut snap = snapshot(vec![], -1.0, 0.0);
        assert!(branch_and_bound_solve(&snap).is_err());
        snap.total_demand_wh = 1.0;
        snap.grid.loss_fraction = 1.0;
        assert!(branch_and_bound_solve(&snap).is_err());
    }
}
