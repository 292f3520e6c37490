//! Cartesian parameter sweep. Fleets depend only on `(n_ev, rep)`, so they
//! are simulated once and shared by every price cell.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::round::{market_round, simulate_fleet, FleetOutcome, RoundReport};
use crate::seeds::SeedStreams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub p_ev: f64,
    pub m_g: f64,
    pub s_g_cap_wh: f64,
    pub n_ev: usize,
}

impl CellKey {
    /// Stable file stem for the cell's CSV.
    pub fn file_stem(&self) -> String {
        format!(
            "cell_pev{}_mg{}_cap{}_n{}",
            self.p_ev, self.m_g, self.s_g_cap_wh, self.n_ev
        )
    }
}

/// Per-repetition outcome; `report` is absent when the round failed.
#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub rep: u64,
    pub report: Option<RoundReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CellSummary {
    pub completed: usize,
    pub failures: usize,
    pub mean_cost_c_g: f64,
    pub mean_cost_no_prosumer: f64,
    pub mean_cost_no_optimization: f64,
    pub mean_s_g_wh: f64,
    pub mean_accepted_fraction: f64,
    pub mean_demand_coverage: f64,
    pub mean_grid_load_reduction: f64,
    pub mean_messages: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub key: CellKey,
    pub reps: Vec<RepOutcome>,
    pub summary: CellSummary,
}

pub fn summarize(reps: &[RepOutcome]) -> CellSummary {
    let ok: Vec<&RoundReport> = reps.iter().filter_map(|r| r.report.as_ref()).collect();
    let n = ok.len();
    let mean = |f: &dyn Fn(&RoundReport) -> f64| {
        if n == 0 {
            f64::NAN
        } else {
            ok.iter().map(|r| f(r)).sum::<f64>() / n as f64
        }
    };
    CellSummary {
        completed: n,
        failures: reps.len() - n,
        mean_cost_c_g: mean(&|r| r.solution.cost_c_g),
        mean_cost_no_prosumer: mean(&|r| r.no_prosumer.cost_c_g),
        mean_cost_no_optimization: mean(&|r| r.no_optimization.cost_c_g),
        mean_s_g_wh: mean(&|r| r.solution.s_g_wh),
        mean_accepted_fraction: mean(&|r| r.accepted_fraction),
        mean_demand_coverage: mean(&|r| r.demand_coverage),
        mean_grid_load_reduction: mean(&|r| r.grid_load_reduction),
        mean_messages: mean(&|r| r.messages.total as f64),
    }
}

pub fn cell_keys(cfg: &ScenarioConfig) -> Vec<CellKey> {
    let sw = &cfg.sweep;
    let mut keys = Vec::new();
    for &n_ev in &sw.n_ev {
        for &p_ev in &sw.p_ev {
            for &m_g in &sw.m_g {
                for &s_g_cap_wh in &sw.s_g_cap_wh {
                    keys.push(CellKey {
                        p_ev,
                        m_g,
                        s_g_cap_wh,
                        n_ev,
                    });
                }
            }
        }
    }
    keys
}

type FleetCache = BTreeMap<(usize, u64), std::result::Result<FleetOutcome, String>>;

fn build_fleets(cfg: &ScenarioConfig, streams: &SeedStreams, verbose: bool) -> FleetCache {
    let mut sizes = cfg.sweep.n_ev.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let jobs: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&n| (0..cfg.sweep.repetitions as u64).map(move |r| (n, r)))
        .collect();
    let fleets: Vec<_> = jobs
        .par_iter()
        .map(|&(n, rep)| simulate_fleet(cfg, n, streams, rep).map_err(|e| e.to_string()))
        .collect();
    if verbose {
        eprintln!("simulated {} fleets", jobs.len());
    }
    jobs.into_iter().zip(fleets).collect()
}

/// Runs every cell for every repetition. Failed rounds are recorded in their
/// cell and the sweep carries on.
pub fn sweep(cfg: &ScenarioConfig, verbose: bool) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let streams = SeedStreams::new(cfg.rng_seed);
    let fleets = build_fleets(cfg, &streams, verbose);
    let hour = cfg.simulation.hour;
    let cells = cell_keys(cfg)
        .into_par_iter()
        .map(|key| {
            let grid = netzero_core::optimizer::GridParams {
                p_ev: key.p_ev,
                m_g: key.m_g,
                s_g_cap_wh: key.s_g_cap_wh,
                ..cfg.grid.clone()
            };
            let reps: Vec<RepOutcome> = (0..cfg.sweep.repetitions as u64)
                .map(|rep| {
                    let outcome = match &fleets[&(key.n_ev, rep)] {
                        Ok(fleet) => market_round(cfg, &grid, fleet, &streams, rep, hour).map_err(|e| e.to_string()),
                        Err(e) => Err(e.clone()),
                    };
                    match outcome {
                        Ok(report) => RepOutcome {
                            rep,
                            report: Some(report),
                            error: None,
                        },
                        Err(e) => RepOutcome {
                            rep,
                            report: None,
                            error: Some(e),
                        },
                    }
                })
                .collect();
            let summary = summarize(&reps);
            if verbose {
                eprintln!(
                    "{}: {} ok, {} failed",
                    key.file_stem(),
                    summary.completed,
                    summary.failures
                );
            }
            CellResult { key, reps, summary }
        })
        .collect();
    Ok(cells)
}
