//! CSV and manifest output. Column sets are fixed; see the README for their meaning.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::sweep::CellResult;

#[derive(Debug, Serialize)]
struct RepRow<'a> {
    rep: u64,
    status: &'a str,
    error: &'a str,
    n_ev: Option<usize>,
    n_demanders: Option<usize>,
    n_suppliers: Option<usize>,
    n_viable_offers: Option<usize>,
    total_demand_wh: Option<f64>,
    offered_supply_wh: Option<f64>,
    renewables_wh: Option<f64>,
    accepted_wh: Option<f64>,
    s_g_wh: Option<f64>,
    cost_c_g: Option<f64>,
    no_prosumer_status: Option<&'a str>,
    cost_no_prosumer: Option<f64>,
    s_g_no_optimization_wh: Option<f64>,
    cost_no_optimization: Option<f64>,
    accepted_fraction: Option<f64>,
    demand_coverage: Option<f64>,
    grid_load_reduction: Option<f64>,
    messages: Option<usize>,
    net_zero_residual_wh: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    file: String,
    p_ev: f64,
    m_g: f64,
    s_g_cap_wh: f64,
    n_ev: usize,
    completed: usize,
    failures: usize,
    mean_cost_c_g: f64,
    mean_cost_no_prosumer: f64,
    mean_cost_no_optimization: f64,
    mean_s_g_wh: f64,
    mean_accepted_fraction: f64,
    mean_demand_coverage: f64,
    mean_grid_load_reduction: f64,
    mean_messages: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub rng_seed: u64,
    pub git_describe: String,
    pub timestamp: String,
    pub files: Vec<String>,
}

fn status_name(s: netzero_core::optimizer::SolveStatus) -> &'static str {
    match s {
        netzero_core::optimizer::SolveStatus::Optimal => "optimal",
        netzero_core::optimizer::SolveStatus::Infeasible => "infeasible",
    }
}

pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    };
    HarnessError::io(path, source)
}

fn write_cell(path: &Path, cell: &CellResult) -> Result<()> {
    let mut w = csv_writer(path)?;
    for rep in &cell.reps {
        let row = match &rep.report {
            Some(r) => RepRow {
                rep: rep.rep,
                status: "optimal",
                error: "",
                n_ev: Some(r.n_ev),
                n_demanders: Some(r.n_demanders),
                n_suppliers: Some(r.n_suppliers),
                n_viable_offers: Some(r.n_viable_offers),
                total_demand_wh: Some(r.total_demand_wh),
                offered_supply_wh: Some(r.offered_supply_wh),
                renewables_wh: Some(r.wind_wh + r.pv_wh),
                accepted_wh: Some(r.accepted_total_wh),
                s_g_wh: Some(r.solution.s_g_wh),
                cost_c_g: Some(r.solution.cost_c_g),
                no_prosumer_status: Some(status_name(r.no_prosumer.status)),
                cost_no_prosumer: Some(r.no_prosumer.cost_c_g),
                s_g_no_optimization_wh: Some(r.no_optimization.s_g_wh),
                cost_no_optimization: Some(r.no_optimization.cost_c_g),
                accepted_fraction: Some(r.accepted_fraction),
                demand_coverage: Some(r.demand_coverage),
                grid_load_reduction: Some(r.grid_load_reduction),
                messages: Some(r.messages.total),
                net_zero_residual_wh: Some(r.net_zero_residual_wh),
            },
            None => RepRow {
                rep: rep.rep,
                status: "failed",
                error: rep.error.as_deref().unwrap_or(""),
                n_ev: None,
                n_demanders: None,
                n_suppliers: None,
                n_viable_offers: None,
                total_demand_wh: None,
                offered_supply_wh: None,
                renewables_wh: None,
                accepted_wh: None,
                s_g_wh: None,
                cost_c_g: None,
                no_prosumer_status: None,
                cost_no_prosumer: None,
                s_g_no_optimization_wh: None,
                cost_no_optimization: None,
                accepted_fraction: None,
                demand_coverage: None,
                grid_load_reduction: None,
                messages: None,
                net_zero_residual_wh: None,
            },
        };
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn write_summary(path: &Path, cells: &[CellResult]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for c in cells {
        let s = &c.summary;
        w.serialize(SummaryRow {
            file: format!("{}.csv", c.key.file_stem()),
            p_ev: c.key.p_ev,
            m_g: c.key.m_g,
            s_g_cap_wh: c.key.s_g_cap_wh,
            n_ev: c.key.n_ev,
            completed: s.completed,
            failures: s.failures,
            mean_cost_c_g: s.mean_cost_c_g,
            mean_cost_no_prosumer: s.mean_cost_no_prosumer,
            mean_cost_no_optimization: s.mean_cost_no_optimization,
            mean_s_g_wh: s.mean_s_g_wh,
            mean_accepted_fraction: s.mean_accepted_fraction,
            mean_demand_coverage: s.mean_demand_coverage,
            mean_grid_load_reduction: s.mean_grid_load_reduction,
            mean_messages: s.mean_messages,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serialisable");
    std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

/// Writes one CSV per cell, `summary.csv` and `manifest.json` into `dir`.
/// An empty table produces the manifest alone.
pub fn export_results(cells: &[CellResult], cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = Vec::new();
    for cell in cells {
        let path = dir.join(format!("{}.csv", cell.key.file_stem()));
        write_cell(&path, cell)?;
        files.push(path);
    }
    if !cells.is_empty() {
        let path = dir.join("summary.csv");
        write_summary(&path, cells)?;
        files.push(path);
    }
    let manifest = Manifest {
        config_sha256: cfg.hash_hex(),
        rng_seed: cfg.rng_seed,
        git_describe: git_describe(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        files: files
            .iter()
            .map(|p| p.file_name().expect("file").to_string_lossy().into_owned())
            .collect(),
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    files.push(path);
    Ok(files)
}
