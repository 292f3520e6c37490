use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netzero_core::game::simulate_tournament;
use netzero_core::mobility::RecordMode;
use netzero_core::optimizer::{branch_and_bound_logged, MarketSnapshot};
use netzero_core::renewables::{aggregate_renewables, HourStamp};
use netzero_harness::analysis::{bound_table, station_choice, tournament_config};
use netzero_harness::export::{export_results, write_json};
use netzero_harness::round::{assess_fleet, market_round, simulate_fleet, simulate_traffic};
use netzero_harness::seeds::{SeedStreams, Subsystem};
use netzero_harness::sweep::sweep;
use netzero_harness::{load_config, HarnessError, Result, ScenarioConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "netzero", version, about = "Prosumer EV energy market simulator")]
struct Cli {
    /// Scenario JSON; absent fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one market round and print its report as JSON.
    Simulate {
        /// Repetition index within the seed streams.
        #[arg(long, default_value_t = 0)]
        rep: u64,
        /// Write per-vehicle traces (id, t, position, velocity) to traces.csv.
        #[arg(long)]
        dump_traces: bool,
        /// Write the hourly renewables profile to renewables_profile.csv.
        #[arg(long)]
        profile: bool,
    },
    /// Solve a market snapshot JSON and print the dispatch.
    Optimize {
        snapshot: PathBuf,
        /// Print the branch-and-bound search log to stderr.
        #[arg(long)]
        log: bool,
    },
    /// Write per-class bound tables and the station-count scan.
    Bounds {
        /// Simulated scenarios to compare against; defaults to the sweep repetitions.
        #[arg(long)]
        reps: Option<u64>,
    },
    /// Play the incentive game over one round's surplus holders.
    Game {
        #[arg(long, default_value_t = 0)]
        rep: u64,
    },
    /// Run the configured parameter sweep and export CSVs.
    Sweep,
}

fn setup(cli: &Cli) -> Result<(ScenarioConfig, PathBuf)> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    Ok((cfg, out))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let wrap = |e: csv::Error| HarnessError::io(path, std::io::Error::other(e.to_string()));
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for row in rows {
        w.serialize(row).map_err(wrap)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serialisable"));
}

#[derive(Serialize)]
struct TraceRow {
    id: u64,
    t: f64,
    position: f64,
    velocity: f64,
}

#[derive(Serialize)]
struct ProfileRow {
    month: u8,
    hour: u8,
    wind_wh: f64,
    pv_wh: f64,
}

fn dump_infeasible(out: &Path, err: HarnessError) -> HarnessError {
    if let HarnessError::Infeasible(snapshot) = &err {
        let path = out.join("infeasible_snapshot.json");
        if ensure_dir(out)
            .and_then(|_| write_json(&path, snapshot.as_ref()))
            .is_ok()
        {
            eprintln!("snapshot written to {}", path.display());
        }
    }
    err
}

fn simulate(cli: &Cli, rep: u64, dump_traces: bool, profile: bool) -> Result<()> {
    let (cfg, out) = setup(cli)?;
    let streams = SeedStreams::new(cfg.rng_seed);
    let mode = if dump_traces {
        RecordMode::Full
    } else {
        RecordMode::Velocities
    };
    let world = simulate_traffic(&cfg, cfg.n_ev, &streams, rep, mode)?;
    let fleet = assess_fleet(&cfg, &world, streams.seed(Subsystem::Soc, rep))?;
    if dump_traces {
        ensure_dir(&out)?;
        let dt = cfg.simulation.dt_s;
        let rows = world.vehicles().iter().enumerate().flat_map(|(i, v)| {
            world
                .position_history(i)
                .iter()
                .zip(world.velocity_history(i))
                .enumerate()
                .map(move |(k, (&p, &vel))| TraceRow {
                    id: v.id,
                    t: (k + 1) as f64 * dt,
                    position: p,
                    velocity: vel,
                })
        });
        write_csv(&out.join("traces.csv"), rows)?;
    }
    if profile {
        ensure_dir(&out)?;
        let mut fleet_cfg = cfg.fleet.clone();
        fleet_cfg.rng_seed = streams.seed(Subsystem::Renewables, rep);
        let rows = HourStamp::all()
            .map(|t| {
                aggregate_renewables(&fleet_cfg, t).map(|(wind_wh, pv_wh)| ProfileRow {
                    month: t.month,
                    hour: t.hour,
                    wind_wh,
                    pv_wh,
                })
            })
            .collect::<netzero_core::Result<Vec<_>>>()?;
        write_csv(&out.join("renewables_profile.csv"), rows)?;
    }
    let report = market_round(&cfg, &cfg.grid, &fleet, &streams, rep, cfg.simulation.hour)
        .map_err(|e| dump_infeasible(&out, e))?;
    print_json(&report);
    Ok(())
}

fn optimize(cli: &Cli, path: &Path, log: bool) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let snapshot: MarketSnapshot = serde_path_to_error::deserialize(de)
        .map_err(|e| HarnessError::config(e.path().to_string(), e.inner().to_string()))?;
    let (solution, stats) = branch_and_bound_logged(&snapshot, log)?;
    if cli.verbose || log {
        eprintln!("nodes expanded: {}", stats.nodes_expanded);
        for entry in &stats.log {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
            eprintln!(
                "node {} depth {} bound {} incumbent {} {:?}",
                entry.node,
                entry.depth,
                fmt(entry.bound),
                fmt(entry.incumbent),
                entry.outcome
            );
        }
    }
    print_json(&solution);
    if solution.is_optimal() {
        Ok(())
    } else {
        Err(HarnessError::Infeasible(Box::new(snapshot)))
    }
}

fn bounds(cli: &Cli, reps: Option<u64>) -> Result<()> {
    let (cfg, out) = setup(cli)?;
    let streams = SeedStreams::new(cfg.rng_seed);
    let reps = reps.unwrap_or(cfg.sweep.repetitions as u64);
    let fleets = (0..reps)
        .map(|rep| simulate_fleet(&cfg, cfg.n_ev, &streams, rep))
        .collect::<Result<Vec<_>>>()?;
    let table = bound_table(&cfg, cfg.n_ev, &fleets)?;
    ensure_dir(&out)?;
    write_csv(&out.join("bounds.csv"), &table)?;
    for row in &table {
        println!(
            "{:<6} S_UB {:>14.1} Wh  sim supply {:>14.1} Wh  D_UB {:>14.1} Wh  sim demand {:>14.1} Wh",
            row.class.name(),
            row.s_ub_wh,
            row.sim_supply_wh,
            row.d_ub_wh,
            row.sim_demand_wh
        );
    }
    if let Some(fleet) = fleets.first() {
        let choice = station_choice(&cfg, &cfg.grid, fleet)?;
        write_csv(
            &out.join("stations.csv"),
            choice.scan.iter().map(|&(n, sellers, score)| (n, sellers, score)),
        )?;
        println!(
            "optimal station count {} (expected sellers per station {:.4})",
            choice.n_stations, choice.score
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct TournamentRow {
    round: usize,
    n_coop: usize,
    mean_payoff: f64,
}

fn game(cli: &Cli, rep: u64) -> Result<()> {
    let (cfg, out) = setup(cli)?;
    let streams = SeedStreams::new(cfg.rng_seed);
    let fleet = simulate_fleet(&cfg, cfg.n_ev, &streams, rep)?;
    let report = market_round(&cfg, &cfg.grid, &fleet, &streams, rep, cfg.simulation.hour)
        .map_err(|e| dump_infeasible(&out, e))?;
    ensure_dir(&out)?;
    let path = out.join("tournament.csv");
    let Some(game) = tournament_config(&cfg, &report, &fleet) else {
        write_csv::<TournamentRow>(&path, [])?;
        println!("no surplus holders: n_coop = 0 in every round");
        return Ok(());
    };
    let result = simulate_tournament(&game, cfg.game.tournament_rounds, streams.seed(Subsystem::Game, rep))?;
    write_csv(
        &path,
        result.rounds.iter().map(|r| TournamentRow {
            round: r.round,
            n_coop: r.n_coop,
            mean_payoff: r.mean_payoff,
        }),
    )?;
    let last = result.rounds.last().expect("rounds >= 1");
    println!(
        "{} players, final n_coop {}, mean payoff {:.3}",
        game.players.len(),
        last.n_coop,
        last.mean_payoff
    );
    Ok(())
}

fn run_sweep(cli: &Cli) -> Result<()> {
    let (cfg, out) = setup(cli)?;
    let cells = sweep(&cfg, cli.verbose)?;
    let files = export_results(&cells, &cfg, &out)?;
    for c in &cells {
        let s = &c.summary;
        println!(
            "{}: {} ok {} failed, cost {:.2}, S_G {:.0} Wh, accepted {:.4}, coverage {:.4}",
            c.key.file_stem(),
            s.completed,
            s.failures,
            s.mean_cost_c_g,
            s.mean_s_g_wh,
            s.mean_accepted_fraction,
            s.mean_demand_coverage
        );
    }
    if cli.verbose {
        for f in files {
            eprintln!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Simulate {
            rep,
            dump_traces,
            profile,
        } => simulate(&cli, *rep, *dump_traces, *profile),
        Cmd::Optimize { snapshot, log } => optimize(&cli, snapshot, *log),
        Cmd::Bounds { reps } => bounds(&cli, *reps),
        Cmd::Game { rep } => game(&cli, *rep),
        Cmd::Sweep => run_sweep(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
