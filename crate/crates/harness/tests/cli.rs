use std::path::Path;
use std::process::{Command, Output};

use netzero_core::optimizer::{GridParams, MarketSnapshot, SupplyOffer};

fn netzero(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netzero"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn quick_config(dir: &Path) -> String {
    let path = dir.join("quick.json");
    std::fs::write(
        &path,
        r#"{"simulation": {"trace_horizon_s": 120}, "sweep": {"repetitions": 2, "p_ev": [0, 10]}}"#,
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

fn snapshot(path: &Path, cap: f64) {
    let snap = MarketSnapshot {
        offers: vec![SupplyOffer {
            ev_id: 9,
            offered_wh: 40_000.0,
            trip_m: 5_000.0,
            delta: 0.1,
        }],
        total_demand_wh: 100_000.0,
        renewables_wh: 5_000.0,
        grid: GridParams {
            s_g_cap_wh: cap,
            ..GridParams::default()
        },
    };
    std::fs::write(path, serde_json::to_string(&snap).unwrap()).unwrap();
}

#[test]
fn simulate_prints_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let out = netzero(
        &[
            "simulate",
            "--config",
            &cfg,
            "--seed",
            "5",
            "--out",
            "o",
            "--dump-traces",
            "--profile",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n_ev"], 500);
    let traces = std::fs::read_to_string(dir.path().join("o/traces.csv")).unwrap();
    assert!(traces.starts_with("id,t,position,velocity\n"));
    assert_eq!(traces.lines().count(), 1 + 500 * 120);
    let profile = std::fs::read_to_string(dir.path().join("o/renewables_profile.csv")).unwrap();
    assert!(profile.starts_with("month,hour,wind_wh,pv_wh\n"));
    assert_eq!(profile.lines().count(), 1 + 12 * 24);
}

#[test]
fn optimize_solves_and_flags_infeasible_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.json");
    snapshot(&ok, 1.0e6);
    let out = netzero(&["optimize", ok.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let sol: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(sol["status"], "optimal");
    assert_eq!(sol["accepted"]["9"], 40_000.0);

    let bad = dir.path().join("bad.json");
    snapshot(&bad, 10.0);
    let out = netzero(&["optimize", bad.to_str().unwrap(), "--log"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes_distinguish_validation_and_io() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"game": {"road_charge": -5}}"#).unwrap();
    let out = netzero(&["simulate", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("game.road_charge"));

    let out = netzero(&["sweep", "--config", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let cfg = dir.path().join("tiny_cap.json");
    std::fs::write(
        &cfg,
        r#"{"grid": {"s_g_cap_wh": 10}, "simulation": {"trace_horizon_s": 60}}"#,
    )
    .unwrap();
    let out = netzero(
        &["simulate", "--config", cfg.to_str().unwrap(), "--out", "dump"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("dump/infeasible_snapshot.json").exists());
}

#[test]
fn sweep_bounds_and_game_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let out = netzero(&["sweep", "--config", &cfg, "--out", "s"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "cell_pev0_mg0.05_cap29000000_n500.csv",
        "cell_pev10_mg0.05_cap29000000_n500.csv",
        "summary.csv",
        "manifest.json",
    ] {
        assert!(dir.path().join("s").join(f).exists(), "{f}");
    }

    let out = netzero(&["bounds", "--config", &cfg, "--out", "b", "--reps", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("b/bounds.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("class,s_ub_wh,d_ub_wh,sim_supply_wh,sim_demand_wh"));

    let out = netzero(&["game", "--config", &cfg, "--out", "g"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(dir.path().join("g/tournament.csv")).unwrap();
    assert!(trace.starts_with("round,n_coop,mean_payoff\n"));
}
