use netzero_core::mobility::ForecasterKind;
use netzero_harness::{parse_config, HarnessError, ScenarioConfig};

fn field_of(err: HarnessError) -> String {
    match err {
        HarnessError::Config { field, .. } => field,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn empty_documents_give_defaults() {
    let d = ScenarioConfig::default();
    assert_eq!(parse_config("").unwrap(), d);
    assert_eq!(parse_config("  \n").unwrap(), d);
    assert_eq!(parse_config("{}").unwrap(), d);
    assert_eq!(d.grid.p_g, 12.0);
    assert_eq!(d.grid.pc, 10.0);
    assert_eq!(d.grid.beta, 10.0);
    assert_eq!(d.game.road_charge, 150.0);
    assert_eq!(d.road.length_m, 20_000.0);
    assert_eq!(d.ev_specs.bus.battery_capacity_wh, 320_000.0);
}

#[test]
fn partial_documents_keep_other_defaults() {
    let cfg =
        parse_config(r#"{"grid": {"p_ev": 9.5}, "forecaster": {"kind": "moving_average", "window": 30}}"#).unwrap();
    assert_eq!(cfg.grid.p_ev, 9.5);
    assert_eq!(cfg.grid.p_g, 12.0);
    assert_eq!(cfg.forecaster, ForecasterKind::MovingAverage(30));
    assert_eq!(cfg.n_ev, 500);
}

#[test]
fn negative_road_charge_is_rejected() {
    let err = parse_config(r#"{"game": {"road_charge": -1}}"#).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert_eq!(field_of(err), "game.road_charge");
}

#[test]
fn schema_errors_name_the_field() {
    assert_eq!(
        field_of(parse_config(r#"{"grid": {"p_evv": 1}}"#).unwrap_err()),
        "grid.p_evv"
    );
    assert_eq!(
        field_of(parse_config(r#"{"grid": {"p_ev": "x"}}"#).unwrap_err()),
        "grid.p_ev"
    );
    assert_eq!(
        field_of(parse_config(r#"{"sweep": {"n_ev": [500, -3]}}"#).unwrap_err()),
        "sweep.n_ev[1]"
    );
    assert_eq!(
        field_of(parse_config(r#"{"grid": {"m_g": -0.1}}"#).unwrap_err()),
        "grid.m_g"
    );
}

#[test]
fn out_of_range_values_are_rejected() {
    for (doc, field) in [
        (r#"{"sweep": {"p_ev": []}}"#, "sweep.p_ev"),
        (r#"{"sweep": {"repetitions": 0}}"#, "sweep.repetitions"),
        (r#"{"n_ev": 100000}"#, "n_ev"),
        (r#"{"sweep": {"n_ev": [500, 100000]}}"#, "sweep.n_ev"),
        (r#"{"soc": {"min_fraction": 0.9}}"#, "soc.max_fraction"),
        (r#"{"soc": {"alpha": 0}}"#, "soc.alpha"),
        (r#"{"simulation": {"dt_s": 0}}"#, "simulation.dt_s"),
        (
            r#"{"simulation": {"hour": {"month": 13, "hour": 0}}}"#,
            "simulation.hour.month",
        ),
        (r#"{"bounds": {"station_min": 0}}"#, "bounds.station_min"),
        (r#"{"game": {"n_threshold": 0}}"#, "game.n_threshold"),
        (r#"{"class_weights": [0, 0, 0]}"#, "class_probs"),
        (r#"{"grid": {"loss_fraction": 1.0}}"#, "grid.loss_fraction"),
    ] {
        let err = parse_config(doc).unwrap_err();
        assert_eq!(field_of(err), field, "{doc}");
    }
}

#[test]
fn round_trip_is_identity() {
    let mut cfg = ScenarioConfig::default();
    cfg.grid.p_ev = 7.25;
    cfg.sweep.m_g = vec![0.05, 0.088, 0.786];
    cfg.forecaster = ForecasterKind::MovingAverage(12);
    cfg.rng_seed = u64::MAX;
    let back = parse_config(&cfg.to_json()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_json(), cfg.to_json());
}

#[test]
fn hash_tracks_config_changes() {
    let a = ScenarioConfig::default();
    let mut b = a.clone();
    assert_eq!(a.hash_hex(), b.hash_hex());
    b.grid.m_g = 0.088;
    assert_ne!(a.hash_hex(), b.hash_hex());
    b.grid.m_g = a.grid.m_g;
    assert_eq!(a.hash_hex(), b.hash_hex());
    b.rng_seed += 1;
    assert_ne!(a.hash_hex(), b.hash_hex());
}
