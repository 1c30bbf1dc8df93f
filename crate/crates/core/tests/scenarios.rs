mod common;

use nalgebra::Vector3;
use proptest::prelude::*;

use common::{canned, run};
use tailsitter::guidance::FlightPhase;
use tailsitter::indi::ControlMode;
use tailsitter::report::{check_assertions, compute_report};
use tailsitter::scenario::{parse_scenario_str, ScenarioConfig, CANNED};
use tailsitter::telemetry::TelemetryLog;

fn assert_passes(config: &ScenarioConfig) {
    let log = run(config);
    let report = compute_report(&log);
    let checks = check_assertions(&config.active_assertions(), &report, &log);
    assert!(checks.len() > 1, "{} has no assertions", config.name);
    for c in &checks {
        assert!(
            c.passed,
            "{} ({}): {} {}",
            config.name,
            config.mode.name(),
            c.name,
            c.detail
        );
    }
}

#[test]
fn every_canned_scenario_meets_its_assertions() {
    for (name, _) in CANNED {
        assert_passes(&canned(name));
    }
}

#[test]
fn climb_descent_meets_its_assertions_in_both_modes() {
    for mode in [ControlMode::ETailsitter, ControlMode::Tre] {
        let mut config = canned("climb_descent");
        config.mode = mode;
        assert_passes(&config);
    }
}

#[test]
fn pivot_robustness_passes_over_eight_seeds() {
    for seed in 1..=8 {
        let mut config = canned("pivot_robustness");
        config.seed = seed;
        assert_passes(&config);
    }
}

#[test]
fn offline_report_equals_online_report() {
    let log = run(&canned("pivot_takeoff"));
    let online = compute_report(&log);
    let reread = TelemetryLog::read_csv(log.to_csv_string().as_bytes()).unwrap();
    assert_eq!(compute_report(&reread), online);
    assert_eq!(compute_report(&reread).to_key_values(), online.to_key_values());
}

#[test]
fn hover_only_report_has_no_transitions() {
    let log = run(&canned("hover_hold"));
    let report = compute_report(&log);
    assert_eq!(report.phase_sequence, vec![FlightPhase::Hover]);
    for phase in [
        FlightPhase::TransitionToForward,
        FlightPhase::Forward,
        FlightPhase::TransitionToHover,
    ] {
        assert_eq!(report.entry(phase), None);
    }
    assert_eq!(report.gate_time, None);
    let kv = report.to_key_values();
    assert!(kv.lines().any(|l| l == "gate_time=none"), "{kv}");
}

#[test]
fn elevon_only_mode_pins_the_tilts() {
    let mut config = canned("climb_descent");
    config.set("mode", "e_tailsitter").unwrap();
    let log = run(&config);
    assert!(log.rows.iter().all(|r| r.commands[0] == 0.0 && r.commands[1] == 0.0));
}

#[test]
fn negative_pivot_gain_is_rejected() {
    let err = parse_scenario_str("[pivot]\nk1 = -1\n").unwrap_err();
    assert!(err.to_string().contains("pivot.k1"), "{err}");
    assert!(parse_scenario_str("").unwrap().validate().is_ok());
}

#[test]
fn canned_scenarios_round_trip() {
    for (name, _) in CANNED {
        let config = canned(name);
        assert_eq!(parse_scenario_str(&config.to_text()).unwrap(), config);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn configs_round_trip_through_text(
        seed in any::<u64>(),
        duration in 1.0f64..200.0,
        k1 in 0.1f64..20.0,
        k2 in 0.1f64..20.0,
        wind in (-10.0f64..10.0, -10.0f64..10.0, -2.0f64..2.0),
        gust in 0.0f64..20.0,
        points in proptest::collection::vec((-500.0f64..500.0, -500.0f64..500.0, -50.0f64..-1.0), 1..6),
        mode in prop_oneof![Just("tre"), Just("e_tailsitter"), Just("tr_tailsitter")],
        radius in 0.5f64..30.0,
    ) {
        let mut c = ScenarioConfig { seed, duration, ..ScenarioConfig::default() };
        c.set("pivot.k1", &k1.to_string()).unwrap();
        c.set("pivot.k2", &k2.to_string()).unwrap();
        c.set("mode", mode).unwrap();
        c.wind.mean = Vector3::new(wind.0, wind.1, wind.2);
        c.wind.gust_peak = gust;
        c.mission.waypoints = points.iter().map(|p| Vector3::new(p.0, p.1, p.2)).collect();
        c.mission.radius = radius;
        let back = parse_scenario_str(&c.to_text()).unwrap();
        prop_assert_eq!(back, c);
    }
}
