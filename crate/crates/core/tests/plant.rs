mod common;

use nalgebra::Vector3;
use proptest::prelude::*;

use common::{canned, run, step_crossing, top_invariant_drift};
use tailsitter::actuator::{ActuatorBank, ActuatorVector, ELEVON_L, THRUST_L, THRUST_R, TILT_L};
use tailsitter::indi::elevon_pitch_effectiveness;
use tailsitter::model::{EulerZxy, RigidBodyState, VehicleParams};
use tailsitter::plant::{aero_forces_moments, AeroParams};
use tailsitter::sim::simulate_scenario;

#[test]
fn torque_free_top_conserves_its_invariants() {
    let drift = top_invariant_drift(10.0);
    assert!(drift < 1e-6, "relative drift {drift:e}");
}

#[test]
fn repeated_seeds_give_bitwise_identical_telemetry() {
    let config = canned("pivot_robustness");
    let a = simulate_scenario(&config).unwrap().to_csv_string();
    let b = simulate_scenario(&config).unwrap().to_csv_string();
    assert_eq!(a, b);
    let mut other = config.clone();
    other.seed += 1;
    assert_ne!(a, simulate_scenario(&other).unwrap().to_csv_string());
}

#[test]
fn actuator_steps_cross_63_percent_at_tau() {
    let dt = 0.002;
    for (index, step) in [(THRUST_L, 1.0), (TILT_L, 0.01), (ELEVON_L, -0.01)] {
        let (t, tau) = step_crossing(index, step, dt);
        assert!((t - tau).abs() <= dt, "actuator {index}: crossed at {t}, tau {tau}");
    }
}

#[test]
fn saturation_flags_match_commands_at_bounds() {
    let mut config = canned("climb_descent");
    config.mode = tailsitter::indi::ControlMode::ETailsitter;
    let log = run(&config);
    let p = &config.vehicle;
    let pinned = config.mode.pinned();
    let mut flagged = 0;
    for r in &log.rows {
        for i in 0..6 {
            let (lo, hi) = if i == THRUST_L || i == THRUST_R {
                (0.0, p.thrust_max)
            } else {
                (-p.delta_max, p.delta_max)
            };
            let at_bound = !pinned.contains(&i) && (r.commands[i] <= lo || r.commands[i] >= hi);
            assert_eq!(r.saturation & (1 << i) != 0, at_bound, "t {} actuator {i}", r.t);
            flagged += at_bound as usize;
        }
    }
    assert!(flagged > 0);
}

/// Pitch moment per radian of one elevon, by central differences.
fn elevon_moment_slope(s: &RigidBodyState, thrust: f64) -> f64 {
    let p = VehicleParams::default();
    let a = AeroParams::default();
    let mut u = ActuatorVector::zeros();
    u[THRUST_L] = thrust;
    u[THRUST_R] = thrust;
    let h = 1e-4;
    let mut up = u;
    up[ELEVON_L] = h;
    let mut dn = u;
    dn[ELEVON_L] = -h;
    let wind = Vector3::zeros();
    (aero_forces_moments(s, &up, &wind, &p, &a).1.y - aero_forces_moments(s, &dn, &wind, &p, &a).1.y) / (2.0 * h)
}

#[test]
fn forward_trim_elevon_moment_matches_schedule() {
    let p = VehicleParams::default();
    let a = AeroParams::default();
    let v = 15.0;
    // angle of attack where the flat-plate lift carries the weight
    let q = 0.5 * a.air_density * v * v * a.wing_area;
    let alpha = 0.5 * (2.0 * p.mass * p.gravity / (q * a.lift_gain)).asin();
    let s = RigidBodyState::new(
        Vector3::zeros(),
        Vector3::new(v, 0.0, 0.0),
        EulerZxy::new(0.0, 0.0, -std::f64::consts::FRAC_PI_2 + alpha),
        Vector3::zeros(),
    );
    let (f, _) = aero_forces_moments(&s, &ActuatorVector::zeros(), &Vector3::zeros(), &p, &a);
    let world = s.rotation * f;
    assert!((world.z + p.mass * p.gravity).abs() < 1e-9 * p.mass * p.gravity);
    // thrust balancing the drag, split over both motors
    let thrust = -world.x / 2.0;
    let slope = elevon_moment_slope(&s, thrust);
    let want = p.inertia.y * elevon_pitch_effectiveness(-std::f64::consts::FRAC_PI_2, v);
    assert!(((slope - want) / want).abs() < 0.1, "{slope} vs {want}");
}

#[test]
fn reversed_flow_in_descent_starves_the_elevons() {
    let p = VehicleParams::default();
    let descent = RigidBodyState::new(
        Vector3::zeros(),
        Vector3::new(0.0, 0.0, 2.0),
        EulerZxy::default(),
        Vector3::zeros(),
    );
    let forward = p.inertia.y * elevon_pitch_effectiveness(-std::f64::consts::FRAC_PI_2, 15.0);
    let slope = elevon_moment_slope(&descent, 0.0);
    assert!(slope.abs() <= 0.25 * forward, "{slope} vs {forward}");
    // reversed flow flips the freestream contribution
    assert!(slope < 0.0);
}

#[test]
fn still_air_without_thrust_has_no_loads() {
    let p = VehicleParams::default();
    let mut u = ActuatorVector::zeros();
    u[ELEVON_L] = 0.5;
    u[TILT_L] = 0.3;
    let (f, m) = aero_forces_moments(
        &RigidBodyState::default(),
        &u,
        &Vector3::zeros(),
        &p,
        &AeroParams::default(),
    );
    assert_eq!(f, Vector3::zeros());
    assert_eq!(m, Vector3::zeros());
}

proptest! {
    #[test]
    fn aero_loads_are_finite(
        vx in -40.0f64..40.0, vy in -40.0f64..40.0, vz in -40.0f64..40.0,
        roll in -1.5f64..1.5, pitch in -3.1f64..3.1, t in 0.0f64..8.56, e in -1.1f64..1.1,
    ) {
        let p = VehicleParams::default();
        let s = RigidBodyState::new(Vector3::zeros(), Vector3::new(vx, vy, vz), EulerZxy::new(0.0, roll, pitch), Vector3::new(1.0, -2.0, 0.5));
        let mut u = ActuatorVector::zeros();
        u[THRUST_L] = t;
        u[THRUST_R] = t;
        u[ELEVON_L] = e;
        let (f, m) = aero_forces_moments(&s, &u, &Vector3::new(3.0, -2.0, 0.0), &p, &AeroParams::default());
        prop_assert!(f.iter().chain(m.iter()).all(|x| x.is_finite()));
    }

    #[test]
    fn actuators_stay_within_bounds_and_slew_limits(cmds in proptest::collection::vec(-3.0f64..10.0, 6), steps in 1usize..50) {
        let p = VehicleParams::default();
        let mut bank = ActuatorBank::new(&p, 2.0);
        let cmd = ActuatorVector::from_column_slice(&cmds);
        for _ in 0..steps {
            let next = bank.step(&cmd, 0.002);
            for (i, a) in next.actuators.iter().enumerate() {
                prop_assert!(a.state >= a.lower && a.state <= a.upper);
                if let Some(rate) = a.rate_limit {
                    prop_assert!((a.state - bank.actuators[i].state).abs() <= rate * 0.002 + 1e-12);
                }
            }
            bank = next;
        }
    }
}
