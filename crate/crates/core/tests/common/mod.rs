//! Shared oracles and harnesses for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tailsitter::actuator::{ActuatorBank, ActuatorVector, ELEVON_L, ELEVON_R, THRUST_L, THRUST_R, TILT_L, TILT_R};
use tailsitter::guidance::{thrust_accel, thrust_accel_jacobian, WingEstimate};
use tailsitter::indi::{
    build_effectiveness, elevon_pitch_effectiveness, elevon_yaw_effectiveness, indi_allocate, indi_attitude_step,
    AttitudeObjective, EffectivenessMatrix, IndiConfig, IndiMeasurement,
};
use tailsitter::model::{control_moment_from_tilt, specific_thrust, EulerZxy, RigidBodyState, VehicleParams};
use tailsitter::pivot::{lyapunov_input, PivotGains, PivotState};
use tailsitter::plant::{AeroParams, Plant, WindModel};
use tailsitter::scenario::{canned_scenario, ScenarioConfig};
use tailsitter::sim::{simulate_scenario, SimError};
use tailsitter::telemetry::TelemetryLog;
use tailsitter::wls::AllocationProblem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn canned(name: &str) -> ScenarioConfig {
    canned_scenario(name)
        .expect("canned scenario exists")
        .expect("canned scenario parses")
}

/// Runs a scenario, keeping the partial log of a diverged run.
pub fn run(config: &ScenarioConfig) -> TelemetryLog {
    match simulate_scenario(config) {
        Ok(log) => log,
        Err(SimError::NumericalDivergence { log, .. }) => *log,
        Err(e) => panic!("{e}"),
    }
}

/// Largest column-wise relative difference `|a_j - b_j| / |b_j|`.
pub fn column_relative_error<const R: usize, const C: usize>(
    a: &nalgebra::SMatrix<f64, R, C>,
    b: &nalgebra::SMatrix<f64, R, C>,
) -> f64 {
    (0..C)
        .map(|j| {
            let d = (a.column(j) - b.column(j)).norm();
            let n = b.column(j).norm();
            if n == 0.0 {
                d
            } else {
                d / n
            }
        })
        .fold(0.0, f64::max)
}

/// Random admissible actuator state: tilts within limits, positive thrusts.
pub fn random_actuators(rng: &mut ChaCha8Rng, params: &VehicleParams) -> ActuatorVector {
    let d = params.delta_max;
    let mut u = ActuatorVector::zeros();
    u[TILT_L] = rng.random_range(-d..d);
    u[TILT_R] = rng.random_range(-d..d);
    u[THRUST_L] = rng.random_range(0.3..params.thrust_max);
    u[THRUST_R] = rng.random_range(0.3..params.thrust_max);
    u[ELEVON_L] = rng.random_range(-d..d);
    u[ELEVON_R] = rng.random_range(-d..d);
    u
}

/// Central finite differences of the rotor moment and specific thrust maps,
/// with the scheduled elevon constants in the elevon columns.
pub fn effectiveness_fd(u0: &ActuatorVector, pitch: f64, airspeed: f64, params: &VehicleParams) -> EffectivenessMatrix {
    let eval = |u: &ActuatorVector| {
        let m = control_moment_from_tilt(u[THRUST_L], u[THRUST_R], u[TILT_L], u[TILT_R], params);
        let acc = m.component_div(&params.inertia);
        Vector4::new(
            acc.x,
            acc.y,
            acc.z,
            specific_thrust(u[THRUST_L], u[THRUST_R], u[TILT_L], u[TILT_R], params.mass),
        )
    };
    let mut g = EffectivenessMatrix::zeros();
    for j in [TILT_L, TILT_R, THRUST_L, THRUST_R] {
        let h = 1e-6;
        let (mut up, mut dn) = (*u0, *u0);
        up[j] += h;
        dn[j] -= h;
        g.set_column(j, &((eval(&up) - eval(&dn)) / (2.0 * h)));
    }
    let ge25 = elevon_pitch_effectiveness(pitch, airspeed);
    let ge35 = elevon_yaw_effectiveness(pitch, airspeed);
    g.set_column(ELEVON_L, &Vector4::new(0.0, ge25, ge35, 0.0));
    g.set_column(ELEVON_R, &Vector4::new(0.0, ge25, -ge35, 0.0));
    g
}

/// Worst relative error of `build_effectiveness` against finite differences
/// over `n` random states.
pub fn effectiveness_fd_error(n: usize, seed: u64) -> f64 {
    let p = VehicleParams::default();
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let u = random_actuators(&mut r, &p);
            let pitch = r.random_range(-1.7..0.2);
            let v = r.random_range(0.0..25.0);
            column_relative_error(
                &build_effectiveness(&u, pitch, v, &p),
                &effectiveness_fd(&u, pitch, v, &p),
            )
        })
        .fold(0.0, f64::max)
}

pub fn random_attitude(rng: &mut ChaCha8Rng) -> EulerZxy {
    EulerZxy::new(
        rng.random_range(-3.1..3.1),
        rng.random_range(-1.2..1.2),
        rng.random_range(-1.8..0.4),
    )
}

/// Central differences of `f` with respect to `[roll, pitch, T_Z]`.
pub fn outer_fd<F: Fn(&EulerZxy, f64) -> Vector3<f64>>(att: &EulerZxy, tz: f64, f: F) -> Matrix3<f64> {
    let h = 1e-6;
    let col = |dr: f64, dp: f64, dt: f64| {
        let up = EulerZxy::new(att.yaw, att.roll + dr, att.pitch + dp);
        let dn = EulerZxy::new(att.yaw, att.roll - dr, att.pitch - dp);
        (f(&up, tz + dt) - f(&dn, tz - dt)) / (2.0 * h)
    };
    Matrix3::from_columns(&[col(h, 0.0, 0.0), col(0.0, h, 0.0), col(0.0, 0.0, h)])
}

pub fn wing_estimate(wind: Vector3<f64>) -> WingEstimate {
    let a = AeroParams::default();
    WingEstimate {
        air_density: a.air_density,
        wing_area: a.wing_area,
        lift_gain: a.lift_gain,
        drag_zero: a.drag_zero,
        drag_broadside: a.drag_broadside,
        mass: VehicleParams::default().mass,
        wind,
    }
}

/// Worst relative error of the thrust and wing Jacobians over `n` random
/// attitudes and velocities.
pub fn outer_jacobian_fd_error(n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let att = random_attitude(&mut r);
        let tz = r.random_range(1.0..30.0);
        let fd = outer_fd(&att, tz, |a, t| thrust_accel(a, t, 9.81));
        worst = worst.max(column_relative_error(&thrust_accel_jacobian(&att, tz), &fd));

        let wind = Vector3::new(r.random_range(-8.0..8.0), r.random_range(-8.0..8.0), 0.0);
        let vel = Vector3::new(
            r.random_range(-20.0..20.0),
            r.random_range(-20.0..20.0),
            r.random_range(-3.0..3.0),
        );
        let wing = wing_estimate(wind);
        let (_, j) = wing.accel_and_jacobian(&att, &vel);
        let fd = outer_fd(&att, tz, |a, _| wing.accel_and_jacobian(a, &vel).0);
        // the T_Z column is identically zero for the wing
        let (a2, f2) = (
            j.fixed_columns::<2>(0).into_owned(),
            fd.fixed_columns::<2>(0).into_owned(),
        );
        worst = worst.max(column_relative_error(&a2, &f2));
        assert_eq!(j.column(2).norm(), 0.0);
    }
    worst
}

/// Share of row `row` of the realised increment `G du` produced by the
/// actuators in `group`, measured on absolute contributions.
pub fn group_share(g: &EffectivenessMatrix, du: &ActuatorVector, row: usize, group: &[usize]) -> f64 {
    let contrib: Vec<f64> = (0..6).map(|j| (g[(row, j)] * du[j]).abs()).collect();
    let total: f64 = contrib.iter().sum();
    group.iter().map(|&j| contrib[j]).sum::<f64>() / total
}

/// Bank at trim for the given flight condition: centred servos and
/// `thrust` newtons per motor.
pub fn trim_bank(params: &VehicleParams, thrust: f64) -> ActuatorBank {
    ActuatorBank::new(params, thrust)
}

/// Allocates a pure demand `demand` on row `row` at the given condition and
/// returns the effectiveness and the actuator increment.
pub fn route_demand(
    pitch: f64,
    airspeed: f64,
    thrust: f64,
    row: usize,
    demand: f64,
    config: &IndiConfig,
) -> (EffectivenessMatrix, ActuatorVector) {
    let p = VehicleParams::default();
    let bank = trim_bank(&p, thrust);
    let u0 = bank.states();
    let tz = specific_thrust(u0[THRUST_L], u0[THRUST_R], u0[TILT_L], u0[TILT_R], p.mass);
    let meas = IndiMeasurement {
        angular_accel: Vector3::zeros(),
        specific_thrust: tz,
    };
    let mut nu = Vector4::new(0.0, 0.0, 0.0, tz);
    nu[row] = demand;
    let out = indi_allocate(&meas, &bank, pitch, airspeed, &nu, &p, config).expect("allocation succeeds");
    (out.effectiveness, out.commands - u0)
}

/// Tilt share of a pitch demand at hover and elevon share of a roll demand
/// (rotation about the nose, body `z`) in forward flight at 16 m/s.
pub fn routing_shares() -> (f64, f64) {
    let p = VehicleParams::default();
    let config = IndiConfig::default();
    let (g, du) = route_demand(0.0, 0.0, p.hover_thrust_per_motor(), 1, 5.0, &config);
    let tilt = group_share(&g, &du, 1, &[TILT_L, TILT_R]);
    let (g, du) = route_demand(-std::f64::consts::FRAC_PI_2, 16.0, 0.5, 2, 5.0, &config);
    let elevon = group_share(&g, &du, 2, &[ELEVON_L, ELEVON_R]);
    (tilt, elevon)
}

/// Plant in still air with no ground contact.
pub fn free_plant(state: RigidBodyState) -> Plant {
    Plant {
        params: VehicleParams::default(),
        aero: AeroParams::default(),
        wind: WindModel::constant(Vector3::zeros()),
        pivot_torque_gain: 0.0,
        pivot_torque_bias: 0.0,
        state,
        contact: None,
        time: 0.0,
    }
}

/// Attitude recovery in hover from `initial` towards level. Returns the
/// largest Euler error over the last sample window after `settle` seconds,
/// and whether any command touched a bound.
pub fn attitude_recovery(initial: EulerZxy, settle: f64) -> (f64, bool) {
    let p = VehicleParams::default();
    let dt = 0.002;
    let mut plant = free_plant(RigidBodyState::new(
        Vector3::new(0.0, 0.0, -20.0),
        Vector3::zeros(),
        initial,
        Vector3::zeros(),
    ));
    let mut bank = ActuatorBank::new(&p, p.hover_thrust_per_motor());
    let config = IndiConfig::default();
    let objective = AttitudeObjective {
        rotation: Matrix3::identity(),
        rate_feedforward: Vector3::zeros(),
        specific_thrust: p.gravity,
    };
    let mut saturated = false;
    let mut worst_after = 0.0f64;
    let steps = (settle / dt).round() as usize + 250;
    for k in 0..steps {
        let u0 = bank.states();
        let m = plant.measure(&u0);
        let meas = IndiMeasurement {
            angular_accel: m.angular_accel,
            specific_thrust: m.specific_thrust,
        };
        let out = indi_attitude_step(&meas, &bank, &plant.state, &objective, &p, &config).expect("allocation succeeds");
        bank = bank.step(&out.commands, dt);
        saturated |= bank.saturation_mask() != 0;
        plant.step(&bank.states(), dt);
        if (k + 1) as f64 * dt >= settle {
            let a = plant.state.attitude;
            worst_after = worst_after.max(a.yaw.abs().max(a.roll.abs()).max(a.pitch.abs()));
        }
    }
    (worst_after, saturated)
}

/// Ideal one-degree-of-freedom pivot plant under the exact Lyapunov input,
/// integrated with RK4. Returns `(t, state)` samples including the start.
pub fn ideal_pivot(
    theta0: f64,
    q0: f64,
    theta_ref: f64,
    gains: &PivotGains,
    duration: f64,
    dt: f64,
) -> Vec<(f64, PivotState)> {
    let p = VehicleParams::default();
    let accel = |th: f64, q: f64| {
        let s = PivotState::new(th, q, theta_ref, 0.0);
        let u = lyapunov_input(&s, 0.0, gains, &p);
        (p.pivot_arm_rotor * u + p.mass * p.gravity * p.pivot_arm_cg * th.sin()) / p.pivot_inertia
    };
    let (mut th, mut q) = (theta0, q0);
    let steps = (duration / dt).round() as usize;
    let mut out = vec![(0.0, PivotState::new(th, q, theta_ref, 0.0))];
    for k in 0..steps {
        let (a1, b1) = (q, accel(th, q));
        let (a2, b2) = (q + 0.5 * dt * b1, accel(th + 0.5 * dt * a1, q + 0.5 * dt * b1));
        let (a3, b3) = (q + 0.5 * dt * b2, accel(th + 0.5 * dt * a2, q + 0.5 * dt * b2));
        let (a4, b4) = (q + dt * b3, accel(th + dt * a3, q + dt * b3));
        th += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        q += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        out.push(((k + 1) as f64 * dt, PivotState::new(th, q, theta_ref, 0.0)));
    }
    out
}

/// Least-squares slope of `(x, y)` samples.
pub fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Relative drift of the torque-free invariants `|I w|^2` and `w . I w` over
/// `duration` seconds of free rotation.
pub fn top_invariant_drift(duration: f64) -> f64 {
    let p = VehicleParams {
        gravity: 0.0,
        ..VehicleParams::default()
    };
    let w0 = Vector3::new(0.2, 0.3, 3.0);
    let mut s = RigidBodyState::new(Vector3::zeros(), Vector3::zeros(), EulerZxy::default(), w0);
    let invariants = |w: &Vector3<f64>| {
        let h = p.inertia.component_mul(w);
        (h.norm_squared(), w.dot(&h))
    };
    let (h0, e0) = invariants(&w0);
    let mut worst = 0.0f64;
    let dt = 0.002;
    for _ in 0..(duration / dt).round() as usize {
        s = tailsitter::plant::rigid_body_step(&s, &Vector3::zeros(), &Vector3::zeros(), &p, dt);
        let (h, e) = invariants(&s.rates);
        worst = worst.max(((h - h0) / h0).abs()).max(((e - e0) / e0).abs());
    }
    worst
}

/// Time at which a unit-fraction step response first reaches 63.2 %, and the
/// actuator's time constant, for actuator `index` and step size `step`.
pub fn step_crossing(index: usize, step: f64, dt: f64) -> (f64, f64) {
    let p = VehicleParams::default();
    let mut bank = ActuatorBank::new(&p, 0.0);
    let tau = bank.actuators[index].tau;
    let mut cmd = ActuatorVector::zeros();
    cmd[index] = step;
    let mut t = 0.0;
    while bank.actuators[index].state / step < 1.0 - (-1.0f64).exp() {
        bank = bank.step(&cmd, dt);
        t += dt;
        assert!(t < 1.0, "no crossing");
    }
    (t, tau)
}

/// Random allocation problem with `m` objectives and `n` inputs.
pub fn random_problem(rng: &mut ChaCha8Rng, m: usize, n: usize, bound: f64) -> AllocationProblem {
    let lower = DVector::from_fn(n, |_, _| -rng.random_range(0.05..bound));
    let upper = DVector::from_fn(n, |_, _| rng.random_range(0.05..bound));
    let u0 = DVector::from_fn(n, |i, _| rng.random_range(lower[i]..upper[i]));
    let preferred = DVector::from_fn(n, |i, _| rng.random_range(lower[i]..upper[i]));
    AllocationProblem {
        effectiveness: DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0)),
        objective: DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0)),
        u0,
        preferred,
        lower,
        upper,
        input_weights: DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0)),
        objective_weights: DVector::from_fn(m, |_, _| rng.random_range(0.5..2.0)),
        gamma: tailsitter::wls::DEFAULT_GAMMA,
        max_iterations: None,
    }
}

/// Solution of the normal equations ignoring bounds.
pub fn closed_form(p: &AllocationProblem) -> DVector<f64> {
    let wu2 = DMatrix::from_diagonal(&p.input_weights.map(|w| w * w));
    let wv2 = DMatrix::from_diagonal(&p.objective_weights.map(|w| w * w));
    let gt = p.effectiveness.transpose();
    let a = &wu2 + p.gamma * &gt * &wv2 * &p.effectiveness;
    let b = &wu2 * &p.preferred + p.gamma * &gt * &wv2 * &p.objective;
    a.lu().solve(&b).expect("regularised normal matrix is invertible")
}
