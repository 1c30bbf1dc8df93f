//! Closed-loop simulation of a scenario.
//!
//! Every step runs sense, mission update, outer loop (every
//! `outer_divider` steps), inner loop, actuators and plant, in that order,
//! and appends one telemetry row.

use nalgebra::{Vector3, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::actuator::{ActuatorBank, ActuatorVector};
use crate::guidance::{
    outer_indi_step, pd_accel_reference, pd_accel_reference_yielding, scheduled_objective_weights, FlightPhase,
    OuterConfig, WingEstimate,
};
use crate::indi::{indi_attitude_step, AttitudeObjective, IndiConfig, IndiMeasurement};
use crate::mission::{start_position, Command, Mission, Sensed, Shaping};
use crate::model::{EulerZxy, RigidBodyState};
use crate::pivot::{pivot_step, PivotState};
use crate::plant::dynamics::pivot_kinematics;
use crate::plant::{Plant, WindModel};
use crate::scenario::{ScenarioConfig, ScenarioError, StartMode};
use crate::telemetry::{TelemetryLog, TelemetryMeta, TelemetryRow};

/// Position, speed and rate magnitudes treated as numerical blow-up.
const POSITION_LIMIT: f64 = 1e5;
const SPEED_LIMIT: f64 = 500.0;
const RATE_LIMIT: f64 = 500.0;
/// Time simulated after touchdown before the run ends, s.
const LANDED_TAIL: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ScenarioError),
    #[error("numerical divergence at step {step} (t = {time:.3} s)")]
    NumericalDivergence {
        step: usize,
        time: f64,
        /// Telemetry up to and including the diverging step.
        log: Box<TelemetryLog>,
    },
}

/// First-order low-pass on the outer-loop measurements. Acceleration, thrust
/// and attitude go through the same filter so their increments stay in step.
#[derive(Debug, Clone, Copy)]
struct OuterFilter {
    accel: Vector3<f64>,
    specific_thrust: f64,
    roll: f64,
    pitch: f64,
    primed: bool,
}

impl OuterFilter {
    fn new() -> Self {
        Self {
            accel: Vector3::zeros(),
            specific_thrust: 0.0,
            roll: 0.0,
            pitch: 0.0,
            primed: false,
        }
    }

    fn update(&mut self, accel: &Vector3<f64>, specific_thrust: f64, s: &RigidBodyState, alpha: f64) {
        if !self.primed {
            *self = Self {
                accel: *accel,
                specific_thrust,
                roll: s.attitude.roll,
                pitch: s.attitude.pitch,
                primed: true,
            };
            return;
        }
        self.accel += (accel - self.accel) * alpha;
        self.specific_thrust += (specific_thrust - self.specific_thrust) * alpha;
        self.roll += (s.attitude.roll - self.roll) * alpha;
        self.pitch += (s.attitude.pitch - self.pitch) * alpha;
    }
}

fn diverged(s: &RigidBodyState) -> bool {
    let finite = s
        .position
        .iter()
        .chain(s.velocity.iter())
        .chain(s.rates.iter())
        .all(|x| x.is_finite())
        && s.attitude.yaw.is_finite()
        && s.attitude.roll.is_finite()
        && s.attitude.pitch.is_finite();
    !finite || s.position.norm() > POSITION_LIMIT || s.velocity.norm() > SPEED_LIMIT || s.rates.norm() > RATE_LIMIT
}

fn initial_state(config: &ScenarioConfig) -> (RigidBodyState, Option<Vector3<f64>>) {
    let m = &config.mission;
    let yaw = m.heading_deg.to_radians();
    match m.start {
        StartMode::Ground => {
            let s = pivot_kinematics(&m.home, yaw, -std::f64::consts::FRAC_PI_2, 0.0, &config.vehicle);
            (s, Some(m.home))
        }
        StartMode::Hover => {
            let p = start_position(m, &config.vehicle);
            (
                RigidBodyState::new(p, Vector3::zeros(), EulerZxy::new(yaw, 0.0, 0.0), Vector3::zeros()),
                None,
            )
        }
    }
}

/// Runs `config` to completion and returns its telemetry.
pub fn simulate_scenario(config: &ScenarioConfig) -> Result<TelemetryLog, SimError> {
    config.validate()?;
    let params = &config.vehicle;
    let dt = config.dt;
    let steps = (config.duration / dt).round() as usize;

    let wind = WindModel::new(&config.wind, config.seed, config.duration + 1.0);
    let (mut state, contact) = initial_state(config);
    state.update_airspeed(&wind.at(0.0));
    let hover_thrust = match config.mission.start {
        StartMode::Ground => 0.0,
        StartMode::Hover => params.hover_thrust_per_motor(),
    };
    let mut plant = Plant {
        params: params.clone(),
        aero: config.aero.clone(),
        wind,
        pivot_torque_gain: config.pivot.torque_gain,
        pivot_torque_bias: config.pivot.torque_bias,
        state,
        contact,
        time: 0.0,
    };
    let mut bank = ActuatorBank::new(params, hover_thrust);
    for &i in config.mode.pinned() {
        bank.pin(i, 0.0);
    }

    let indi = IndiConfig {
        mode: config.mode,
        ..config.attitude.clone()
    };
    let mut outer = OuterConfig {
        lift: config.guidance.lift_in_outer_loop.then_some(WingEstimate {
            air_density: config.aero.air_density,
            wing_area: config.aero.wing_area,
            lift_gain: config.aero.lift_gain,
            drag_zero: config.aero.drag_zero,
            drag_broadside: config.aero.drag_broadside,
            mass: params.mass,
            wind: config.wind.mean,
        }),
        ..OuterConfig::default()
    };
    let mut mission = Mission::new(
        &config.guidance,
        &config.mission,
        params,
        config.wind.mean,
        config.pivot.ramp_deg_s.to_radians(),
        &plant.state,
    );
    let mut noise = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let airspeed_noise = Normal::new(0.0, config.airspeed_noise).expect("validated non-negative");

    let mut log = TelemetryLog {
        meta: TelemetryMeta {
            name: config.name.clone(),
            mode: config.mode.name().to_string(),
            seed: config.seed,
            dt,
            waypoints: config.mission.waypoints.clone(),
            radius: config.mission.radius,
            diverged: None,
        },
        rows: Vec::with_capacity(steps),
    };

    let alpha = dt / (config.guidance.outer_filter_tau + dt);
    let mut filter = OuterFilter::new();
    let mut objective: Option<AttitudeObjective> = None;
    let mut euler_ref = Vector3::zeros();
    for k in 0..steps {
        let t = k as f64 * dt;
        let u0 = bank.states();
        let meas = plant.measure(&u0);
        let mut sensed_state = plant.state.clone();
        if config.airspeed_noise > 0.0 {
            sensed_state.airspeed = (sensed_state.airspeed + airspeed_noise.sample(&mut noise)).max(0.0);
        }
        let sensed = Sensed {
            state: &sensed_state,
            accel: meas.accel,
            wind: meas.wind,
            contact: plant.contact.is_some(),
        };
        let reference = mission.update(t, dt, &sensed);
        let s = &sensed_state;

        let mut nu = Vector4::zeros();
        let mut pivot_z = f64::NAN;
        let commands = match reference.command {
            Command::Pivot { ramp, since } => {
                objective = None;
                filter.primed = false;
                let (pitch_ref, pitch_ref_rate) = ramp.sample(t - since);
                let ps = PivotState::new(s.attitude.pitch, s.rates.y, pitch_ref, pitch_ref_rate);
                pivot_z = ps.z(&config.pivot.gains);
                euler_ref = Vector3::new(s.attitude.yaw, 0.0, pitch_ref);
                match pivot_step(&ps, &config.pivot.gains, params) {
                    Ok(cmd) => cmd.to_actuators(),
                    Err(_) => ActuatorVector::zeros(),
                }
            }
            Command::Idle => {
                objective = None;
                filter.primed = false;
                euler_ref = Vector3::new(s.attitude.yaw, s.attitude.roll, s.attitude.pitch);
                ActuatorVector::zeros()
            }
            Command::Flight => {
                filter.update(&meas.accel, meas.specific_thrust, s, alpha);
                if objective.is_none() || k % config.outer_divider == 0 {
                    outer.objective_weights = match reference.shaping {
                        Shaping::Braking => config.guidance.braking_outer_weights,
                        _ => scheduled_objective_weights(
                            filter.pitch,
                            &config.guidance.outer_weights,
                            &config.guidance.forward_outer_weights,
                        ),
                    };
                    if let Some(lift) = outer.lift.as_mut() {
                        lift.wind = meas.wind;
                    }
                    let p_err = reference.position - s.position;
                    let v_err = reference.velocity - s.velocity;
                    let course = Vector3::new(s.velocity.x, s.velocity.y, 0.0);
                    let a_ref = match reference.shaping {
                        Shaping::Turning if course.norm() > 1.0 => {
                            pd_accel_reference_yielding(&p_err, &v_err, &config.guidance.pd, &course.normalize())
                        }
                        _ => pd_accel_reference(&p_err, &v_err, &config.guidance.pd),
                    };
                    let mut base = s.clone();
                    base.set_attitude(EulerZxy::new(s.attitude.yaw, filter.roll, filter.pitch));
                    let inc = outer_indi_step(
                        &filter.accel,
                        &a_ref,
                        &base,
                        filter.specific_thrust,
                        &reference.bounds,
                        &outer,
                    );
                    let (roll, pitch, tz) = match inc {
                        Ok(inc) => (
                            filter.roll + inc.roll,
                            filter.pitch + inc.pitch,
                            filter.specific_thrust + inc.specific_thrust,
                        ),
                        Err(_) => (filter.roll, filter.pitch, filter.specific_thrust),
                    };
                    let att = EulerZxy::new(reference.yaw, roll, pitch);
                    euler_ref = Vector3::new(att.yaw, att.roll, att.pitch);
                    let rotation = att.to_rotation();
                    objective = Some(AttitudeObjective {
                        rotation,
                        rate_feedforward: rotation.transpose() * Vector3::new(0.0, 0.0, reference.yaw_rate),
                        specific_thrust: tz,
                    });
                }
                let obj = objective.expect("set above");
                let m = IndiMeasurement {
                    angular_accel: meas.angular_accel,
                    specific_thrust: meas.specific_thrust,
                };
                match indi_attitude_step(&m, &bank, s, &obj, params, &indi) {
                    Ok(out) => {
                        nu = out.pseudo_control;
                        out.commands
                    }
                    Err(_) => bank.commands(),
                }
            }
        };

        bank = bank.step(&commands, dt);
        log.rows.push(TelemetryRow {
            t,
            phase: mission.phase(),
            position: plant.state.position,
            velocity: plant.state.velocity,
            euler: Vector3::new(
                plant.state.attitude.yaw,
                plant.state.attitude.roll,
                plant.state.attitude.pitch,
            ),
            rates: plant.state.rates,
            airspeed: plant.state.airspeed,
            commands: bank.commands(),
            states: u0,
            saturation: bank.saturation_mask(),
            pseudo_control: nu,
            position_ref: reference.position,
            velocity_ref: reference.velocity,
            euler_ref,
            pivot_z,
            contact: plant.contact.is_some(),
        });

        plant.step(&bank.states(), dt);
        if diverged(&plant.state) {
            log.meta.diverged = Some(k);
            return Err(SimError::NumericalDivergence {
                step: k,
                time: t,
                log: Box::new(log),
            });
        }
        if mission.phase() == FlightPhase::Landed && mission.landed_at().is_some_and(|ta| t - ta >= LANDED_TAIL) {
            break;
        }
    }
    Ok(log)
}
