//! Scenario files.
//!
//! A scenario is line-oriented text. Each non-blank line is either a section
//! header `[section]` or `key = value`; keys inside a section are prefixed with
//! the section name, so `[pivot]` followed by `k1 = 4` sets `pivot.k1`. `#`
//! starts a comment. Vectors are comma-separated, waypoint lists separate
//! points with `;`. Unknown keys are rejected and every field has a default,
//! so an empty file is a valid scenario.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Vector3, Vector4};

use crate::guidance::{FlightPhase, PdGains, PhaseThresholds, VectorField};
use crate::indi::{ControlMode, IndiConfig};
use crate::model::VehicleParams;
use crate::pivot::PivotGains;
use crate::plant::{AeroParams, WindParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
    #[error("{0}")]
    Io(String),
}

fn invalid(key: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartMode {
    /// Lying flat on the ground, tail at `home`.
    #[default]
    Ground,
    /// Hovering upright with the CG at `home`.
    Hover,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotConfig {
    pub gains: PivotGains,
    /// Pitch reference ramp rate, deg/s.
    pub ramp_deg_s: f64,
    /// Ground wind torque gain, N m s^2/m^2. The default is a flat plate
    /// (C_N = 1.17) loaded at mid-chord, with the 2 m reference wind scaled
    /// down a log surface-layer profile (z0 = 0.01 m) to mid-chord height.
    pub torque_gain: f64,
    /// Constant ground disturbance torque, N m.
    pub torque_bias: f64,
}

impl Default for PivotConfig {
    fn default() -> Self {
        Self {
            gains: PivotGains::default(),
            ramp_deg_s: 60.0,
            torque_gain: 0.0005,
            torque_bias: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceConfig {
    pub pd: PdGains,
    pub field: VectorField,
    pub thresholds: PhaseThresholds,
    /// Sideslip gain, 1/m.
    pub k_sideslip: f64,
    /// Airspeed below which sideslip correction is off, m/s.
    pub sideslip_min_airspeed: f64,
    /// Pitch bound ramp rate during transitions, deg/s.
    pub transition_rate_deg_s: f64,
    /// Heading slew limit, deg/s.
    pub yaw_rate_deg_s: f64,
    pub hover_pitch_limit_deg: f64,
    pub hover_roll_limit_deg: f64,
    pub forward_roll_limit_deg: f64,
    /// Minimum specific thrust in forward flight, m/s^2.
    pub forward_min_thrust: f64,
    /// Include wing lift in the outer-loop effectiveness.
    pub lift_in_outer_loop: bool,
    /// Braking deceleration when coming to a stop, m/s^2.
    pub decel_accel: f64,
    /// Ramp rate of the along-track speed reference after a transition
    /// starts, m/s^2.
    pub transition_accel: f64,
    /// Outer-loop objective weights in hover and in wing-borne flight,
    /// blended geometrically by the pitch ratio.
    pub outer_weights: Vector3<f64>,
    pub forward_outer_weights: Vector3<f64>,
    /// Heading-frame weights while braking for a stop.
    pub braking_outer_weights: Vector3<f64>,
    /// Time constant of the low-pass filter on outer-loop measurements, s.
    pub outer_filter_tau: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            pd: PdGains::default(),
            field: VectorField::default(),
            thresholds: PhaseThresholds::default(),
            k_sideslip: 0.25,
            sideslip_min_airspeed: 4.0,
            transition_rate_deg_s: 45.0,
            yaw_rate_deg_s: 30.0,
            hover_pitch_limit_deg: 45.0,
            hover_roll_limit_deg: 35.0,
            forward_roll_limit_deg: 45.0,
            forward_min_thrust: 0.8,
            lift_in_outer_loop: true,
            decel_accel: 1.5,
            transition_accel: 3.0,
            outer_weights: Vector3::new(100.0, 100.0, 1.0),
            forward_outer_weights: Vector3::new(1.0, 10.0, 10.0),
            braking_outer_weights: Vector3::new(30.0, 10.0, 3.0),
            outer_filter_tau: 0.04,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionConfig {
    pub start: StartMode,
    /// Start position: tail point for a ground start, CG for a hover start.
    pub home: Vector3<f64>,
    pub heading_deg: f64,
    pub waypoints: Vec<Vector3<f64>>,
    /// Waypoint indices where the vehicle stops in hover before continuing.
    pub stops: Vec<usize>,
    /// Descend and pivot down after the last waypoint.
    pub land: bool,
    pub cruise_speed: f64,
    /// Horizontal speed on hover legs, m/s.
    pub hover_speed: f64,
    pub climb_rate: f64,
    pub descent_rate: f64,
    /// Waypoint acceptance radius, m.
    pub radius: f64,
    /// Hold time at each hover waypoint, s.
    pub hold: f64,
    /// Distance before a stop at which deceleration starts, m.
    pub decel_distance: f64,
    /// Legs with at least this horizontal length are flown in forward flight, m.
    pub forward_min_length: f64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            start: StartMode::Ground,
            home: Vector3::zeros(),
            heading_deg: 0.0,
            waypoints: vec![Vector3::new(0.0, 0.0, -5.0)],
            stops: Vec::new(),
            land: false,
            cruise_speed: 16.0,
            hover_speed: 2.0,
            climb_rate: 1.5,
            descent_rate: 1.0,
            radius: 10.0,
            hold: 2.0,
            decel_distance: 60.0,
            forward_min_length: 40.0,
        }
    }
}

/// Pass/fail checks evaluated on the finished run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assertions {
    pub phase_sequence: Option<Vec<FlightPhase>>,
    /// Phase that must be reached at some point.
    pub reach_phase: Option<FlightPhase>,
    /// Latest allowed time of the upright gate, s.
    pub gate_time_max: Option<f64>,
    pub waypoints_reached: Option<bool>,
    /// Largest allowed saturation duty of any actuator outside ground phases, %.
    pub max_flight_saturation: Option<f64>,
    /// Largest allowed position error after `settle_time`, m.
    pub max_position_error: Option<f64>,
    pub settle_time: Option<f64>,
    /// Elevons must saturate downwards while descending.
    pub descent_saturation: Option<bool>,
    /// Bounds on mean descent error divided by mean climb error.
    pub min_descent_ratio: Option<f64>,
    pub max_descent_ratio: Option<f64>,
}

impl Assertions {
    fn merge(&self, over: &Assertions) -> Assertions {
        Assertions {
            phase_sequence: over.phase_sequence.clone().or_else(|| self.phase_sequence.clone()),
            reach_phase: over.reach_phase.or(self.reach_phase),
            gate_time_max: over.gate_time_max.or(self.gate_time_max),
            waypoints_reached: over.waypoints_reached.or(self.waypoints_reached),
            max_flight_saturation: over.max_flight_saturation.or(self.max_flight_saturation),
            max_position_error: over.max_position_error.or(self.max_position_error),
            settle_time: over.settle_time.or(self.settle_time),
            descent_saturation: over.descent_saturation.or(self.descent_saturation),
            min_descent_ratio: over.min_descent_ratio.or(self.min_descent_ratio),
            max_descent_ratio: over.max_descent_ratio.or(self.max_descent_ratio),
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == Assertions::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: ControlMode,
    pub seed: u64,
    /// Simulated time limit, s.
    pub duration: f64,
    /// Plant and inner-loop step, s.
    pub dt: f64,
    /// Inner steps per outer-loop step.
    pub outer_divider: usize,
    /// Standard deviation of airspeed noise fed to the scheduler, m/s.
    pub airspeed_noise: f64,
    pub vehicle: VehicleParams,
    pub aero: AeroParams,
    pub pivot: PivotConfig,
    pub attitude: IndiConfig,
    pub guidance: GuidanceConfig,
    pub wind: WindParams,
    pub mission: MissionConfig,
    pub assertions: Assertions,
    pub mode_assertions: Vec<(ControlMode, Assertions)>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "unnamed".to_string(),
            mode: ControlMode::Tre,
            seed: 0,
            duration: 30.0,
            dt: 0.002,
            outer_divider: 5,
            airspeed_noise: 0.0,
            vehicle: VehicleParams::default(),
            aero: AeroParams::default(),
            pivot: PivotConfig::default(),
            attitude: IndiConfig::default(),
            guidance: GuidanceConfig::default(),
            wind: WindParams::default(),
            mission: MissionConfig::default(),
            assertions: Assertions::default(),
            mode_assertions: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    /// Assertions in force for the configured mode.
    pub fn active_assertions(&self) -> Assertions {
        match self.mode_assertions.iter().find(|(m, _)| *m == self.mode) {
            Some((_, over)) => self.assertions.merge(over),
            None => self.assertions.clone(),
        }
    }

    /// Applies a single `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ScenarioError> {
        apply(self, key.trim(), value.trim())
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.vehicle
            .validate()
            .map_err(|e| invalid(&format!("vehicle.{}", e.field), e.reason))?;
        let positive = [
            ("duration", self.duration),
            ("dt", self.dt),
            ("pivot.k1", self.pivot.gains.k1),
            ("pivot.k2", self.pivot.gains.k2),
            ("pivot.ramp_deg_s", self.pivot.ramp_deg_s),
            ("attitude.gamma", self.attitude.gamma),
            ("guidance.a_max", self.guidance.pd.a_max),
            ("guidance.k_ct", self.guidance.field.k_ct),
            ("guidance.transition_rate_deg_s", self.guidance.transition_rate_deg_s),
            ("guidance.yaw_rate_deg_s", self.guidance.yaw_rate_deg_s),
            ("guidance.transition_speed", self.guidance.thresholds.transition_speed),
            ("guidance.decel_accel", self.guidance.decel_accel),
            ("guidance.transition_accel", self.guidance.transition_accel),
            ("guidance.outer_filter_tau", self.guidance.outer_filter_tau),
            ("mission.cruise_speed", self.mission.cruise_speed),
            ("mission.hover_speed", self.mission.hover_speed),
            ("mission.climb_rate", self.mission.climb_rate),
            ("mission.descent_rate", self.mission.descent_rate),
            ("mission.radius", self.mission.radius),
            ("mission.decel_distance", self.mission.decel_distance),
            ("wind.gust_tau", self.wind.gust_tau),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("must be positive, got {v}")));
            }
        }
        let vec_positive = [
            ("attitude.k_att", self.attitude.gains.attitude),
            ("attitude.k_rate", self.attitude.gains.rate),
            ("guidance.kp", self.guidance.pd.kp),
            ("guidance.kd", self.guidance.pd.kd),
            ("guidance.outer_w_v", self.guidance.outer_weights),
            ("guidance.forward_outer_w_v", self.guidance.forward_outer_weights),
            ("guidance.braking_outer_w_v", self.guidance.braking_outer_weights),
        ];
        for (key, v) in vec_positive {
            if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(invalid(key, "all entries must be positive"));
            }
        }
        if self.attitude.objective_weights.iter().any(|x| x.is_nan() || *x < 0.0) {
            return Err(invalid("attitude.w_v", "weights must be non-negative"));
        }
        if self.outer_divider == 0 {
            return Err(invalid("outer_divider", "must be at least 1"));
        }
        if self.airspeed_noise < 0.0 {
            return Err(invalid("sensor.airspeed_noise", "must be non-negative"));
        }
        let s = &self.attitude.schedule;
        if !(s.min_weight > 0.0 && s.min_weight <= s.max_weight) {
            return Err(invalid("attitude.w_min", "need 0 < w_min <= w_max"));
        }
        if s.forward_pitch >= s.vertical_pitch {
            return Err(invalid("attitude.band_forward_deg", "must be below band_vertical_deg"));
        }
        if self.mission.waypoints.is_empty() {
            return Err(invalid("mission.waypoints", "at least one waypoint is required"));
        }
        if let Some(&i) = self
            .mission
            .stops
            .iter()
            .find(|&&i| i + 1 >= self.mission.waypoints.len())
        {
            return Err(invalid(
                "mission.stops",
                format!("stop {i} must be an intermediate waypoint"),
            ));
        }
        if self.wind.gust_peak < 0.0 {
            return Err(invalid("wind.gust_peak", "must be non-negative"));
        }
        Ok(())
    }

    /// Every key with its current value, in file order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        put("name", self.name.clone());
        put("mode", self.mode.name().to_string());
        put("seed", self.seed.to_string());
        put("duration", f(self.duration));
        put("dt", f(self.dt));
        put("outer_divider", self.outer_divider.to_string());

        let v = &self.vehicle;
        put("vehicle.mass", f(v.mass));
        put("vehicle.gravity", f(v.gravity));
        put("vehicle.inertia", vec3(&v.inertia));
        put("vehicle.pivot_inertia", f(v.pivot_inertia));
        put("vehicle.b", f(v.arm_lateral));
        put("vehicle.l", f(v.arm_longitudinal));
        put("vehicle.l1", f(v.pivot_arm_rotor));
        put("vehicle.l2", f(v.pivot_arm_cg));
        put("vehicle.delta_max", f(v.delta_max));
        put("vehicle.thrust_max", f(v.thrust_max));
        put("vehicle.tau_servo", f(v.tau_servo));
        put("vehicle.tau_motor", f(v.tau_motor));
        put("vehicle.servo_rate_limit", f(v.servo_rate_limit));

        let a = &self.aero;
        put("aero.air_density", f(a.air_density));
        put("aero.wing_area", f(a.wing_area));
        put("aero.chord", f(a.chord));
        put("aero.cg_from_leading_edge", f(a.cg_from_leading_edge));
        put("aero.lift_gain", f(a.lift_gain));
        put("aero.drag_zero", f(a.drag_zero));
        put("aero.drag_broadside", f(a.drag_broadside));
        put("aero.side_area", f(a.side_area));
        put("aero.rate_damping", vec3(&a.rate_damping));
        put("aero.elevon_pitch_hover", f(a.elevon_pitch_hover));
        put("aero.elevon_yaw_hover", f(a.elevon_yaw_hover));
        put("aero.elevon_pitch_speed", f(a.elevon_pitch_speed));
        put("aero.elevon_yaw_speed", f(a.elevon_yaw_speed));
        put("aero.washout_speed", f(a.washout_speed));
        put("aero.elevon_arm", f(a.elevon_arm));

        let p = &self.pivot;
        put("pivot.k1", f(p.gains.k1));
        put("pivot.k2", f(p.gains.k2));
        put("pivot.ramp_deg_s", f(p.ramp_deg_s));
        put("pivot.torque_gain", f(p.torque_gain));
        put("pivot.torque_bias", f(p.torque_bias));

        let at = &self.attitude;
        put("attitude.k_att", vec3(&at.gains.attitude));
        put("attitude.k_rate", vec3(&at.gains.rate));
        put("attitude.w_v", join(at.objective_weights.iter()));
        put("attitude.gamma", f(at.gamma));
        put("attitude.band_vertical_deg", f(at.schedule.vertical_pitch.to_degrees()));
        put("attitude.band_forward_deg", f(at.schedule.forward_pitch.to_degrees()));
        put("attitude.w_min", f(at.schedule.min_weight));
        put("attitude.w_max", f(at.schedule.max_weight));
        put("attitude.w_motor", f(at.schedule.motor_weight));

        let g = &self.guidance;
        put("guidance.kp", vec3(&g.pd.kp));
        put("guidance.kd", vec3(&g.pd.kd));
        put("guidance.a_max", f(g.pd.a_max));
        put("guidance.k_ct", f(g.field.k_ct));
        put("guidance.lateral_cap", f(g.field.lateral_cap));
        put("guidance.k_sideslip", f(g.k_sideslip));
        put("guidance.sideslip_min_airspeed", f(g.sideslip_min_airspeed));
        put("guidance.transition_speed", f(g.thresholds.transition_speed));
        put("guidance.transition_rate_deg_s", f(g.transition_rate_deg_s));
        put("guidance.yaw_rate_deg_s", f(g.yaw_rate_deg_s));
        put("guidance.pitch_gate_deg", f(g.thresholds.pitch_gate.to_degrees()));
        put("guidance.rate_gate", f(g.thresholds.rate_gate));
        put("guidance.landing_altitude", f(g.thresholds.landing_altitude));
        put("guidance.rest_speed", f(g.thresholds.rest_speed));
        put("guidance.hover_pitch_limit_deg", f(g.hover_pitch_limit_deg));
        put("guidance.hover_roll_limit_deg", f(g.hover_roll_limit_deg));
        put("guidance.forward_roll_limit_deg", f(g.forward_roll_limit_deg));
        put("guidance.forward_min_thrust", f(g.forward_min_thrust));
        put("guidance.lift_in_outer_loop", g.lift_in_outer_loop.to_string());
        put("guidance.decel_accel", f(g.decel_accel));
        put("guidance.transition_accel", f(g.transition_accel));
        put("guidance.outer_w_v", vec3(&g.outer_weights));
        put("guidance.forward_outer_w_v", vec3(&g.forward_outer_weights));
        put("guidance.braking_outer_w_v", vec3(&g.braking_outer_weights));
        put("guidance.outer_filter_tau", f(g.outer_filter_tau));

        let w = &self.wind;
        put("wind.mean", vec3(&w.mean));
        put("wind.gust_peak", f(w.gust_peak));
        put("wind.gust_tau", f(w.gust_tau));
        put("wind.vertical_ratio", f(w.vertical_ratio));

        put("sensor.airspeed_noise", f(self.airspeed_noise));

        let m = &self.mission;
        put(
            "mission.start",
            match m.start {
                StartMode::Ground => "ground".to_string(),
                StartMode::Hover => "hover".to_string(),
            },
        );
        put("mission.home", vec3(&m.home));
        put("mission.heading_deg", f(m.heading_deg));
        put(
            "mission.waypoints",
            m.waypoints.iter().map(vec3).collect::<Vec<_>>().join("; "),
        );
        put(
            "mission.stops",
            m.stops.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "),
        );
        put("mission.land", m.land.to_string());
        put("mission.cruise_speed", f(m.cruise_speed));
        put("mission.hover_speed", f(m.hover_speed));
        put("mission.climb_rate", f(m.climb_rate));
        put("mission.descent_rate", f(m.descent_rate));
        put("mission.radius", f(m.radius));
        put("mission.hold", f(m.hold));
        put("mission.decel_distance", f(m.decel_distance));
        put("mission.forward_min_length", f(m.forward_min_length));

        assertion_entries(&mut out, "assert", &self.assertions);
        for (mode, a) in &self.mode_assertions {
            assertion_entries(&mut out, &format!("assert.{}", mode.name()), a);
        }
        out
    }

    /// Serialises to the scenario format (flat `key = value` lines).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn assertion_entries(out: &mut Vec<(String, String)>, prefix: &str, a: &Assertions) {
    let mut put = |k: &str, v: String| out.push((format!("{prefix}.{k}"), v));
    if let Some(seq) = &a.phase_sequence {
        put(
            "phase_sequence",
            seq.iter().map(|p| p.name()).collect::<Vec<_>>().join(", "),
        );
    }
    if let Some(p) = a.reach_phase {
        put("reach_phase", p.name().to_string());
    }
    let opt = [
        ("gate_time_max", a.gate_time_max),
        ("max_flight_saturation", a.max_flight_saturation),
        ("max_position_error", a.max_position_error),
        ("settle_time", a.settle_time),
        ("min_descent_ratio", a.min_descent_ratio),
        ("max_descent_ratio", a.max_descent_ratio),
    ];
    for (k, v) in opt {
        if let Some(v) = v {
            put(k, f(v));
        }
    }
    if let Some(b) = a.waypoints_reached {
        put("waypoints_reached", b.to_string());
    }
    if let Some(b) = a.descent_saturation {
        put("descent_saturation", b.to_string());
    }
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

fn join<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|x| f(*x)).collect::<Vec<_>>().join(", ")
}

fn vec3(v: &Vector3<f64>) -> String {
    join(v.iter())
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ScenarioError> {
    let x: f64 = v
        .parse()
        .map_err(|_| invalid(key, format!("expected a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(invalid(key, "must be finite"));
    }
    Ok(x)
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ScenarioError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

fn parse_vec3(key: &str, v: &str) -> Result<Vector3<f64>, ScenarioError> {
    let xs = parse_list(key, v)?;
    if xs.len() != 3 {
        return Err(invalid(
            key,
            format!("expected 3 comma-separated numbers, got {}", xs.len()),
        ));
    }
    Ok(Vector3::new(xs[0], xs[1], xs[2]))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ScenarioError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(key, format!("expected true or false, got `{v}`"))),
    }
}

fn parse_phase(key: &str, v: &str) -> Result<FlightPhase, ScenarioError> {
    FlightPhase::parse(v.trim()).ok_or_else(|| invalid(key, format!("unknown phase `{v}`")))
}

fn apply_assertion(a: &mut Assertions, key: &str, full: &str, v: &str) -> Result<(), ScenarioError> {
    match key {
        "phase_sequence" => {
            a.phase_sequence = Some(v.split(',').map(|s| parse_phase(full, s)).collect::<Result<_, _>>()?)
        }
        "reach_phase" => a.reach_phase = Some(parse_phase(full, v)?),
        "gate_time_max" => a.gate_time_max = Some(parse_f64(full, v)?),
        "waypoints_reached" => a.waypoints_reached = Some(parse_bool(full, v)?),
        "max_flight_saturation" => a.max_flight_saturation = Some(parse_f64(full, v)?),
        "max_position_error" => a.max_position_error = Some(parse_f64(full, v)?),
        "settle_time" => a.settle_time = Some(parse_f64(full, v)?),
        "descent_saturation" => a.descent_saturation = Some(parse_bool(full, v)?),
        "min_descent_ratio" => a.min_descent_ratio = Some(parse_f64(full, v)?),
        "max_descent_ratio" => a.max_descent_ratio = Some(parse_f64(full, v)?),
        _ => return Err(invalid(full, "unknown key")),
    }
    Ok(())
}

fn apply(c: &mut ScenarioConfig, key: &str, v: &str) -> Result<(), ScenarioError> {
    let num = |v: &str| parse_f64(key, v);
    let vec = |v: &str| parse_vec3(key, v);
    match key {
        "name" => c.name = v.to_string(),
        "mode" => c.mode = ControlMode::parse(v).ok_or_else(|| invalid(key, format!("unknown mode `{v}`")))?,
        "seed" => {
            c.seed = v
                .parse()
                .map_err(|_| invalid(key, format!("expected an unsigned integer, got `{v}`")))?
        }
        "duration" => c.duration = num(v)?,
        "dt" => c.dt = num(v)?,
        "outer_divider" => {
            c.outer_divider = v
                .parse()
                .map_err(|_| invalid(key, format!("expected an integer, got `{v}`")))?
        }

        "vehicle.mass" => c.vehicle.mass = num(v)?,
        "vehicle.gravity" => c.vehicle.gravity = num(v)?,
        "vehicle.inertia" => c.vehicle.inertia = vec(v)?,
        "vehicle.pivot_inertia" => c.vehicle.pivot_inertia = num(v)?,
        "vehicle.b" => c.vehicle.arm_lateral = num(v)?,
        "vehicle.l" => c.vehicle.arm_longitudinal = num(v)?,
        "vehicle.l1" => c.vehicle.pivot_arm_rotor = num(v)?,
        "vehicle.l2" => c.vehicle.pivot_arm_cg = num(v)?,
        "vehicle.delta_max" => c.vehicle.delta_max = num(v)?,
        "vehicle.thrust_max" => c.vehicle.thrust_max = num(v)?,
        "vehicle.tau_servo" => c.vehicle.tau_servo = num(v)?,
        "vehicle.tau_motor" => c.vehicle.tau_motor = num(v)?,
        "vehicle.servo_rate_limit" => c.vehicle.servo_rate_limit = num(v)?,

        "aero.air_density" => c.aero.air_density = num(v)?,
        "aero.wing_area" => c.aero.wing_area = num(v)?,
        "aero.chord" => c.aero.chord = num(v)?,
        "aero.cg_from_leading_edge" => c.aero.cg_from_leading_edge = num(v)?,
        "aero.lift_gain" => c.aero.lift_gain = num(v)?,
        "aero.drag_zero" => c.aero.drag_zero = num(v)?,
        "aero.drag_broadside" => c.aero.drag_broadside = num(v)?,
        "aero.side_area" => c.aero.side_area = num(v)?,
        "aero.rate_damping" => c.aero.rate_damping = vec(v)?,
        "aero.elevon_pitch_hover" => c.aero.elevon_pitch_hover = num(v)?,
        "aero.elevon_yaw_hover" => c.aero.elevon_yaw_hover = num(v)?,
        "aero.elevon_pitch_speed" => c.aero.elevon_pitch_speed = num(v)?,
        "aero.elevon_yaw_speed" => c.aero.elevon_yaw_speed = num(v)?,
        "aero.washout_speed" => c.aero.washout_speed = num(v)?,
        "aero.elevon_arm" => c.aero.elevon_arm = num(v)?,

        "pivot.k1" => c.pivot.gains.k1 = num(v)?,
        "pivot.k2" => c.pivot.gains.k2 = num(v)?,
        "pivot.ramp_deg_s" => c.pivot.ramp_deg_s = num(v)?,
        "pivot.torque_gain" => c.pivot.torque_gain = num(v)?,
        "pivot.torque_bias" => c.pivot.torque_bias = num(v)?,

        "attitude.k_att" => c.attitude.gains.attitude = vec(v)?,
        "attitude.k_rate" => c.attitude.gains.rate = vec(v)?,
        "attitude.w_v" => {
            let xs = parse_list(key, v)?;
            if xs.len() != 4 {
                return Err(invalid(
                    key,
                    format!("expected 4 comma-separated numbers, got {}", xs.len()),
                ));
            }
            c.attitude.objective_weights = Vector4::from_column_slice(&xs);
        }
        "attitude.gamma" => c.attitude.gamma = num(v)?,
        "attitude.band_vertical_deg" => c.attitude.schedule.vertical_pitch = num(v)?.to_radians(),
        "attitude.band_forward_deg" => c.attitude.schedule.forward_pitch = num(v)?.to_radians(),
        "attitude.w_min" => c.attitude.schedule.min_weight = num(v)?,
        "attitude.w_max" => c.attitude.schedule.max_weight = num(v)?,
        "attitude.w_motor" => c.attitude.schedule.motor_weight = num(v)?,

        "guidance.kp" => c.guidance.pd.kp = vec(v)?,
        "guidance.kd" => c.guidance.pd.kd = vec(v)?,
        "guidance.a_max" => c.guidance.pd.a_max = num(v)?,
        "guidance.k_ct" => c.guidance.field.k_ct = num(v)?,
        "guidance.lateral_cap" => c.guidance.field.lateral_cap = num(v)?,
        "guidance.k_sideslip" => c.guidance.k_sideslip = num(v)?,
        "guidance.sideslip_min_airspeed" => c.guidance.sideslip_min_airspeed = num(v)?,
        "guidance.transition_speed" => c.guidance.thresholds.transition_speed = num(v)?,
        "guidance.transition_rate_deg_s" => c.guidance.transition_rate_deg_s = num(v)?,
        "guidance.yaw_rate_deg_s" => c.guidance.yaw_rate_deg_s = num(v)?,
        "guidance.pitch_gate_deg" => c.guidance.thresholds.pitch_gate = num(v)?.to_radians(),
        "guidance.rate_gate" => c.guidance.thresholds.rate_gate = num(v)?,
        "guidance.landing_altitude" => c.guidance.thresholds.landing_altitude = num(v)?,
        "guidance.rest_speed" => c.guidance.thresholds.rest_speed = num(v)?,
        "guidance.hover_pitch_limit_deg" => c.guidance.hover_pitch_limit_deg = num(v)?,
        "guidance.hover_roll_limit_deg" => c.guidance.hover_roll_limit_deg = num(v)?,
        "guidance.forward_roll_limit_deg" => c.guidance.forward_roll_limit_deg = num(v)?,
        "guidance.forward_min_thrust" => c.guidance.forward_min_thrust = num(v)?,
        "guidance.lift_in_outer_loop" => c.guidance.lift_in_outer_loop = parse_bool(key, v)?,
        "guidance.decel_accel" => c.guidance.decel_accel = num(v)?,
        "guidance.transition_accel" => c.guidance.transition_accel = num(v)?,
        "guidance.outer_w_v" => c.guidance.outer_weights = vec(v)?,
        "guidance.forward_outer_w_v" => c.guidance.forward_outer_weights = vec(v)?,
        "guidance.braking_outer_w_v" => c.guidance.braking_outer_weights = vec(v)?,
        "guidance.outer_filter_tau" => c.guidance.outer_filter_tau = num(v)?,

        "wind.mean" => c.wind.mean = vec(v)?,
        "wind.gust_peak" => c.wind.gust_peak = num(v)?,
        "wind.gust_tau" => c.wind.gust_tau = num(v)?,
        "wind.vertical_ratio" => c.wind.vertical_ratio = num(v)?,

        "sensor.airspeed_noise" => c.airspeed_noise = num(v)?,

        "mission.start" => {
            c.mission.start = match v {
                "ground" => StartMode::Ground,
                "hover" => StartMode::Hover,
                _ => return Err(invalid(key, format!("expected ground or hover, got `{v}`"))),
            }
        }
        "mission.home" => c.mission.home = vec(v)?,
        "mission.heading_deg" => c.mission.heading_deg = num(v)?,
        "mission.waypoints" => {
            c.mission.waypoints = v
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_vec3(key, s))
                .collect::<Result<_, _>>()?
        }
        "mission.stops" => {
            c.mission.stops = v
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| invalid(key, format!("expected an index, got `{s}`")))
                })
                .collect::<Result<_, _>>()?
        }
        "mission.land" => c.mission.land = parse_bool(key, v)?,
        "mission.cruise_speed" => c.mission.cruise_speed = num(v)?,
        "mission.hover_speed" => c.mission.hover_speed = num(v)?,
        "mission.climb_rate" => c.mission.climb_rate = num(v)?,
        "mission.descent_rate" => c.mission.descent_rate = num(v)?,
        "mission.radius" => c.mission.radius = num(v)?,
        "mission.hold" => c.mission.hold = num(v)?,
        "mission.decel_distance" => c.mission.decel_distance = num(v)?,
        "mission.forward_min_length" => c.mission.forward_min_length = num(v)?,

        _ => {
            if let Some(rest) = key.strip_prefix("assert.") {
                for mode in [ControlMode::Tre, ControlMode::ETailsitter, ControlMode::TrTailsitter] {
                    if let Some(k) = rest.strip_prefix(mode.name()).and_then(|r| r.strip_prefix('.')) {
                        let idx = match c.mode_assertions.iter().position(|(m, _)| *m == mode) {
                            Some(i) => i,
                            None => {
                                c.mode_assertions.push((mode, Assertions::default()));
                                c.mode_assertions.len() - 1
                            }
                        };
                        return apply_assertion(&mut c.mode_assertions[idx].1, k, key, v);
                    }
                }
                return apply_assertion(&mut c.assertions, rest, key, v);
            }
            return Err(invalid(key, "unknown key"));
        }
    }
    Ok(())
}

/// Parses scenario text. Keys are applied in order over the defaults.
pub fn parse_scenario_str(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut c = ScenarioConfig::default();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ScenarioError::Parse {
                line: line_no,
                message: format!("unterminated section header `{line}`"),
            })?;
            let name = name.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(ScenarioError::Parse {
                    line: line_no,
                    message: format!("bad section name `{name}`"),
                });
            }
            section = name.to_string();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ScenarioError::Parse {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ScenarioError::Parse {
                line: line_no,
                message: "missing key".to_string(),
            });
        }
        let full = if section.is_empty() {
            k.to_string()
        } else {
            format!("{section}.{k}")
        };
        c.set(&full, v)?;
    }
    c.validate()?;
    Ok(c)
}

pub fn parse_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario_str(&text)
}

/// The canned scenarios, as `(name, file contents)`.
pub const CANNED: [(&str, &str); 6] = [
    ("pivot_takeoff", include_str!("../scenarios/pivot_takeoff.scn")),
    ("hover_hold", include_str!("../scenarios/hover_hold.scn")),
    ("full_envelope", include_str!("../scenarios/full_envelope.scn")),
    ("climb_descent", include_str!("../scenarios/climb_descent.scn")),
    ("sharp_turn", include_str!("../scenarios/sharp_turn.scn")),
    ("pivot_robustness", include_str!("../scenarios/pivot_robustness.scn")),
];

/// Looks up and parses a canned scenario by name.
pub fn canned_scenario(name: &str) -> Option<Result<ScenarioConfig, ScenarioError>> {
    CANNED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_scenario_str(text))
}
