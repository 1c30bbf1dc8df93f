//! Pivot takeoff / landing controller.
//!
//! While the tail rests on the ground the airframe is a one degree of freedom
//! inverted pendulum about the tail line:
//!
//! ```text
//! I'_yy q' = l1 T sin(delta) - m g l2 sin(-theta)
//! ```
//!
//! The virtual input `u = T sin(delta)` comes from a Lyapunov design on the
//! auxiliary state `z = k1 (theta - theta_d) + q - theta_d'`, which makes
//! `E = z^2 / 2` decay as `exp(-2 k2 t)`. The input is split into an
//! equilibrium part and a feedback increment, and the increment is spread
//! over thrust and tilt by a weighted pseudo-inverse.

use crate::actuator::{ActuatorVector, ELEVON_L, ELEVON_R, THRUST_L, THRUST_R, TILT_L, TILT_R};
use crate::model::VehicleParams;

/// Thrust scale used to normalise thrust increments, N.
pub const THRUST_WEIGHT_SCALE: f64 = 8.56;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum PivotError {
    #[error("pivot effectiveness is degenerate (B W^-1 B^T = {0:e})")]
    DegenerateEffectiveness(f64),
    #[error("pivot gains must be positive (k1 = {k1}, k2 = {k2})")]
    InvalidGains { k1: f64, k2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotGains {
    pub k1: f64,
    pub k2: f64,
}

impl Default for PivotGains {
    fn default() -> Self {
        Self { k1: 4.0, k2: 6.0 }
    }
}

impl PivotGains {
    pub fn new(k1: f64, k2: f64) -> Result<Self, PivotError> {
        if k1 > 0.0 && k2 > 0.0 && k1.is_finite() && k2.is_finite() {
            Ok(Self { k1, k2 })
        } else {
            Err(PivotError::InvalidGains { k1, k2 })
        }
    }
}

/// Pitch state and reference of the pivoting airframe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotState {
    pub pitch: f64,
    pub pitch_rate: f64,
    pub pitch_ref: f64,
    pub pitch_ref_rate: f64,
}

impl PivotState {
    pub fn new(pitch: f64, pitch_rate: f64, pitch_ref: f64, pitch_ref_rate: f64) -> Self {
        Self {
            pitch,
            pitch_rate,
            pitch_ref,
            pitch_ref_rate,
        }
    }

    /// Tracking error `x1 = theta - theta_d`.
    pub fn error(&self) -> f64 {
        self.pitch - self.pitch_ref
    }

    /// Auxiliary state `z = k1 x1 + x2 - theta_d'`.
    pub fn z(&self, gains: &PivotGains) -> f64 {
        gains.k1 * self.error() + self.pitch_rate - self.pitch_ref_rate
    }
}

/// Lyapunov function `E = z^2 / 2`.
pub fn lyapunov_energy(state: &PivotState, gains: &PivotGains) -> f64 {
    0.5 * state.z(gains).powi(2)
}

/// Equilibrium thrust and tilt holding the airframe at `pitch`: the thrust is
/// constant and the rotors point straight up (`delta_eq = -theta`).
pub fn pivot_equilibrium(pitch: f64, params: &VehicleParams) -> (f64, f64) {
    let thrust = params.mass * params.gravity * params.pivot_arm_cg / params.pivot_arm_rotor;
    (thrust, -pitch)
}

/// Equilibrium virtual input `u_eq = -m g l2 sin(theta) / l1`.
pub fn equilibrium_input(pitch: f64, params: &VehicleParams) -> f64 {
    -params.mass * params.gravity * params.pivot_arm_cg * pitch.sin() / params.pivot_arm_rotor
}

/// Feedback part of the virtual input, `u = u_eq + du`, with a constant or
/// ramped reference (`theta_d'' = 0`).
pub fn pivot_feedback(state: &PivotState, gains: &PivotGains, params: &VehicleParams) -> f64 {
    let scale = params.pivot_inertia / params.pivot_arm_rotor;
    -scale * (gains.k1 * gains.k2 * state.error() + (gains.k1 + gains.k2) * (state.pitch_rate - state.pitch_ref_rate))
}

/// Full virtual input written directly from the Lyapunov design (with a
/// reference acceleration term).
pub fn lyapunov_input(state: &PivotState, pitch_ref_accel: f64, gains: &PivotGains, params: &VehicleParams) -> f64 {
    let inertia = params.pivot_inertia;
    let z = state.z(gains);
    let gravity = params.mass * params.gravity * params.pivot_arm_cg * state.pitch.sin() / inertia;
    inertia / params.pivot_arm_rotor
        * (-gains.k1 * state.pitch_rate + gains.k1 * state.pitch_ref_rate - gravity + pitch_ref_accel - gains.k2 * z)
}

/// Splits a virtual input increment into thrust and tilt increments with the
/// weighted minimum-norm solution of `[sin d_eq, T_eq cos d_eq] x = du`.
pub fn pivot_allocate(delta_u: f64, pitch: f64, params: &VehicleParams) -> Result<(f64, f64), PivotError> {
    let (t_eq, d_eq) = pivot_equilibrium(pitch, params);
    let b = [d_eq.sin(), t_eq * d_eq.cos()];
    // W = diag(1/8.56^2, 1/delta_range^2), so W^-1 holds the squared scales
    let w_inv = [THRUST_WEIGHT_SCALE.powi(2), DELTA_RANGE.powi(2)];
    let bwb = b[0] * w_inv[0] * b[0] + b[1] * w_inv[1] * b[1];
    if bwb < 1e-12 {
        return Err(PivotError::DegenerateEffectiveness(bwb));
    }
    let k = delta_u / bwb;
    Ok((w_inv[0] * b[0] * k, w_inv[1] * b[1] * k))
}

/// Tilt angle range used in the allocation weight (63 deg).
const DELTA_RANGE: f64 = 63.0 * std::f64::consts::PI / 180.0;

/// Symmetric thrust / tilt command for the pivot phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotCommand {
    /// Combined thrust of both rotors, N.
    pub thrust: f64,
    pub tilt: f64,
}

impl PivotCommand {
    /// Actuator vector with identical left/right commands and centred elevons.
    pub fn to_actuators(&self) -> ActuatorVector {
        let mut u = ActuatorVector::zeros();
        u[TILT_L] = self.tilt;
        u[TILT_R] = self.tilt;
        u[THRUST_L] = 0.5 * self.thrust;
        u[THRUST_R] = 0.5 * self.thrust;
        u[ELEVON_L] = 0.0;
        u[ELEVON_R] = 0.0;
        u
    }
}

/// One pivot control update: feedback, allocation, equilibrium and clamping.
pub fn pivot_step(state: &PivotState, gains: &PivotGains, params: &VehicleParams) -> Result<PivotCommand, PivotError> {
    let du = pivot_feedback(state, gains, params);
    let (dt, dd) = pivot_allocate(du, state.pitch, params)?;
    let (t_eq, d_eq) = pivot_equilibrium(state.pitch, params);
    Ok(PivotCommand {
        thrust: (t_eq + dt).clamp(0.0, 2.0 * params.thrust_max),
        tilt: (d_eq + dd).clamp(-params.delta_max, params.delta_max),
    })
}

/// Pitch reference that ramps from `start` to `end` at `rate` rad/s and then
/// holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchRamp {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
}

impl PitchRamp {
    /// `(theta_d, theta_d')` at `t` seconds after the ramp started.
    pub fn sample(&self, t: f64) -> (f64, f64) {
        let span = self.end - self.start;
        let duration = span.abs() / self.rate;
        if t >= duration {
            (self.end, 0.0)
        } else {
            (
                self.start + span.signum() * self.rate * t.max(0.0),
                span.signum() * self.rate,
            )
        }
    }
}
