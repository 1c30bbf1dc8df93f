//! Flat-plate wing aerodynamics with propwash-fed elevons.
//!
//! The wing lies in the `y_b`/`z_b` plane with its leading edge towards the
//! nose (`-z_b`). Angle of attack is measured in the `x_b`/`z_b` plane over the
//! full circle, so hover in a crosswind sees the plate broadside and a
//! vertical descent sees reversed flow over the elevons.

use nalgebra::Vector3;

use crate::actuator::{ActuatorVector, ELEVON_L, ELEVON_R, THRUST_L, THRUST_R};
use crate::model::{RigidBodyState, VehicleParams};

#[derive(Debug, Clone, PartialEq)]
pub struct AeroParams {
    /// kg/m^3.
    pub air_density: f64,
    /// m^2.
    pub wing_area: f64,
    /// Mean aerodynamic chord, m.
    pub chord: f64,
    /// CG position behind the leading edge, m.
    pub cg_from_leading_edge: f64,
    /// `C_L = lift_gain sin(a) cos(a)`.
    pub lift_gain: f64,
    pub drag_zero: f64,
    /// Broadside drag increment, `C_D = drag_zero + drag_broadside sin^2(a)`.
    pub drag_broadside: f64,
    /// Side-force area times coefficient, m^2.
    pub side_area: f64,
    /// Rate damping per unit airspeed, N m s^2 / rad.
    pub rate_damping: Vector3<f64>,
    /// Elevon pitch / yaw acceleration per radian at hover thrust, no airflow.
    pub elevon_pitch_hover: f64,
    pub elevon_yaw_hover: f64,
    /// Freestream elevon terms, multiplied by `u |u|` of the chordwise flow.
    pub elevon_pitch_speed: f64,
    pub elevon_yaw_speed: f64,
    /// Descent speed at which the propwash over the elevons is halved, m/s.
    pub washout_speed: f64,
    /// Moment arm converting elevon pitch moment to normal force, m.
    pub elevon_arm: f64,
}

impl Default for AeroParams {
    fn default() -> Self {
        Self {
            air_density: 1.225,
            wing_area: 0.071,
            chord: 0.1428,
            cg_from_leading_edge: 0.03,
            lift_gain: 3.6,
            drag_zero: 0.05,
            drag_broadside: 1.2,
            side_area: 0.01,
            rate_damping: Vector3::new(0.0004, 0.0008, 0.0004),
            elevon_pitch_hover: 13.10,
            elevon_yaw_hover: 15.72,
            elevon_pitch_speed: 0.2241,
            elevon_yaw_speed: 0.1467,
            washout_speed: 0.8,
            elevon_arm: 0.1,
        }
    }
}

impl AeroParams {
    /// Chordwise flow speed over the elevons, positive from leading to
    /// trailing edge.
    pub fn chordwise_flow(air_body: &Vector3<f64>) -> f64 {
        -air_body.z
    }

    /// Propwash washout factor in reversed flow.
    pub fn washout(&self, chordwise: f64) -> f64 {
        let r = (-chordwise).max(0.0) / self.washout_speed;
        1.0 / (1.0 + r * r)
    }

    /// Pitch acceleration per radian of one elevon, and the matching yaw
    /// acceleration magnitude, at the given thrust and flow.
    pub fn elevon_effectiveness(&self, thrust: f64, hover_thrust: f64, chordwise: f64) -> (f64, f64) {
        let wash = self.washout(chordwise) * thrust / hover_thrust;
        let flow = chordwise * chordwise.abs();
        (
            self.elevon_pitch_hover * wash + self.elevon_pitch_speed * flow,
            self.elevon_yaw_hover * wash + self.elevon_yaw_speed * flow,
        )
    }

    /// Angle of attack in `(-pi, pi]` for a body-frame air velocity.
    pub fn angle_of_attack(air_body: &Vector3<f64>) -> f64 {
        air_body.x.atan2(-air_body.z)
    }

    /// Centre-of-pressure position along `z_b` relative to the CG.
    pub fn pressure_centre(&self, alpha: f64) -> f64 {
        let from_le = self.chord * (0.5 - 0.25 * alpha.cos());
        from_le - self.cg_from_leading_edge
    }
}

/// Aerodynamic force and moment in body axes.
pub fn aero_forces_moments(
    state: &RigidBodyState,
    actuators: &ActuatorVector,
    wind: &Vector3<f64>,
    params: &VehicleParams,
    aero: &AeroParams,
) -> (Vector3<f64>, Vector3<f64>) {
    let air = state.rotation.transpose() * (state.velocity - wind);
    let mut force = Vector3::zeros();
    let mut moment = Vector3::zeros();

    let v2 = air.x * air.x + air.z * air.z;
    if v2 > 0.0 {
        let v = v2.sqrt();
        let alpha = AeroParams::angle_of_attack(&air);
        let (sa, ca) = alpha.sin_cos();
        let q = 0.5 * aero.air_density * v2 * aero.wing_area;
        let lift = q * aero.lift_gain * sa * ca;
        let drag = q * (aero.drag_zero + aero.drag_broadside * sa * sa);
        let wing = Vector3::new(-ca, 0.0, -sa) * lift + Vector3::new(-sa, 0.0, ca) * drag;
        force += wing;
        moment.y += aero.pressure_centre(alpha) * wing.x;
        moment -= aero.rate_damping.component_mul(&state.rates) * v;
    }
    force.y -= 0.5 * aero.air_density * aero.side_area * air.y * air.y.abs();

    let hover = params.hover_thrust_per_motor();
    let flow = AeroParams::chordwise_flow(&air);
    for (elevon, motor, side) in [(ELEVON_L, THRUST_L, 1.0), (ELEVON_R, THRUST_R, -1.0)] {
        let (kp, ky) = aero.elevon_effectiveness(actuators[motor], hover, flow);
        let delta = actuators[elevon];
        let my = params.inertia.y * kp * delta;
        moment.y += my;
        moment.z += side * params.inertia.z * ky * delta;
        force.x += my / aero.elevon_arm;
    }
    (force, moment)
}
