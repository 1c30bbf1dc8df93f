//! Physics plant: rotors, aerodynamics, wind, free flight and tail contact.

pub mod aero;
pub mod dynamics;
pub mod wind;

use nalgebra::Vector3;

use crate::actuator::{ActuatorVector, THRUST_L, THRUST_R, TILT_L, TILT_R};
use crate::model::{control_moment_from_tilt, rotor_force, specific_thrust, RigidBodyState, VehicleParams};

pub use aero::{aero_forces_moments, AeroParams};
pub use dynamics::{pivot_contact_step, rigid_body_step, rigid_body_step_with};
pub use wind::{WindModel, WindParams};

/// Quantities an ideal sensor suite reads from the plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub angular_accel: Vector3<f64>,
    /// CG acceleration, NED, m/s^2.
    pub accel: Vector3<f64>,
    pub specific_thrust: f64,
    pub wind: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub params: VehicleParams,
    pub aero: AeroParams,
    pub wind: WindModel,
    /// Ground-contact disturbance torque is `-gain * w_n |w_n| + bias`, where
    /// `w_n` is the wind along the wing normal.
    pub pivot_torque_gain: f64,
    pub pivot_torque_bias: f64,
    pub state: RigidBodyState,
    /// Tail anchor while pivoting on the ground.
    pub contact: Option<Vector3<f64>>,
    pub time: f64,
}

impl Plant {
    /// Total body loads in free flight.
    pub fn loads(&self, s: &RigidBodyState, u: &ActuatorVector, wind: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let (fa, ma) = aero_forces_moments(s, u, wind, &self.params, &self.aero);
        let fr = rotor_force(u[THRUST_L], u[THRUST_R], u[TILT_L], u[TILT_R]);
        let mr = control_moment_from_tilt(u[THRUST_L], u[THRUST_R], u[TILT_L], u[TILT_R], &self.params);
        (fa + fr, ma + mr)
    }

    /// Wind torque about the tail axis while grounded.
    pub fn pivot_disturbance(&self, s: &RigidBodyState, wind: &Vector3<f64>) -> f64 {
        let normal = (s.rotation.transpose() * wind).x;
        -self.pivot_torque_gain * normal * normal.abs() + self.pivot_torque_bias
    }

    pub fn wind_now(&self) -> Vector3<f64> {
        self.wind.at(self.time)
    }

    /// Exact accelerations at the current state with actuator state `u`.
    pub fn measure(&self, u: &ActuatorVector) -> Measurement {
        let wind = self.wind_now();
        let s = &self.state;
        let tz = specific_thrust(u[THRUST_L], u[THRUST_R], u[TILT_L], u[TILT_R], self.params.mass);
        if self.contact.is_some() {
            let qd = self.pivot_accel(s, u, &wind);
            let accel = dynamics::pivot_cg_accel(s.attitude.yaw, s.attitude.pitch, s.rates.y, qd, &self.params);
            return Measurement {
                angular_accel: Vector3::new(0.0, qd, 0.0),
                accel,
                specific_thrust: tz,
                wind,
            };
        }
        let (f, m) = self.loads(s, u, &wind);
        let dx = dynamics::rigid_body_derivative(s, &f, &m, &self.params);
        Measurement {
            angular_accel: dx.fixed_rows::<3>(9).into(),
            accel: dx.fixed_rows::<3>(3).into(),
            specific_thrust: tz,
            wind,
        }
    }

    fn pivot_accel(&self, s: &RigidBodyState, u: &ActuatorVector, wind: &Vector3<f64>) -> f64 {
        let qd = dynamics::pivot_pitch_accel(s.attitude.pitch, u, self.pivot_disturbance(s, wind), &self.params);
        let (th, q) = (s.attitude.pitch, s.rates.y);
        let half = std::f64::consts::FRAC_PI_2;
        // resting against a ground stop
        if (th <= -half && q <= 0.0 && qd < 0.0) || (th >= half && q >= 0.0 && qd > 0.0) {
            0.0
        } else {
            qd
        }
    }

    /// Upward tail reaction; negative means the airframe is lifting off.
    pub fn normal_force(&self, u: &ActuatorVector) -> Option<f64> {
        self.contact?;
        let wind = self.wind_now();
        let qd = self.pivot_accel(&self.state, u, &wind);
        Some(dynamics::pivot_normal_force(&self.state, qd, u, &self.params))
    }

    /// Advances the plant by `dt` with actuator state `u` held.
    pub fn step(&mut self, u: &ActuatorVector, dt: f64) {
        let wind = self.wind_now();
        if let Some(tail) = self.contact {
            if self.normal_force(u).is_some_and(|n| n < 0.0) {
                self.contact = None;
            } else {
                let tau = self.pivot_disturbance(&self.state, &wind);
                self.state = pivot_contact_step(&self.state, &tail, u, tau, &self.params, dt);
                self.time += dt;
                self.state.update_airspeed(&self.wind_now());
                return;
            }
        }
        self.state = rigid_body_step_with(&self.state, |s| self.loads(s, u, &wind), &self.params, dt);
        self.time += dt;
        self.state.update_airspeed(&self.wind_now());

        let tail = dynamics::tail_position(&self.state, &self.params);
        if tail.z >= 0.0 && dynamics::tail_velocity(&self.state, &self.params).z > 0.0 {
            self.touch_down(Vector3::new(tail.x, tail.y, 0.0));
        }
    }

    /// Pins the tail at `tail`, dropping roll and the out-of-plane rates.
    pub fn touch_down(&mut self, tail: Vector3<f64>) {
        let (th, q) = dynamics::pivot_ground_stop(self.state.attitude.pitch, self.state.rates.y);
        let airspeed = self.state.airspeed;
        self.state = dynamics::pivot_kinematics(&tail, self.state.attitude.yaw, th, q, &self.params);
        self.state.airspeed = airspeed;
        self.contact = Some(tail);
    }
}
