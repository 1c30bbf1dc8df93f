//! Vehicle parameters, ZXY attitude conventions and the rotor-tilt force maps
//! shared by the controllers and the plant.
//!
//! Frames: the inertial frame is North-East-Down. The body frame is referenced
//! to hover: with zero Euler angles the body axes coincide with NED, the
//! propellers point along `-z_b` (up) and `x_b` is the wing normal. Forward
//! flight is reached by pitching to `theta = -90 deg`, which puts the nose
//! (`-z_b`) along the horizon and `x_b` towards the ground.

use nalgebra::{Matrix3, Vector3};

/// Maximum rotor tilt and elevon deflection, 63 degrees.
pub const DELTA_MAX: f64 = 63.0 * std::f64::consts::PI / 180.0;

/// Physical parameters of the tilt-rotor + elevon airframe.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// Mass, kg.
    pub mass: f64,
    /// Gravitational acceleration, m/s^2.
    pub gravity: f64,
    /// Diagonal of the body inertia matrix, kg m^2.
    pub inertia: Vector3<f64>,
    /// Pitch inertia about the tail pivot axis, kg m^2.
    pub pivot_inertia: f64,
    /// Lateral distance from the CG to each tilt axis (along `y_b`), m.
    pub arm_lateral: f64,
    /// Longitudinal distance from the CG to the tilt axis (along `z_b`), m.
    pub arm_longitudinal: f64,
    /// Distance from the tilt axis to the tail pivot line, m.
    pub pivot_arm_rotor: f64,
    /// Distance from the CG to the tail pivot line, m.
    pub pivot_arm_cg: f64,
    /// Tilt and elevon deflection limit, rad.
    pub delta_max: f64,
    /// Maximum thrust per motor, N.
    pub thrust_max: f64,
    /// Servo (tilt and elevon) time constant, s.
    pub tau_servo: f64,
    /// Motor time constant, s.
    pub tau_motor: f64,
    /// Servo slew limit, rad/s.
    pub servo_rate_limit: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        let mass = 0.489;
        let inertia = Vector3::new(0.0035, 0.0021, 0.0055);
        let pivot_arm_cg = 0.10;
        Self {
            mass,
            gravity: 9.81,
            inertia,
            pivot_inertia: inertia.y + mass * pivot_arm_cg * pivot_arm_cg,
            arm_lateral: 0.14,
            arm_longitudinal: 0.05,
            pivot_arm_rotor: 0.13,
            pivot_arm_cg,
            delta_max: DELTA_MAX,
            thrust_max: 8.56,
            tau_servo: 0.00325,
            tau_motor: 0.00707,
            servo_rate_limit: 12.54,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid vehicle parameter `{field}`: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub reason: &'static str,
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("mass", self.mass),
            ("gravity", self.gravity),
            ("ixx", self.inertia.x),
            ("iyy", self.inertia.y),
            ("izz", self.inertia.z),
            ("iyy_pivot", self.pivot_inertia),
            ("b", self.arm_lateral),
            ("l", self.arm_longitudinal),
            ("l1", self.pivot_arm_rotor),
            ("l2", self.pivot_arm_cg),
            ("delta_max", self.delta_max),
            ("thrust_max", self.thrust_max),
            ("tau_servo", self.tau_servo),
            ("tau_motor", self.tau_motor),
            ("servo_rate_limit", self.servo_rate_limit),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError {
                    field,
                    reason: "must be finite and positive",
                });
            }
        }
        if self.pivot_arm_rotor <= self.pivot_arm_cg {
            return Err(ParamError {
                field: "l1",
                reason: "the tilt axis must be further from the tail than the CG (l1 > l2)",
            });
        }
        if self.delta_max >= std::f64::consts::FRAC_PI_2 {
            return Err(ParamError {
                field: "delta_max",
                reason: "must be below 90 degrees",
            });
        }
        Ok(())
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&self.inertia)
    }

    /// Per-motor thrust that holds the vehicle in untilted hover.
    pub fn hover_thrust_per_motor(&self) -> f64 {
        0.5 * self.mass * self.gravity
    }
}

/// ZXY Euler angles: yaw about NED z, then roll about the new x, then pitch
/// about the resulting y. Singular only at roll = +-90 deg, so the pitch range
/// a tailsitter sweeps through is covered without a gimbal lock.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerZxy {
    pub yaw: f64,
    pub roll: f64,
    pub pitch: f64,
}

impl EulerZxy {
    pub fn new(yaw: f64, roll: f64, pitch: f64) -> Self {
        Self { yaw, roll, pitch }
    }

    pub fn to_rotation(self) -> Matrix3<f64> {
        euler_zxy_to_rotation(self.yaw, self.roll, self.pitch)
    }

    /// Recovers the angles from a body-to-NED rotation.
    pub fn from_rotation(r: &Matrix3<f64>) -> Self {
        let roll = r[(2, 1)].clamp(-1.0, 1.0).asin();
        let pitch = (-r[(2, 0)]).atan2(r[(2, 2)]);
        let yaw = (-r[(0, 1)]).atan2(r[(1, 1)]);
        Self { yaw, roll, pitch }
    }

    /// Euler angle rates produced by the body rates `omega`.
    pub fn rates_from_body(self, omega: &Vector3<f64>) -> Vector3<f64> {
        let (st, ct) = self.pitch.sin_cos();
        let (sf, cf) = self.roll.sin_cos();
        let yaw_rate = (-st * omega.x + ct * omega.z) / cf;
        let roll_rate = ct * omega.x + st * omega.z;
        let pitch_rate = omega.y - sf * yaw_rate;
        // ordered as (yaw, roll, pitch) to match the struct
        Vector3::new(yaw_rate, roll_rate, pitch_rate)
    }
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Body-to-NED rotation for the ZXY sequence, `Rz(yaw) Rx(roll) Ry(pitch)`.
pub fn euler_zxy_to_rotation(yaw: f64, roll: f64, pitch: f64) -> Matrix3<f64> {
    let (sp, cp) = yaw.sin_cos();
    let (sf, cf) = roll.sin_cos();
    let (st, ct) = pitch.sin_cos();
    Matrix3::new(
        cp * ct - sp * sf * st,
        -sp * cf,
        cp * st + sp * sf * ct,
        sp * ct + cp * sf * st,
        cp * cf,
        sp * st - cp * sf * ct,
        -cf * st,
        sf,
        cf * ct,
    )
}

/// Full kinematic state of the airframe.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidBodyState {
    /// CG position, NED, m.
    pub position: Vector3<f64>,
    /// CG velocity, NED, m/s.
    pub velocity: Vector3<f64>,
    pub attitude: EulerZxy,
    /// Cached body-to-NED rotation of `attitude`.
    pub rotation: Matrix3<f64>,
    /// Body rates `[p, q, r]`, rad/s.
    pub rates: Vector3<f64>,
    /// Air-relative speed along the nose (`-z_b`), m/s.
    pub airspeed: f64,
}

impl Default for RigidBodyState {
    fn default() -> Self {
        Self::new(
            Vector3::zeros(),
            Vector3::zeros(),
            EulerZxy::default(),
            Vector3::zeros(),
        )
    }
}

impl RigidBodyState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>, attitude: EulerZxy, rates: Vector3<f64>) -> Self {
        Self {
            position,
            velocity,
            attitude,
            rotation: attitude.to_rotation(),
            rates,
            airspeed: 0.0,
        }
    }

    pub fn set_attitude(&mut self, attitude: EulerZxy) {
        self.attitude = attitude;
        self.rotation = attitude.to_rotation();
    }

    /// Height above the ground plane (NED z = 0), m.
    pub fn altitude(&self) -> f64 {
        -self.position.z
    }

    /// Updates `airspeed` from a wind vector (NED, m/s).
    pub fn update_airspeed(&mut self, wind: &Vector3<f64>) {
        let air_body = self.rotation.transpose() * (self.velocity - wind);
        self.airspeed = (-air_body.z).max(0.0);
    }
}

/// Moment produced by the two tilted rotors about the CG, body axes.
///
/// The left rotor sits at `y = -b`, the right at `y = +b`, both at `z = -l`;
/// a rotor with tilt `delta` pushes along `T [-sin(delta), 0, -cos(delta)]`.
pub fn control_moment_from_tilt(
    thrust_left: f64,
    thrust_right: f64,
    tilt_left: f64,
    tilt_right: f64,
    params: &VehicleParams,
) -> Vector3<f64> {
    let b = params.arm_lateral;
    let l = params.arm_longitudinal;
    let (sl, cl) = tilt_left.sin_cos();
    let (sr, cr) = tilt_right.sin_cos();
    Vector3::new(
        b * thrust_left * cl - b * thrust_right * cr,
        l * thrust_left * sl + l * thrust_right * sr,
        -b * thrust_left * sl + b * thrust_right * sr,
    )
}

/// Force of the two rotors in body axes.
pub fn rotor_force(thrust_left: f64, thrust_right: f64, tilt_left: f64, tilt_right: f64) -> Vector3<f64> {
    let (sl, cl) = tilt_left.sin_cos();
    let (sr, cr) = tilt_right.sin_cos();
    Vector3::new(
        -(thrust_left * sl + thrust_right * sr),
        0.0,
        -(thrust_left * cl + thrust_right * cr),
    )
}

/// Specific thrust along `-z_b`, m/s^2.
pub fn specific_thrust(thrust_left: f64, thrust_right: f64, tilt_left: f64, tilt_right: f64, mass: f64) -> f64 {
    (thrust_left * tilt_left.cos() + thrust_right * tilt_right.cos()) / mass
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w += TAU;
    }
    w
}
