//! Rigid-body integration (RK4) and the one-degree-of-freedom tail-pivot mode.

use nalgebra::{SVector, Vector3};

use crate::actuator::{ActuatorVector, THRUST_L, THRUST_R, TILT_L, TILT_R};
use crate::model::{rot_z, EulerZxy, RigidBodyState, VehicleParams};

/// `[p (3), v (3), yaw, roll, pitch, omega (3)]`.
pub type StateVector = SVector<f64, 12>;

pub fn pack(s: &RigidBodyState) -> StateVector {
    let mut x = StateVector::zeros();
    x.fixed_rows_mut::<3>(0).copy_from(&s.position);
    x.fixed_rows_mut::<3>(3).copy_from(&s.velocity);
    x[6] = s.attitude.yaw;
    x[7] = s.attitude.roll;
    x[8] = s.attitude.pitch;
    x.fixed_rows_mut::<3>(9).copy_from(&s.rates);
    x
}

/// Inverse of [`pack`]; airspeed is carried over from `template`.
pub fn unpack(x: &StateVector, airspeed: f64) -> RigidBodyState {
    let mut s = RigidBodyState::new(
        x.fixed_rows::<3>(0).into(),
        x.fixed_rows::<3>(3).into(),
        EulerZxy::new(x[6], x[7], x[8]),
        x.fixed_rows::<3>(9).into(),
    );
    s.airspeed = airspeed;
    s
}

/// Time derivative of the packed state under body-axis loads.
pub fn rigid_body_derivative(
    s: &RigidBodyState,
    force: &Vector3<f64>,
    moment: &Vector3<f64>,
    params: &VehicleParams,
) -> StateVector {
    let accel = s.rotation * force / params.mass + Vector3::new(0.0, 0.0, params.gravity);
    let euler_rates = s.attitude.rates_from_body(&s.rates);
    let i = &params.inertia;
    let w = &s.rates;
    let h = i.component_mul(w);
    let omega_dot = (moment - w.cross(&h)).component_div(i);
    let mut dx = StateVector::zeros();
    dx.fixed_rows_mut::<3>(0).copy_from(&s.velocity);
    dx.fixed_rows_mut::<3>(3).copy_from(&accel);
    dx.fixed_rows_mut::<3>(6).copy_from(&euler_rates);
    dx.fixed_rows_mut::<3>(9).copy_from(&omega_dot);
    dx
}

/// One RK4 step with loads re-evaluated at every stage.
pub fn rigid_body_step_with<F>(state: &RigidBodyState, loads: F, params: &VehicleParams, dt: f64) -> RigidBodyState
where
    F: Fn(&RigidBodyState) -> (Vector3<f64>, Vector3<f64>),
{
    let f = |x: &StateVector| {
        let s = unpack(x, state.airspeed);
        let (force, moment) = loads(&s);
        rigid_body_derivative(&s, &force, &moment, params)
    };
    let x0 = pack(state);
    let k1 = f(&x0);
    let k2 = f(&(x0 + k1 * (0.5 * dt)));
    let k3 = f(&(x0 + k2 * (0.5 * dt)));
    let k4 = f(&(x0 + k3 * dt));
    unpack(&(x0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)), state.airspeed)
}

/// One RK4 step with constant body-axis force and moment.
pub fn rigid_body_step(
    state: &RigidBodyState,
    force: &Vector3<f64>,
    moment: &Vector3<f64>,
    params: &VehicleParams,
    dt: f64,
) -> RigidBodyState {
    rigid_body_step_with(state, |_| (*force, *moment), params, dt)
}

/// Body-frame position of the tail contact point relative to the CG.
pub fn tail_offset(params: &VehicleParams) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, params.pivot_arm_cg)
}

pub fn tail_position(state: &RigidBodyState, params: &VehicleParams) -> Vector3<f64> {
    state.position + state.rotation * tail_offset(params)
}

pub fn tail_velocity(state: &RigidBodyState, params: &VehicleParams) -> Vector3<f64> {
    state.velocity + state.rotation * state.rates.cross(&tail_offset(params))
}

/// Pitch acceleration about the tail axis.
pub fn pivot_pitch_accel(pitch: f64, actuators: &ActuatorVector, disturbance: f64, params: &VehicleParams) -> f64 {
    let rotor = actuators[THRUST_L] * actuators[TILT_L].sin() + actuators[THRUST_R] * actuators[TILT_R].sin();
    (params.pivot_arm_rotor * rotor + params.mass * params.gravity * params.pivot_arm_cg * pitch.sin() + disturbance)
        / params.pivot_inertia
}

/// Full state of an airframe pivoting about `tail` with the given heading,
/// pitch and pitch rate (roll, roll rate and yaw rate are zero).
pub fn pivot_kinematics(
    tail: &Vector3<f64>,
    yaw: f64,
    pitch: f64,
    pitch_rate: f64,
    params: &VehicleParams,
) -> RigidBodyState {
    let rz = rot_z(yaw);
    let (st, ct) = pitch.sin_cos();
    let l2 = params.pivot_arm_cg;
    let position = tail - rz * Vector3::new(st, 0.0, ct) * l2;
    let velocity = -rz * Vector3::new(ct, 0.0, -st) * (l2 * pitch_rate);
    RigidBodyState::new(
        position,
        velocity,
        EulerZxy::new(yaw, 0.0, pitch),
        Vector3::new(0.0, pitch_rate, 0.0),
    )
}

/// CG acceleration (NED) of the pivoting airframe.
pub fn pivot_cg_accel(yaw: f64, pitch: f64, pitch_rate: f64, pitch_accel: f64, params: &VehicleParams) -> Vector3<f64> {
    let rz = rot_z(yaw);
    let (st, ct) = pitch.sin_cos();
    let l2 = params.pivot_arm_cg;
    -rz * (Vector3::new(ct, 0.0, -st) * pitch_accel - Vector3::new(st, 0.0, ct) * (pitch_rate * pitch_rate)) * l2
}

/// Upward ground reaction needed to keep the tail on the ground, N.
pub fn pivot_normal_force(
    state: &RigidBodyState,
    pitch_accel: f64,
    actuators: &ActuatorVector,
    params: &VehicleParams,
) -> f64 {
    let a = pivot_cg_accel(
        state.attitude.yaw,
        state.attitude.pitch,
        state.rates.y,
        pitch_accel,
        params,
    );
    let rotor = state.rotation
        * crate::model::rotor_force(
            actuators[THRUST_L],
            actuators[THRUST_R],
            actuators[TILT_L],
            actuators[TILT_R],
        );
    let external = rotor + Vector3::new(0.0, 0.0, params.mass * params.gravity);
    let reaction = a * params.mass - external;
    -reaction.z
}

/// Pitch limits while pivoting: flat on the ground either way.
const PIVOT_STOP: f64 = std::f64::consts::FRAC_PI_2;

/// Applies the ground stops to a pitch / rate pair.
pub fn pivot_ground_stop(pitch: f64, rate: f64) -> (f64, f64) {
    if pitch <= -PIVOT_STOP {
        (-PIVOT_STOP, rate.max(0.0))
    } else if pitch >= PIVOT_STOP {
        (PIVOT_STOP, rate.min(0.0))
    } else {
        (pitch, rate)
    }
}

/// RK4 step of the pivot equation with the tail pinned at `tail`.
pub fn pivot_contact_step(
    state: &RigidBodyState,
    tail: &Vector3<f64>,
    actuators: &ActuatorVector,
    disturbance: f64,
    params: &VehicleParams,
    dt: f64,
) -> RigidBodyState {
    let f = |th: f64, q: f64| (q, pivot_pitch_accel(th, actuators, disturbance, params));
    let (th, q) = (state.attitude.pitch, state.rates.y);
    let (a1, b1) = f(th, q);
    let (a2, b2) = f(th + 0.5 * dt * a1, q + 0.5 * dt * b1);
    let (a3, b3) = f(th + 0.5 * dt * a2, q + 0.5 * dt * b2);
    let (a4, b4) = f(th + dt * a3, q + dt * b3);
    let th = th + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    let q = q + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    let (th, q) = pivot_ground_stop(th, q);
    let mut next = pivot_kinematics(tail, state.attitude.yaw, th, q, params);
    next.airspeed = state.airspeed;
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_loads_no_gravity_is_constant() {
        let p = VehicleParams {
            gravity: 0.0,
            ..VehicleParams::default()
        };
        let s = RigidBodyState::new(
            Vector3::new(1.0, 2.0, -3.0),
            Vector3::zeros(),
            EulerZxy::new(0.3, 0.1, -0.7),
            Vector3::zeros(),
        );
        let next = rigid_body_step(&s, &Vector3::zeros(), &Vector3::zeros(), &p, 0.002);
        assert_eq!(next, s);
    }

    #[test]
    fn free_fall_one_second() {
        let p = VehicleParams::default();
        let mut s = RigidBodyState::default();
        for _ in 0..500 {
            s = rigid_body_step(&s, &Vector3::zeros(), &Vector3::zeros(), &p, 0.002);
        }
        assert!((s.velocity.z - 9.81).abs() < 1e-9);
        assert!((s.position.z - 0.5 * 9.81).abs() < 1e-9);
    }

    #[test]
    fn pivot_upright_is_equilibrium() {
        let p = VehicleParams::default();
        assert_eq!(pivot_pitch_accel(0.0, &ActuatorVector::zeros(), 0.0, &p), 0.0);
    }

    #[test]
    fn pivot_falls_flat_without_thrust() {
        let p = VehicleParams::default();
        let a = pivot_pitch_accel(-std::f64::consts::FRAC_PI_2, &ActuatorVector::zeros(), 0.0, &p);
        assert!((a + p.mass * p.gravity * p.pivot_arm_cg / p.pivot_inertia).abs() < 1e-12);
    }

    #[test]
    fn pivot_keeps_tail_fixed() {
        let p = VehicleParams::default();
        let tail = Vector3::new(3.0, -1.0, 0.0);
        let mut s = pivot_kinematics(&tail, 0.4, -1.2, 0.0, &p);
        let mut u = ActuatorVector::zeros();
        u[TILT_L] = 1.0;
        u[TILT_R] = 1.0;
        u[THRUST_L] = 2.5;
        u[THRUST_R] = 2.5;
        for _ in 0..400 {
            s = pivot_contact_step(&s, &tail, &u, 0.0, &p, 0.002);
            assert!((tail_position(&s, &p) - tail).norm() < 1e-9);
            assert!(tail_velocity(&s, &p).norm() < 1e-9);
        }
        assert!(s.attitude.pitch > -1.2);
    }

    #[test]
    fn pivot_cg_accel_matches_finite_difference() {
        let p = VehicleParams::default();
        let tail = Vector3::zeros();
        let (yaw, th, q, qd) = (0.7, -0.8, 0.9, -2.0);
        let h = 1e-6;
        let v = |t: f64| pivot_kinematics(&tail, yaw, th + q * t + 0.5 * qd * t * t, q + qd * t, &p).velocity;
        let fd = (v(h) - v(-h)) / (2.0 * h);
        let a = pivot_cg_accel(yaw, th, q, qd, &p);
        assert!((fd - a).norm() < 1e-6);
    }

    #[test]
    fn resting_flat_has_full_weight_on_the_ground() {
        let p = VehicleParams::default();
        let s = pivot_kinematics(&Vector3::zeros(), 0.0, -std::f64::consts::FRAC_PI_2, 0.0, &p);
        let n = pivot_normal_force(&s, 0.0, &ActuatorVector::zeros(), &p);
        assert!((n - p.mass * p.gravity).abs() < 1e-12);
    }
}
