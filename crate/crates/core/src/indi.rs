//! Inner-loop INDI attitude and thrust control.
//!
//! The effectiveness matrix maps actuator increments
//! `[tilt_l, tilt_r, thrust_l, thrust_r, elevon_l, elevon_r]` to increments of
//! `[p_dot, q_dot, r_dot, T_Z]`. Rotor columns are the partial derivatives of
//! the tilt moment map and the specific thrust at the current actuator state;
//! elevon columns use the pitch/airspeed scheduled constants.

use std::f64::consts::FRAC_PI_6;

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, SMatrix, Vector3, Vector4};

use crate::actuator::{
    ActuatorBank, ActuatorVector, ELEVON_L, ELEVON_R, N_ACTUATORS, THRUST_L, THRUST_R, TILT_L, TILT_R,
};
use crate::model::{RigidBodyState, VehicleParams};
use crate::wls::{solve_wls, Allocation, AllocationError, AllocationProblem, AllocationStatus, DEFAULT_GAMMA};

pub type EffectivenessMatrix = SMatrix<f64, 4, N_ACTUATORS>;

/// Airspeed above which elevon effectiveness is scheduled on dynamic pressure.
pub const SCHEDULE_SPEED: f64 = 12.0;
/// Weight that effectively disables an actuator group.
pub const DISABLED_WEIGHT: f64 = 1e5;

/// 0 in vertical flight, 1 in forward flight, linear in between.
pub fn pitch_ratio(pitch: f64) -> f64 {
    ((-FRAC_PI_6 - pitch) / FRAC_PI_6).clamp(0.0, 1.0)
}

/// Elevon pitch acceleration per radian of symmetric deflection.
pub fn elevon_pitch_effectiveness(pitch: f64, airspeed: f64) -> f64 {
    if airspeed < SCHEDULE_SPEED {
        let r = pitch_ratio(pitch);
        13.10 * (1.0 - r) + 21.83 * r
    } else {
        13.10 + 0.1746 * airspeed * airspeed
    }
}

/// Elevon yaw acceleration per radian of differential deflection.
pub fn elevon_yaw_effectiveness(pitch: f64, airspeed: f64) -> f64 {
    if airspeed < SCHEDULE_SPEED {
        let r = pitch_ratio(pitch);
        15.72 * (1.0 - r) + 26.19 * r
    } else {
        15.72 + 0.0873 * airspeed * airspeed
    }
}

/// Builds the effectiveness matrix at actuator state `u0`.
pub fn build_effectiveness(
    u0: &ActuatorVector,
    pitch: f64,
    airspeed: f64,
    params: &VehicleParams,
) -> EffectivenessMatrix {
    let inv = params.inertia.map(|i| 1.0 / i);
    let (b, l, m) = (params.arm_lateral, params.arm_longitudinal, params.mass);
    let (tl, tr) = (u0[THRUST_L], u0[THRUST_R]);
    let (sl, cl) = u0[TILT_L].sin_cos();
    let (sr, cr) = u0[TILT_R].sin_cos();

    let mut g = EffectivenessMatrix::zeros();
    let mut set = |col: usize, moment: Vector3<f64>, thrust: f64| {
        let acc = moment.component_mul(&inv);
        g.fixed_view_mut::<3, 1>(0, col).copy_from(&acc);
        g[(3, col)] = thrust;
    };
    set(
        TILT_L,
        Vector3::new(-b * tl * sl, l * tl * cl, -b * tl * cl),
        -tl * sl / m,
    );
    set(
        TILT_R,
        Vector3::new(b * tr * sr, l * tr * cr, b * tr * cr),
        -tr * sr / m,
    );
    set(THRUST_L, Vector3::new(b * cl, l * sl, -b * sl), cl / m);
    set(THRUST_R, Vector3::new(-b * cr, l * sr, b * sr), cr / m);

    let ge25 = elevon_pitch_effectiveness(pitch, airspeed);
    let ge35 = elevon_yaw_effectiveness(pitch, airspeed);
    g[(1, ELEVON_L)] = ge25;
    g[(1, ELEVON_R)] = ge25;
    g[(2, ELEVON_L)] = ge35;
    g[(2, ELEVON_R)] = -ge35;
    g
}

/// Pitch band and bounds of the tilt/elevon weight blend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSchedule {
    /// Pitch at which the blend starts (vertical side), rad.
    pub vertical_pitch: f64,
    /// Pitch at which the blend ends (forward side), rad.
    pub forward_pitch: f64,
    pub min_weight: f64,
    pub max_weight: f64,
    pub motor_weight: f64,
}

impl Default for WeightSchedule {
    fn default() -> Self {
        Self {
            vertical_pitch: -FRAC_PI_6,
            forward_pitch: -2.0 * FRAC_PI_6,
            min_weight: 0.001,
            max_weight: 1.0,
            motor_weight: 0.001,
        }
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

impl WeightSchedule {
    pub fn weights(&self, pitch: f64) -> ActuatorVector {
        let span = self.forward_pitch - self.vertical_pitch;
        let s = smoothstep((pitch - self.vertical_pitch) / span);
        let range = self.max_weight - self.min_weight;
        let tilt = (self.min_weight + range * s).clamp(self.min_weight, self.max_weight);
        let elevon = (self.min_weight + range * (1.0 - s)).clamp(self.min_weight, self.max_weight);
        ActuatorVector::from_column_slice(&[tilt, tilt, self.motor_weight, self.motor_weight, elevon, elevon])
    }
}

/// Actuator weights with the default schedule.
pub fn actuator_weights(pitch: f64) -> ActuatorVector {
    WeightSchedule::default().weights(pitch)
}

/// Which actuator groups the allocator may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlMode {
    /// Tilt rotors and elevons.
    #[default]
    Tre,
    /// Elevons only; tilts held at zero.
    ETailsitter,
    /// Tilt rotors only; elevons held at zero.
    TrTailsitter,
}

impl ControlMode {
    pub fn name(self) -> &'static str {
        match self {
            ControlMode::Tre => "tre",
            ControlMode::ETailsitter => "e_tailsitter",
            ControlMode::TrTailsitter => "tr_tailsitter",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tre" => Some(ControlMode::Tre),
            "e_tailsitter" => Some(ControlMode::ETailsitter),
            "tr_tailsitter" => Some(ControlMode::TrTailsitter),
            _ => None,
        }
    }

    /// Actuators held fixed at zero in this mode.
    pub fn pinned(self) -> &'static [usize] {
        match self {
            ControlMode::Tre => &[],
            ControlMode::ETailsitter => &[TILT_L, TILT_R],
            ControlMode::TrTailsitter => &[ELEVON_L, ELEVON_R],
        }
    }

    /// Applies the mode's weight overrides.
    pub fn override_weights(self, w: &mut ActuatorVector) {
        let (off, on) = match self {
            ControlMode::Tre => return,
            ControlMode::ETailsitter => ([TILT_L, TILT_R], [ELEVON_L, ELEVON_R]),
            ControlMode::TrTailsitter => ([ELEVON_L, ELEVON_R], [TILT_L, TILT_R]),
        };
        for i in off {
            w[i] = DISABLED_WEIGHT;
        }
        for i in on {
            w[i] = 0.0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeGains {
    pub attitude: Vector3<f64>,
    pub rate: Vector3<f64>,
}

impl Default for AttitudeGains {
    fn default() -> Self {
        Self {
            attitude: Vector3::new(8.0, 8.0, 5.0),
            rate: Vector3::new(20.0, 20.0, 10.0),
        }
    }
}

/// Attitude and thrust reference handed down by guidance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeObjective {
    /// Reference body-to-NED rotation.
    pub rotation: Matrix3<f64>,
    /// Body-rate feedforward, rad/s.
    pub rate_feedforward: Vector3<f64>,
    /// Specific thrust reference, m/s^2.
    pub specific_thrust: f64,
}

/// Body-frame rotation vector taking the current attitude to the reference.
pub fn attitude_error(current: &Matrix3<f64>, reference: &Matrix3<f64>) -> Vector3<f64> {
    let r = current.transpose() * reference;
    let v = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
    let c = (r.trace() - 1.0) * 0.5;
    let s = v.norm();
    if s < 1e-9 {
        // identity, or a half turn where the skew part carries no axis
        return if c > 0.0 {
            v
        } else {
            Rotation3::from_matrix_unchecked(r).scaled_axis()
        };
    }
    v * (s.atan2(c) / s)
}

/// Linear attitude/rate cascade producing the pseudo-control.
pub fn attitude_pseudo_control(
    state: &RigidBodyState,
    objective: &AttitudeObjective,
    gains: &AttitudeGains,
) -> Vector4<f64> {
    let err = attitude_error(&state.rotation, &objective.rotation);
    let rate_ref = gains.attitude.component_mul(&err) + objective.rate_feedforward;
    let acc = gains.rate.component_mul(&(rate_ref - state.rates));
    Vector4::new(acc.x, acc.y, acc.z, objective.specific_thrust)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndiConfig {
    pub gains: AttitudeGains,
    pub objective_weights: Vector4<f64>,
    pub gamma: f64,
    pub schedule: WeightSchedule,
    pub mode: ControlMode,
}

impl Default for IndiConfig {
    fn default() -> Self {
        Self {
            gains: AttitudeGains::default(),
            objective_weights: Vector4::new(10.0, 10.0, 0.1, 1.0),
            gamma: DEFAULT_GAMMA,
            schedule: WeightSchedule::default(),
            mode: ControlMode::Tre,
        }
    }
}

/// Measured angular acceleration and specific thrust at the current actuator state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndiMeasurement {
    pub angular_accel: Vector3<f64>,
    pub specific_thrust: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndiOutput {
    pub commands: ActuatorVector,
    pub pseudo_control: Vector4<f64>,
    pub effectiveness: EffectivenessMatrix,
    pub iterations: usize,
    pub status: AllocationStatus,
}

/// Preferred actuator positions: centred servos, motors at their current mean.
pub fn preferred_inputs(u0: &ActuatorVector) -> ActuatorVector {
    let mean = 0.5 * (u0[THRUST_L] + u0[THRUST_R]);
    let mut up = ActuatorVector::zeros();
    up[THRUST_L] = mean;
    up[THRUST_R] = mean;
    up
}

/// Allocates an absolute pseudo-control `nu` (already shifted into absolute
/// actuator coordinates) over the bank's current bounds.
pub fn allocate(
    g: &EffectivenessMatrix,
    nu: &Vector4<f64>,
    bank: &ActuatorBank,
    preferred: &ActuatorVector,
    weights: &ActuatorVector,
    config: &IndiConfig,
) -> Result<Allocation, AllocationError> {
    let mut lower = bank.lower();
    let mut upper = bank.upper();
    for &i in config.mode.pinned() {
        lower[i] = 0.0;
        upper[i] = 0.0;
    }
    let u0 = bank.states();
    let problem = AllocationProblem {
        effectiveness: DMatrix::from_column_slice(4, N_ACTUATORS, g.as_slice()),
        objective: DVector::from_column_slice(nu.as_slice()),
        u0: DVector::from_column_slice(u0.as_slice()),
        preferred: DVector::from_column_slice(preferred.as_slice()),
        lower: DVector::from_column_slice(lower.as_slice()),
        upper: DVector::from_column_slice(upper.as_slice()),
        input_weights: DVector::from_column_slice(weights.as_slice()),
        objective_weights: DVector::from_column_slice(config.objective_weights.as_slice()),
        gamma: config.gamma,
        max_iterations: None,
    };
    solve_wls(&problem)
}

/// One INDI step: pseudo-control, incremental shift, allocation.
pub fn indi_attitude_step(
    meas: &IndiMeasurement,
    bank: &ActuatorBank,
    state: &RigidBodyState,
    objective: &AttitudeObjective,
    params: &VehicleParams,
    config: &IndiConfig,
) -> Result<IndiOutput, AllocationError> {
    let nu = attitude_pseudo_control(state, objective, &config.gains);
    indi_allocate(meas, bank, state.attitude.pitch, state.airspeed, &nu, params, config)
}

/// Allocation half of [`indi_attitude_step`] for a given pseudo-control.
pub fn indi_allocate(
    meas: &IndiMeasurement,
    bank: &ActuatorBank,
    pitch: f64,
    airspeed: f64,
    nu: &Vector4<f64>,
    params: &VehicleParams,
    config: &IndiConfig,
) -> Result<IndiOutput, AllocationError> {
    let u0 = bank.states();
    let g = build_effectiveness(&u0, pitch, airspeed, params);
    let measured = Vector4::new(
        meas.angular_accel.x,
        meas.angular_accel.y,
        meas.angular_accel.z,
        meas.specific_thrust,
    );
    let target = nu - measured + g * u0;
    let mut weights = config.schedule.weights(pitch);
    config.mode.override_weights(&mut weights);
    let sol = allocate(&g, &target, bank, &preferred_inputs(&u0), &weights, config)?;
    Ok(IndiOutput {
        commands: ActuatorVector::from_column_slice(sol.u.as_slice()),
        pseudo_control: *nu,
        effectiveness: g,
        iterations: sol.iterations,
        status: sol.status,
    })
}
