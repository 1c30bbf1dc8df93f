//! Outer-loop guidance: PD acceleration reference, vector-field path
//! following, the WLS-based INDI acceleration loop, sideslip correction and
//! the flight-phase state machine.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::indi::pitch_ratio;
use crate::model::{rot_x, rot_y, rot_z, EulerZxy, RigidBodyState};
use crate::wls::{solve_wls, AllocationError, AllocationProblem, AllocationStatus, DEFAULT_GAMMA};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdGains {
    pub kp: Vector3<f64>,
    pub kd: Vector3<f64>,
    /// Magnitude cap on the output, m/s^2.
    pub a_max: f64,
}

impl Default for PdGains {
    fn default() -> Self {
        Self {
            kp: Vector3::new(1.2, 1.2, 1.5),
            kd: Vector3::new(2.0, 2.0, 2.2),
            a_max: 6.0,
        }
    }
}

/// `kp * p_err + kd * v_err`, scaled down to `a_max` if longer.
pub fn pd_accel_reference(p_err: &Vector3<f64>, v_err: &Vector3<f64>, gains: &PdGains) -> Vector3<f64> {
    let a = gains.kp.component_mul(p_err) + gains.kd.component_mul(v_err);
    cap_norm(a, gains.a_max)
}

/// Like [`pd_accel_reference`], but when the cap binds the part of the raw
/// output orthogonal to the unit vector `yielding` is kept first and the part
/// along it gets whatever budget remains.
pub fn pd_accel_reference_yielding(
    p_err: &Vector3<f64>,
    v_err: &Vector3<f64>,
    gains: &PdGains,
    yielding: &Vector3<f64>,
) -> Vector3<f64> {
    let a = gains.kp.component_mul(p_err) + gains.kd.component_mul(v_err);
    if a.norm() <= gains.a_max {
        return a;
    }
    let along = yielding * a.dot(yielding);
    let across = cap_norm(a - along, gains.a_max);
    let n = across.norm();
    across + cap_norm(along, (gains.a_max * gains.a_max - n * n).max(0.0).sqrt())
}

fn cap_norm(v: Vector3<f64>, cap: f64) -> Vector3<f64> {
    let n = v.norm();
    if n > cap {
        v * (cap / n)
    } else {
        v
    }
}

/// Straight track between two NED points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Vector3<f64>,
    pub end: Vector3<f64>,
    /// Along-track speed, m/s.
    pub speed: f64,
}

impl Segment {
    pub fn new(start: Vector3<f64>, end: Vector3<f64>, speed: f64) -> Self {
        Self { start, end, speed }
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    pub fn direction(&self) -> Vector3<f64> {
        let d = self.end - self.start;
        let n = d.norm();
        if n > 0.0 {
            d / n
        } else {
            Vector3::zeros()
        }
    }

    /// Distance travelled along the track from `start`.
    pub fn along_track(&self, p: &Vector3<f64>) -> f64 {
        (p - self.start).dot(&self.direction())
    }

    /// Closest point on the infinite track line.
    pub fn closest_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.start + self.direction() * self.along_track(p)
    }

    /// Offset of `p` from the track, perpendicular to it.
    pub fn cross_track(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p - self.closest_point(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorField {
    /// Cross-track convergence gain, 1/s.
    pub k_ct: f64,
    /// Cap on the cross-track correction speed, m/s.
    pub lateral_cap: f64,
}

impl Default for VectorField {
    fn default() -> Self {
        Self {
            k_ct: 0.8,
            lateral_cap: 5.0,
        }
    }
}

impl VectorField {
    /// Correction velocity pulling `p` back onto the track.
    pub fn correction(&self, p: &Vector3<f64>, segment: &Segment) -> Vector3<f64> {
        -cap_norm(segment.cross_track(p) * self.k_ct, self.lateral_cap)
    }
}

/// Desired velocity: along-track at segment speed plus a saturated
/// perpendicular pull towards the track. The correction is orthogonal to the
/// track, so the along-track component never reverses.
pub fn vector_field_velocity(p: &Vector3<f64>, segment: &Segment, field: &VectorField) -> Vector3<f64> {
    segment.direction() * segment.speed + field.correction(p, segment)
}

/// Jacobian of the thrust specific force `R(yaw, roll, pitch) [0, 0, -T_Z]`
/// with respect to `[roll, pitch, T_Z]`.
pub fn thrust_accel_jacobian(attitude: &EulerZxy, specific_thrust: f64) -> Matrix3<f64> {
    let (sp, cp) = attitude.yaw.sin_cos();
    let (sf, cf) = attitude.roll.sin_cos();
    let (st, ct) = attitude.pitch.sin_cos();
    let t = specific_thrust;
    let z_axis = Vector3::new(cp * st + sp * sf * ct, sp * st - cp * sf * ct, cf * ct);
    let d_roll = Vector3::new(sp * cf * ct, -cp * cf * ct, -sf * ct);
    let d_pitch = Vector3::new(cp * ct - sp * sf * st, sp * ct + cp * sf * st, -cf * st);
    Matrix3::from_columns(&[-t * d_roll, -t * d_pitch, -z_axis])
}

/// NED acceleration model used by the outer loop.
pub fn thrust_accel(attitude: &EulerZxy, specific_thrust: f64, gravity: f64) -> Vector3<f64> {
    attitude.to_rotation() * Vector3::new(0.0, 0.0, -specific_thrust) + Vector3::new(0.0, 0.0, gravity)
}

/// Flat-plate wing force estimate for the outer loop. The angle of attack
/// comes from the air velocity seen by the airframe, `velocity - wind`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WingEstimate {
    pub air_density: f64,
    pub wing_area: f64,
    /// Lift coefficient is `lift_gain * sin(a) cos(a)`.
    pub lift_gain: f64,
    /// Drag coefficient is `drag_zero + drag_broadside * sin(a)^2`.
    pub drag_zero: f64,
    pub drag_broadside: f64,
    pub mass: f64,
    /// Current wind estimate, NED m/s.
    pub wind: Vector3<f64>,
}

impl WingEstimate {
    /// Body wing force per unit mass and its Jacobian with respect to the
    /// body air velocity. Only the wing-plane components `x`, `z` contribute.
    fn body_force(&self, air: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
        let q = 0.5 * self.air_density * self.wing_area / self.mass;
        let c = q * self.lift_gain;
        let (x, z) = (air.x, air.z);
        let v = (x * x + z * z).sqrt();
        if v < 1e-9 {
            return (Vector3::zeros(), Matrix3::zeros());
        }
        let g = x * z / v;
        let v3 = v * v * v;
        let mut f = Vector3::new(-c * g * z, 0.0, c * g * x);
        let mut j = Matrix3::zeros();
        j[(0, 0)] = -c * z.powi(4) / v3;
        j[(0, 2)] = -c * (g + x.powi(3) * z / v3);
        j[(2, 0)] = c * (g + x * z.powi(3) / v3);
        j[(2, 2)] = c * x.powi(4) / v3;

        // drag, -q (d0 V + d2 x^2 / V) (x, z)
        let (d0, d2) = (self.drag_zero, self.drag_broadside);
        let h = d0 * v + d2 * x * x / v;
        let hx = d0 * x / v + 2.0 * d2 * x / v - d2 * x.powi(3) / v3;
        let hz = d0 * z / v - d2 * x * x * z / v3;
        f.x -= q * h * x;
        f.z -= q * h * z;
        j[(0, 0)] -= q * (hx * x + h);
        j[(0, 2)] -= q * hz * x;
        j[(2, 0)] -= q * hx * z;
        j[(2, 2)] -= q * (hz * z + h);
        (f, j)
    }

    /// Wing acceleration (NED) for a vehicle moving at `velocity`, and its
    /// Jacobian with respect to `[roll, pitch, T_Z]` at fixed velocity.
    pub fn accel_and_jacobian(&self, attitude: &EulerZxy, velocity: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
        let rz = rot_z(attitude.yaw);
        let rx = rot_x(attitude.roll);
        let ry = rot_y(attitude.pitch);
        let r = rz * rx * ry;
        let air = velocity - self.wind;
        let (f, jf) = self.body_force(&(r.transpose() * air));
        let column = |dr: Matrix3<f64>| dr * f + r * jf * (dr.transpose() * air);
        let d_roll = rz * d_rot_x(attitude.roll) * ry;
        let d_pitch = rz * rx * d_rot_y(attitude.pitch);
        (
            r * f,
            Matrix3::from_columns(&[column(d_roll), column(d_pitch), Vector3::zeros()]),
        )
    }
}

fn d_rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn d_rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

/// Absolute limits and per-step limits on the outer-loop outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterBounds {
    pub roll: (f64, f64),
    pub pitch: (f64, f64),
    pub specific_thrust: (f64, f64),
    /// Largest increment per outer step in `[roll, pitch, T_Z]`.
    pub max_step: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterConfig {
    pub input_weights: Vector3<f64>,
    pub objective_weights: Vector3<f64>,
    pub gamma: f64,
    /// Adds the wing lift to the effectiveness when present.
    pub lift: Option<WingEstimate>,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            input_weights: Vector3::new(1.0, 1.0, 1.0),
            objective_weights: Vector3::new(100.0, 100.0, 1.0),
            gamma: DEFAULT_GAMMA,
            lift: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterIncrement {
    pub roll: f64,
    pub pitch: f64,
    pub specific_thrust: f64,
    pub status: AllocationStatus,
}

/// Outer objective weights at `pitch`: `hover` while upright, `forward` once
/// wing-borne, interpolated geometrically across the pitch-ratio band.
pub fn scheduled_objective_weights(pitch: f64, hover: &Vector3<f64>, forward: &Vector3<f64>) -> Vector3<f64> {
    let r = pitch_ratio(pitch);
    hover.zip_map(forward, |h, f| h.powf(1.0 - r) * f.powf(r))
}

/// Effectiveness of `[roll, pitch, T_Z]` on NED acceleration.
pub fn outer_effectiveness(state: &RigidBodyState, specific_thrust: f64, config: &OuterConfig) -> Matrix3<f64> {
    let mut j = thrust_accel_jacobian(&state.attitude, specific_thrust);
    if let Some(lift) = &config.lift {
        j += lift.accel_and_jacobian(&state.attitude, &state.velocity).1;
    }
    j
}

/// One outer INDI step: allocates the acceleration error over attitude and
/// thrust increments relative to the current attitude and measured `T_Z0`.
/// Objective weights apply along heading, across heading and down; with equal
/// horizontal weights this is the same as weighting north and east.
pub fn outer_indi_step(
    a_meas: &Vector3<f64>,
    a_ref: &Vector3<f64>,
    state: &RigidBodyState,
    specific_thrust: f64,
    bounds: &OuterBounds,
    config: &OuterConfig,
) -> Result<OuterIncrement, AllocationError> {
    // objective rows in the yaw-aligned frame: along heading, across, down
    let to_heading = rot_z(state.attitude.yaw).transpose();
    let j = to_heading * outer_effectiveness(state, specific_thrust, config);
    let objective = to_heading * (a_ref - a_meas);
    let current = [state.attitude.roll, state.attitude.pitch, specific_thrust];
    let limits = [bounds.roll, bounds.pitch, bounds.specific_thrust];
    let mut lower = DVector::zeros(3);
    let mut upper = DVector::zeros(3);
    for i in 0..3 {
        let step = bounds.max_step[i];
        lower[i] = (limits[i].0 - current[i]).clamp(-step, step);
        upper[i] = (limits[i].1 - current[i]).clamp(-step, step);
    }
    let problem = AllocationProblem {
        effectiveness: DMatrix::from_column_slice(3, 3, j.as_slice()),
        objective: DVector::from_column_slice(objective.as_slice()),
        u0: DVector::zeros(3),
        preferred: DVector::zeros(3),
        lower,
        upper,
        input_weights: DVector::from_column_slice(config.input_weights.as_slice()),
        objective_weights: DVector::from_column_slice(config.objective_weights.as_slice()),
        gamma: config.gamma,
        max_iterations: None,
    };
    let sol = solve_wls(&problem)?;
    Ok(OuterIncrement {
        roll: sol.u[0],
        pitch: sol.u[1],
        specific_thrust: sol.u[2],
        status: sol.status,
    })
}

/// Yaw-rate command turning the nose into the relative wind.
///
/// `relative_wind_body` is the wind seen by the airframe (`wind - velocity`)
/// in body axes; its `y` component is the sideslip signal.
pub fn sideslip_correction(relative_wind_body: &Vector3<f64>, airspeed: f64, gain: f64, min_airspeed: f64) -> f64 {
    if airspeed < min_airspeed {
        0.0
    } else {
        -gain * relative_wind_body.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlightPhase {
    GroundedPivotUp,
    Hover,
    TransitionToForward,
    Forward,
    TransitionToHover,
    PivotDown,
    Landed,
}

impl FlightPhase {
    pub const ALL: [FlightPhase; 7] = [
        FlightPhase::GroundedPivotUp,
        FlightPhase::Hover,
        FlightPhase::TransitionToForward,
        FlightPhase::Forward,
        FlightPhase::TransitionToHover,
        FlightPhase::PivotDown,
        FlightPhase::Landed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FlightPhase::GroundedPivotUp => "grounded_pivot_up",
            FlightPhase::Hover => "hover",
            FlightPhase::TransitionToForward => "transition_to_forward",
            FlightPhase::Forward => "forward",
            FlightPhase::TransitionToHover => "transition_to_hover",
            FlightPhase::PivotDown => "pivot_down",
            FlightPhase::Landed => "landed",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Phases in which the airframe may rest on its tail.
    pub fn is_ground(self) -> bool {
        matches!(
            self,
            FlightPhase::GroundedPivotUp | FlightPhase::PivotDown | FlightPhase::Landed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseThresholds {
    /// Upright / flat pitch gate, rad.
    pub pitch_gate: f64,
    /// Pitch-rate gate, rad/s.
    pub rate_gate: f64,
    /// Airspeed that completes the forward transition, m/s.
    pub transition_speed: f64,
    /// Altitude that starts the pivot landing, m.
    pub landing_altitude: f64,
    /// Ground speed under which the airframe counts as at rest, m/s.
    pub rest_speed: f64,
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        Self {
            pitch_gate: 5.4f64.to_radians(),
            rate_gate: 0.1,
            transition_speed: 12.0,
            landing_altitude: 0.15,
            rest_speed: 0.1,
        }
    }
}

/// Signals consumed by [`flight_phase_update`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseInputs {
    pub pitch: f64,
    pub pitch_rate: f64,
    pub altitude: f64,
    pub airspeed: f64,
    pub ground_speed: f64,
    pub contact: bool,
    /// Mission asks to leave hover for forward flight.
    pub start_transition: bool,
    /// Mission asks to slow down for the next stop.
    pub begin_deceleration: bool,
    /// Arrived at an intermediate stop.
    pub arrived_stop: bool,
    /// Final descent for landing is in progress.
    pub landing: bool,
}

pub fn flight_phase_update(phase: FlightPhase, inputs: &PhaseInputs, th: &PhaseThresholds) -> FlightPhase {
    use FlightPhase::*;
    let rate_ok = inputs.pitch_rate.abs() <= th.rate_gate;
    let low = inputs.altitude < th.landing_altitude;
    match phase {
        GroundedPivotUp if inputs.pitch.abs() <= th.pitch_gate && rate_ok => Hover,
        Hover if inputs.landing && low => PivotDown,
        Hover if inputs.start_transition => TransitionToForward,
        TransitionToForward if inputs.airspeed >= th.transition_speed => Forward,
        Forward if inputs.begin_deceleration => TransitionToHover,
        TransitionToHover if low => PivotDown,
        TransitionToHover if inputs.arrived_stop => Hover,
        PivotDown
            if (inputs.pitch + std::f64::consts::FRAC_PI_2).abs() <= th.pitch_gate
                && rate_ok
                && inputs.contact
                && inputs.ground_speed <= th.rest_speed =>
        {
            Landed
        }
        p => p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pd_examples() {
        let g = PdGains::default();
        assert_eq!(
            pd_accel_reference(&Vector3::zeros(), &Vector3::zeros(), &g),
            Vector3::zeros()
        );
        let a = pd_accel_reference(&Vector3::new(1.0, 0.0, 0.0), &Vector3::zeros(), &g);
        assert!((a - Vector3::new(1.2, 0.0, 0.0)).norm() < 1e-15);
        let a = pd_accel_reference(&Vector3::new(100.0, -50.0, 20.0), &Vector3::new(3.0, 0.0, 0.0), &g);
        assert!((a.norm() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn vector_field_examples() {
        let seg = Segment::new(Vector3::zeros(), Vector3::new(200.0, 0.0, 0.0), 16.0);
        let f = VectorField::default();
        let v = vector_field_velocity(&Vector3::new(50.0, 0.0, 0.0), &seg, &f);
        assert_eq!(v, Vector3::new(16.0, 0.0, 0.0));
        // 5 m to the left (west) of a northbound track
        let v = vector_field_velocity(&Vector3::new(50.0, -5.0, 0.0), &seg, &f);
        assert!((v.y - (0.8f64 * 5.0).min(5.0)).abs() < 1e-12);
        assert_eq!(v.x, 16.0);
        let far = vector_field_velocity(&Vector3::new(50.0, -40.0, 0.0), &seg, &f);
        assert!((far.y - 5.0).abs() < 1e-12);
        let mirrored = vector_field_velocity(&Vector3::new(50.0, 5.0, 0.0), &seg, &f);
        assert_eq!(mirrored.y, -v.y);
    }

    #[test]
    fn sideslip_examples() {
        assert_eq!(sideslip_correction(&Vector3::zeros(), 10.0, 0.25, 4.0), 0.0);
        assert_eq!(sideslip_correction(&Vector3::new(0.0, 2.0, 0.0), 10.0, 0.25, 4.0), -0.5);
        assert_eq!(sideslip_correction(&Vector3::new(0.0, 2.0, 0.0), 3.0, 0.25, 4.0), 0.0);
    }

    #[test]
    fn outer_step_zero_error_is_zero() {
        let s = RigidBodyState::default();
        let b = OuterBounds {
            roll: (-0.6, 0.6),
            pitch: (-0.6, 0.6),
            specific_thrust: (0.0, 30.0),
            max_step: Vector3::new(0.5, 0.5, 10.0),
        };
        let a = Vector3::new(0.3, -0.1, 0.2);
        let inc = outer_indi_step(&a, &a, &s, 9.81, &b, &OuterConfig::default()).unwrap();
        assert_eq!((inc.roll, inc.pitch, inc.specific_thrust), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hover_north_demand_pitches_forward() {
        let s = RigidBodyState::default();
        let b = OuterBounds {
            roll: (-0.6, 0.6),
            pitch: (-0.6, 0.6),
            specific_thrust: (0.0, 30.0),
            max_step: Vector3::new(0.5, 0.5, 10.0),
        };
        let inc = outer_indi_step(
            &Vector3::zeros(),
            &Vector3::new(1.0, 0.0, 0.0),
            &s,
            9.81,
            &b,
            &OuterConfig::default(),
        )
        .unwrap();
        assert!(inc.pitch < 0.0);
        assert!(inc.pitch.abs() > 10.0 * inc.roll.abs());
        assert!(inc.pitch.abs() > 10.0 * inc.specific_thrust.abs() / 9.81);
        assert!((inc.pitch + 1.0 / 9.81).abs() < 1e-3);
    }

    #[test]
    fn phase_gates() {
        let th = PhaseThresholds::default();
        let mut i = PhaseInputs {
            pitch: -3f64.to_radians(),
            pitch_rate: 0.05,
            contact: true,
            ..PhaseInputs::default()
        };
        assert_eq!(
            flight_phase_update(FlightPhase::GroundedPivotUp, &i, &th),
            FlightPhase::Hover
        );
        i.pitch_rate = 0.2;
        assert_eq!(
            flight_phase_update(FlightPhase::GroundedPivotUp, &i, &th),
            FlightPhase::GroundedPivotUp
        );

        let i = PhaseInputs {
            altitude: 0.14,
            landing: true,
            ..PhaseInputs::default()
        };
        assert_eq!(
            flight_phase_update(FlightPhase::TransitionToHover, &i, &th),
            FlightPhase::PivotDown
        );
        // upright on the tail right after takeoff is below the landing height
        let i = PhaseInputs {
            altitude: 0.10,
            ..PhaseInputs::default()
        };
        assert_eq!(flight_phase_update(FlightPhase::Hover, &i, &th), FlightPhase::Hover);
    }

    #[test]
    fn phase_codes_round_trip() {
        for p in FlightPhase::ALL {
            assert_eq!(FlightPhase::from_code(p.code()), Some(p));
            assert_eq!(FlightPhase::parse(p.name()), Some(p));
        }
        assert_eq!(FlightPhase::from_code(7), None);
    }

    #[test]
    fn wing_jacobian_matches_differences() {
        let lift = WingEstimate {
            air_density: 1.225,
            wing_area: 0.071,
            lift_gain: 3.6,
            drag_zero: 0.05,
            drag_broadside: 1.2,
            mass: 0.49,
            wind: Vector3::new(0.0, 6.7, 0.0),
        };
        let v = Vector3::new(14.0, 2.0, 1.5);
        for (yaw, roll, pitch) in [(0.3, 0.2, -1.4), (-2.0, -0.5, -1.9), (1.0, 0.1, -0.6)] {
            let att = EulerZxy::new(yaw, roll, pitch);
            let (_, j) = lift.accel_and_jacobian(&att, &v);
            let h = 1e-6;
            for (k, d) in [
                (0, EulerZxy::new(yaw, roll + h, pitch)),
                (1, EulerZxy::new(yaw, roll, pitch + h)),
            ] {
                let m = match k {
                    0 => EulerZxy::new(yaw, roll - h, pitch),
                    _ => EulerZxy::new(yaw, roll, pitch - h),
                };
                let fd = (lift.accel_and_jacobian(&d, &v).0 - lift.accel_and_jacobian(&m, &v).0) / (2.0 * h);
                assert!(
                    (fd - j.column(k)).norm() < 1e-6 * (1.0 + fd.norm()),
                    "{k}: {fd:?} vs {:?}",
                    j.column(k)
                );
            }
        }
    }

    #[test]
    fn level_flight_lift_points_up() {
        let lift = WingEstimate {
            air_density: 1.225,
            wing_area: 0.071,
            lift_gain: 3.6,
            drag_zero: 0.0,
            drag_broadside: 1.2,
            mass: 0.49,
            wind: Vector3::zeros(),
        };
        let (a, _) = lift.accel_and_jacobian(
            &EulerZxy::new(0.0, 0.0, (-85f64).to_radians()),
            &Vector3::new(15.0, 0.0, 0.0),
        );
        assert!(a.z < 0.0 && a.x.abs() < 0.1 * a.z.abs());
        let (a, _) = lift.accel_and_jacobian(
            &EulerZxy::new(0.0, 0.0, (-95f64).to_radians()),
            &Vector3::new(15.0, 0.0, 15.0 * 5f64.to_radians().tan()),
        );
        assert!(a.norm() < 1e-2, "zero angle of attack in a 5 deg descent, got {a:?}");
    }

    #[test]
    fn objective_weights_follow_pitch_band() {
        let h = Vector3::new(100.0, 100.0, 1.0);
        let f = Vector3::new(1.0, 1.0, 10.0);
        assert_eq!(scheduled_objective_weights(0.0, &h, &f), h);
        assert_eq!(scheduled_objective_weights(-1.6, &h, &f), f);
        let mid = scheduled_objective_weights(-std::f64::consts::FRAC_PI_4, &h, &f);
        assert!((mid - Vector3::new(10.0, 10.0, 10f64.sqrt())).norm() < 1e-12);
    }
}
