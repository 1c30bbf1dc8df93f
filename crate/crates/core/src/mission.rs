//! Mission manager: turns the waypoint list into position, velocity and
//! heading references, and feeds the flight-phase machine.
//!
//! Short legs are flown in hover behind a carrot that moves at the climb,
//! descent or hover speed. Long legs are flown in forward flight on a vector
//! field. Forward flight ends with a deceleration towards the next stop, the
//! final waypoint, or any waypoint followed by a hover leg.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;

use crate::guidance::{
    flight_phase_update, sideslip_correction, vector_field_velocity, FlightPhase, OuterBounds, PhaseInputs, Segment,
};
use crate::model::{wrap_angle, RigidBodyState, VehicleParams};
use crate::pivot::PitchRamp;
use crate::scenario::{GuidanceConfig, MissionConfig, StartMode};

/// Position tolerance for arriving at a hover point, m.
pub const ARRIVAL_RADIUS: f64 = 1.0;
/// Speed below which the vehicle counts as stopped at a hover point, m/s.
pub const ARRIVAL_SPEED: f64 = 0.5;
/// Heading error below which a transition may start, rad.
pub const HEADING_TOLERANCE: f64 = 5.0 * std::f64::consts::PI / 180.0;
/// Largest heading-rate command in forward flight, rad/s.
const MAX_YAW_RATE: f64 = 1.0;
/// Largest lead of the heading reference over the actual heading, rad.
const MAX_YAW_LEAD: f64 = 0.3;
/// Largest attitude and specific-thrust increments per outer step.
const OUTER_STEP: Vector3<f64> = Vector3::new(0.2, 0.2, 3.0);
/// Usable fraction of the total rotor thrust.
const THRUST_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub start: Vector3<f64>,
    pub end: Vector3<f64>,
    /// Flown in forward flight.
    pub forward: bool,
    /// The vehicle must come to a hover at `end`.
    pub stop: bool,
}

impl Leg {
    pub fn bearing(&self) -> f64 {
        let d = self.end - self.start;
        d.y.atan2(d.x)
    }

    pub fn horizontal_length(&self) -> f64 {
        (self.end - self.start).xy().norm()
    }
}

/// CG position at the start of the mission.
pub fn start_position(mission: &MissionConfig, params: &VehicleParams) -> Vector3<f64> {
    match mission.start {
        StartMode::Ground => mission.home - Vector3::new(0.0, 0.0, params.pivot_arm_cg),
        StartMode::Hover => mission.home,
    }
}

/// Legs from the start position through every waypoint.
pub fn plan_legs(start: Vector3<f64>, mission: &MissionConfig) -> Vec<Leg> {
    let mut legs: Vec<Leg> = Vec::with_capacity(mission.waypoints.len());
    let mut from = start;
    for (i, &to) in mission.waypoints.iter().enumerate() {
        let forward = (to - from).xy().norm() >= mission.forward_min_length;
        legs.push(Leg {
            start: from,
            end: to,
            forward,
            stop: mission.stops.contains(&i),
        });
        from = to;
    }
    let n = legs.len();
    for i in 0..n {
        let next_is_hover = i + 1 < n && !legs[i + 1].forward;
        if i + 1 == n || next_is_hover {
            legs[i].stop = true;
        }
    }
    legs
}

/// Ground speed along `direction` that gives `airspeed` through `wind`.
pub fn ground_speed_for_airspeed(direction: &Vector3<f64>, airspeed: f64, wind: &Vector3<f64>) -> f64 {
    let d = Vector3::new(direction.x, direction.y, 0.0).normalize();
    let w = Vector3::new(wind.x, wind.y, 0.0);
    let dw = d.dot(&w);
    let disc = dw * dw - w.norm_squared() + airspeed * airspeed;
    if disc <= 0.0 {
        // the wind is stronger than the airspeed; fly at the airspeed over ground
        return airspeed;
    }
    (dw + disc.sqrt()).max(1.0)
}

/// What the inner loop should run this step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    /// Outer acceleration loop plus INDI attitude control.
    Flight,
    /// Pivot controller tracking `ramp`, started at `since`.
    Pivot { ramp: PitchRamp, since: f64 },
    /// Everything off.
    Idle,
}

/// How the outer loop weighs and caps its acceleration objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shaping {
    /// Objective weights scheduled on pitch between hover and forward flight.
    Scheduled,
    /// As `Scheduled`, and a capped acceleration reference serves turning
    /// before speed changes.
    Turning,
    /// Braking weights while slowing down for a stop.
    Braking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub yaw: f64,
    /// Heading-rate feedforward, rad/s.
    pub yaw_rate: f64,
    pub bounds: OuterBounds,
    pub shaping: Shaping,
    pub command: Command,
}

/// What the mission manager sees each step.
#[derive(Debug, Clone, Copy)]
pub struct Sensed<'a> {
    pub state: &'a RigidBodyState,
    pub accel: Vector3<f64>,
    pub wind: Vector3<f64>,
    pub contact: bool,
}

#[derive(Debug, Clone)]
pub struct Mission {
    config: GuidanceConfig,
    mission: MissionConfig,
    legs: Vec<Leg>,
    mean_wind: Vector3<f64>,
    pivot_rate: f64,
    thrust_limit: f64,
    ground_pitch: f64,
    phase: FlightPhase,
    phase_since: f64,
    leg: usize,
    leg_since: f64,
    hold_since: Option<f64>,
    yaw_ref: f64,
    ground_speed: f64,
    /// Start of the along-track speed ramp.
    speed_ramp_since: f64,
    landing_since: Option<(f64, Vector3<f64>)>,
    pivot: Option<(f64, PitchRamp)>,
    start_ready: bool,
    decel_ready: bool,
    stop_ready: bool,
    landed_at: Option<f64>,
    gravity: f64,
}

impl Mission {
    pub fn new(
        config: &GuidanceConfig,
        mission: &MissionConfig,
        params: &VehicleParams,
        mean_wind: Vector3<f64>,
        pivot_rate: f64,
        initial: &RigidBodyState,
    ) -> Self {
        let legs = plan_legs(start_position(mission, params), mission);
        let phase = match mission.start {
            StartMode::Ground => FlightPhase::GroundedPivotUp,
            StartMode::Hover => FlightPhase::Hover,
        };
        Self {
            config: config.clone(),
            mission: mission.clone(),
            legs,
            mean_wind,
            pivot_rate,
            thrust_limit: THRUST_MARGIN * 2.0 * params.thrust_max / params.mass,
            ground_pitch: initial.attitude.pitch,
            phase,
            phase_since: 0.0,
            leg: 0,
            leg_since: 0.0,
            hold_since: None,
            yaw_ref: initial.attitude.yaw,
            ground_speed: mission.cruise_speed,
            speed_ramp_since: 0.0,
            landing_since: None,
            pivot: None,
            start_ready: false,
            decel_ready: false,
            stop_ready: false,
            landed_at: None,
            gravity: params.gravity,
        }
    }

    pub fn phase(&self) -> FlightPhase {
        self.phase
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    /// Time the vehicle came to rest on the ground, if it has.
    pub fn landed_at(&self) -> Option<f64> {
        self.landed_at
    }

    /// Advances the phase machine and returns this step's reference.
    pub fn update(&mut self, t: f64, dt: f64, sensed: &Sensed) -> Reference {
        let s = sensed.state;
        let inputs = PhaseInputs {
            pitch: s.attitude.pitch,
            pitch_rate: s.rates.y,
            altitude: s.altitude(),
            airspeed: s.airspeed,
            ground_speed: s.velocity.norm(),
            contact: sensed.contact,
            start_transition: self.start_ready,
            begin_deceleration: self.decel_ready,
            arrived_stop: self.stop_ready,
            landing: self.landing_since.is_some(),
        };
        let next = flight_phase_update(self.phase, &inputs, &self.config.thresholds);
        if next != self.phase {
            self.enter(next, t, s);
        }
        self.start_ready = false;
        self.decel_ready = false;
        self.stop_ready = false;

        match self.phase {
            FlightPhase::GroundedPivotUp => {
                let ramp = PitchRamp {
                    start: self.ground_pitch,
                    end: 0.0,
                    rate: self.pivot_rate,
                };
                self.pivot_reference(s, ramp, 0.0)
            }
            FlightPhase::Hover => self.hover(t, dt, s),
            FlightPhase::TransitionToForward | FlightPhase::Forward => self.forward(t, dt, sensed),
            FlightPhase::TransitionToHover => self.decelerate(t, sensed),
            FlightPhase::PivotDown => {
                if sensed.contact {
                    let (since, ramp) = *self.pivot.get_or_insert((
                        t,
                        PitchRamp {
                            start: s.attitude.pitch,
                            end: -FRAC_PI_2,
                            rate: self.pivot_rate,
                        },
                    ));
                    self.pivot_reference(s, ramp, since)
                } else {
                    let (p, v) = self.landing_carrot(t);
                    self.flight_reference(p, v, 0.0, self.hover_bounds())
                }
            }
            FlightPhase::Landed => Reference {
                command: Command::Idle,
                ..self.flight_reference(s.position, Vector3::zeros(), 0.0, self.hover_bounds())
            },
        }
    }

    fn enter(&mut self, next: FlightPhase, t: f64, s: &RigidBodyState) {
        let from = self.phase;
        self.phase = next;
        self.phase_since = t;
        match next {
            FlightPhase::Hover => {
                self.yaw_ref = s.attitude.yaw;
                if from == FlightPhase::TransitionToHover {
                    self.start_leg(self.leg + 1, t);
                } else {
                    self.start_leg(self.leg, t);
                }
            }
            FlightPhase::TransitionToForward => {
                self.ground_speed = self.leg_ground_speed(self.leg);
                self.speed_ramp_since = t;
            }
            FlightPhase::TransitionToHover => {
                self.hold_since = None;
            }
            FlightPhase::Landed => self.landed_at = Some(t),
            _ => {}
        }
    }

    fn start_leg(&mut self, leg: usize, t: f64) {
        self.leg = leg;
        self.leg_since = t;
        self.hold_since = None;
    }

    fn leg_ground_speed(&self, leg: usize) -> f64 {
        let l = &self.legs[leg];
        ground_speed_for_airspeed(&(l.end - l.start), self.mission.cruise_speed, &self.mean_wind)
    }

    fn flight_reference(&self, p: Vector3<f64>, v: Vector3<f64>, yaw_rate: f64, bounds: OuterBounds) -> Reference {
        Reference {
            position: p,
            velocity: v,
            yaw: self.yaw_ref,
            yaw_rate,
            bounds,
            shaping: Shaping::Scheduled,
            command: Command::Flight,
        }
    }

    fn pivot_reference(&self, s: &RigidBodyState, ramp: PitchRamp, since: f64) -> Reference {
        Reference {
            command: Command::Pivot { ramp, since },
            ..self.flight_reference(s.position, Vector3::zeros(), 0.0, self.hover_bounds())
        }
    }

    fn bounds(&self, roll_deg: f64, pitch: (f64, f64), min_thrust: f64) -> OuterBounds {
        let roll = roll_deg.to_radians();
        OuterBounds {
            roll: (-roll, roll),
            pitch,
            specific_thrust: (min_thrust, self.thrust_limit),
            max_step: OUTER_STEP,
        }
    }

    fn hover_bounds(&self) -> OuterBounds {
        let pitch = self.config.hover_pitch_limit_deg.to_radians();
        self.bounds(self.config.hover_roll_limit_deg, (-pitch, pitch), 0.2 * self.gravity)
    }

    fn ramp_since(&self, t: f64) -> f64 {
        self.config.transition_rate_deg_s.to_radians() * (t - self.phase_since)
    }

    /// Carrot along a hover leg: position and velocity.
    fn carrot(&self, leg: &Leg, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let d = leg.end - leg.start;
        let vertical_rate = if d.z < 0.0 {
            self.mission.climb_rate
        } else {
            self.mission.descent_rate
        };
        let duration = (d.xy().norm() / self.mission.hover_speed).max(d.z.abs() / vertical_rate);
        if duration <= 0.0 {
            return (leg.end, Vector3::zeros());
        }
        let f = (t - self.leg_since) / duration;
        if f >= 1.0 {
            (leg.end, Vector3::zeros())
        } else {
            (leg.start + d * f.max(0.0), d / duration)
        }
    }

    fn landing_carrot(&mut self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let (since, from) = match self.landing_since {
            Some(x) => x,
            None => {
                let from = self.legs.last().map_or(self.mission.home, |l| l.end);
                self.landing_since = Some((t, from));
                (t, from)
            }
        };
        let ground = self.mission.home.z + 0.3;
        let z = from.z + self.mission.descent_rate * (t - since);
        if z >= ground {
            (Vector3::new(from.x, from.y, ground), Vector3::zeros())
        } else {
            (
                Vector3::new(from.x, from.y, z),
                Vector3::new(0.0, 0.0, self.mission.descent_rate),
            )
        }
    }

    /// True once the vehicle has been stopped at `point` for the hold time.
    fn hold_at(&mut self, t: f64, s: &RigidBodyState, point: &Vector3<f64>) -> bool {
        let stopped = (s.position - point).norm() < ARRIVAL_RADIUS && s.velocity.norm() < ARRIVAL_SPEED;
        match (self.hold_since, stopped) {
            (None, true) => {
                self.hold_since = Some(t);
                self.mission.hold <= 0.0
            }
            (Some(since), _) => t - since >= self.mission.hold,
            (None, false) => false,
        }
    }

    fn hover(&mut self, t: f64, dt: f64, s: &RigidBodyState) -> Reference {
        let bounds = self.hover_bounds();
        loop {
            let Some(leg) = self.legs.get(self.leg).copied() else {
                if self.mission.land {
                    let (p, v) = self.landing_carrot(t);
                    return self.flight_reference(p, v, 0.0, bounds);
                }
                let p = self.legs.last().map_or(self.mission.home, |l| l.end);
                return self.flight_reference(p, Vector3::zeros(), 0.0, bounds);
            };
            if leg.forward {
                let bearing = leg.bearing();
                let err = wrap_angle(bearing - self.yaw_ref);
                let step = self.config.yaw_rate_deg_s.to_radians() * dt;
                let mut yaw_rate = 0.0;
                if err.abs() > step {
                    yaw_rate = self.config.yaw_rate_deg_s.to_radians() * err.signum();
                    self.yaw_ref = wrap_angle(self.yaw_ref + err.signum() * step);
                } else {
                    self.yaw_ref = bearing;
                }
                self.start_ready = wrap_angle(bearing - s.attitude.yaw).abs() < HEADING_TOLERANCE
                    && self.yaw_ref == bearing
                    && (s.position - leg.start).norm() < ARRIVAL_RADIUS;
                return self.flight_reference(leg.start, Vector3::zeros(), yaw_rate, bounds);
            }
            let (p, v) = self.carrot(&leg, t);
            if v == Vector3::zeros() && self.hold_at(t, s, &leg.end) {
                self.start_leg(self.leg + 1, t);
                continue;
            }
            return self.flight_reference(p, v, 0.0, bounds);
        }
    }

    fn forward(&mut self, t: f64, dt: f64, sensed: &Sensed) -> Reference {
        let s = sensed.state;
        // advance through pass-through waypoints
        loop {
            let leg = self.legs[self.leg];
            if leg.stop {
                break;
            }
            let seg = Segment::new(leg.start, leg.end, self.ground_speed);
            let passed =
                (s.position - leg.end).norm() < self.mission.radius || seg.along_track(&s.position) >= seg.length();
            if !passed {
                break;
            }
            self.leg += 1;
            self.ground_speed = self.leg_ground_speed(self.leg);
        }
        let leg = self.legs[self.leg];
        let seg = Segment::new(leg.start, leg.end, self.ground_speed);
        if leg.stop && self.phase == FlightPhase::Forward {
            let stopping = 1.25 * self.ground_speed * self.ground_speed / (2.0 * self.config.decel_accel);
            self.decel_ready = seg.length() - seg.along_track(&s.position) <= self.mission.decel_distance.max(stopping);
        }

        let air = s.rotation.transpose() * (sensed.wind - s.velocity);
        let mut yaw_rate = sideslip_correction(
            &air,
            s.airspeed,
            self.config.k_sideslip,
            self.config.sideslip_min_airspeed,
        );
        let vh = s.velocity.xy();
        if vh.norm() > self.config.sideslip_min_airspeed {
            yaw_rate += (vh.x * sensed.accel.y - vh.y * sensed.accel.x) / vh.norm_squared();
        }
        let yaw_rate = yaw_rate.clamp(-MAX_YAW_RATE, MAX_YAW_RATE);
        let lead = wrap_angle(self.yaw_ref + yaw_rate * dt - s.attitude.yaw).clamp(-MAX_YAW_LEAD, MAX_YAW_LEAD);
        self.yaw_ref = wrap_angle(s.attitude.yaw + lead);

        let roll = self.config.forward_roll_limit_deg;
        let hover_pitch = self.config.hover_pitch_limit_deg.to_radians();
        let pitch = match self.phase {
            FlightPhase::TransitionToForward => {
                let lower = (-hover_pitch - self.ramp_since(t)).max(FORWARD_PITCH.0);
                (lower, hover_pitch)
            }
            _ => FORWARD_PITCH,
        };
        let bounds = self.bounds(roll, pitch, self.config.forward_min_thrust);
        let ramped = self.config.transition_accel * (t - self.speed_ramp_since);
        let seg = Segment::new(leg.start, leg.end, self.ground_speed.min(ramped));
        let p = seg.closest_point(&s.position);
        let v = vector_field_velocity(&s.position, &seg, &self.config.field);
        let shaping = if self.phase == FlightPhase::Forward {
            Shaping::Turning
        } else {
            Shaping::Scheduled
        };
        Reference {
            shaping,
            ..self.flight_reference(p, v, yaw_rate, bounds)
        }
    }

    fn decelerate(&mut self, t: f64, sensed: &Sensed) -> Reference {
        let s = sensed.state;
        let leg = self.legs[self.leg];
        let hover_pitch = self.config.hover_pitch_limit_deg.to_radians();
        // the nose may only come up as fast as the airspeed bleeds off
        let fast = ((s.velocity - sensed.wind).norm() / self.config.thresholds.transition_speed).min(1.0);
        let lower = -hover_pitch + (FORWARD_PITCH.0 + hover_pitch) * fast;
        let pitch = (lower, (FORWARD_PITCH.1 + self.ramp_since(t)).min(hover_pitch));
        // the rotors take over the weight as the wing stops lifting
        let wing_flow = (s.airspeed / self.config.thresholds.transition_speed).min(1.0);
        let min_thrust = self
            .config
            .forward_min_thrust
            .max(0.8 * self.gravity * (1.0 - wing_flow * wing_flow));
        let bounds = self.bounds(self.config.forward_roll_limit_deg, pitch, min_thrust);
        // once the descent starts the vehicle is hovering again
        if self.landing_since.is_some() {
            let (p, v) = self.landing_carrot(t);
            return self.flight_reference(p, v, 0.0, self.hover_bounds());
        }
        let seg = Segment::new(leg.start, leg.end, self.ground_speed);
        let remaining = (seg.length() - seg.along_track(&s.position)).max(0.0);
        let speed = self
            .ground_speed
            .min((2.0 * self.config.decel_accel * remaining).sqrt());
        let along = seg.along_track(&s.position).clamp(0.0, seg.length());
        let p = leg.start + seg.direction() * along;
        let v = seg.direction() * speed + self.config.field.correction(&s.position, &seg);
        if self.hold_at(t, s, &leg.end) {
            if self.leg + 1 == self.legs.len() && self.mission.land {
                let (p, v) = self.landing_carrot(t);
                return self.flight_reference(p, v, 0.0, self.hover_bounds());
            }
            self.stop_ready = true;
        }
        Reference {
            shaping: Shaping::Braking,
            ..self.flight_reference(p, v, 0.0, bounds)
        }
    }
}

/// Pitch bounds in forward flight.
const FORWARD_PITCH: (f64, f64) = (
    -110.0 * std::f64::consts::PI / 180.0,
    -30.0 * std::f64::consts::PI / 180.0,
);
