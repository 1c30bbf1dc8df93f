//! First-order actuator models for the two tilt servos, two motors and two
//! elevons, in the order `[tilt_l, tilt_r, thrust_l, thrust_r, elevon_l, elevon_r]`.

use nalgebra::SVector;

use crate::model::VehicleParams;

pub const N_ACTUATORS: usize = 6;
pub const TILT_L: usize = 0;
pub const TILT_R: usize = 1;
pub const THRUST_L: usize = 2;
pub const THRUST_R: usize = 3;
pub const ELEVON_L: usize = 4;
pub const ELEVON_R: usize = 5;

pub const ACTUATOR_NAMES: [&str; N_ACTUATORS] = ["tilt_l", "tilt_r", "thrust_l", "thrust_r", "elevon_l", "elevon_r"];

pub type ActuatorVector = SVector<f64, N_ACTUATORS>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActuatorKind {
    Tilt,
    Motor,
    Elevon,
}

impl ActuatorKind {
    pub fn of(index: usize) -> Self {
        match index {
            TILT_L | TILT_R => ActuatorKind::Tilt,
            THRUST_L | THRUST_R => ActuatorKind::Motor,
            _ => ActuatorKind::Elevon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Actuator {
    /// Last command received (already clamped to the bounds).
    pub command: f64,
    /// Modeled position / thrust.
    pub state: f64,
    pub lower: f64,
    pub upper: f64,
    /// Slew limit per second, servos only.
    pub rate_limit: Option<f64>,
    pub tau: f64,
}

impl Actuator {
    fn step(&self, command: f64, dt: f64) -> Actuator {
        let command = command.clamp(self.lower, self.upper);
        // exact zero-order-hold discretisation of 1/(tau s + 1)
        let decay = (-dt / self.tau).exp();
        let mut next = command + (self.state - command) * decay;
        if let Some(rate) = self.rate_limit {
            let max_step = rate * dt;
            next = self.state + (next - self.state).clamp(-max_step, max_step);
        }
        Actuator {
            command,
            state: next.clamp(self.lower, self.upper),
            ..*self
        }
    }

    /// True when the bound interval collapses to a point (actuator pinned).
    pub fn is_pinned(&self) -> bool {
        self.upper - self.lower <= 0.0
    }

    /// Command sits exactly on one of its (non-degenerate) bounds.
    pub fn is_saturated(&self) -> bool {
        !self.is_pinned() && (self.command <= self.lower || self.command >= self.upper)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorBank {
    pub actuators: [Actuator; N_ACTUATORS],
}

impl ActuatorBank {
    /// Bank with all servos centred and both motors at `thrust` newtons.
    pub fn new(params: &VehicleParams, thrust: f64) -> Self {
        let servo = Actuator {
            command: 0.0,
            state: 0.0,
            lower: -params.delta_max,
            upper: params.delta_max,
            rate_limit: Some(params.servo_rate_limit),
            tau: params.tau_servo,
        };
        let t = thrust.clamp(0.0, params.thrust_max);
        let motor = Actuator {
            command: t,
            state: t,
            lower: 0.0,
            upper: params.thrust_max,
            rate_limit: None,
            tau: params.tau_motor,
        };
        Self {
            actuators: [servo, servo, motor, motor, servo, servo],
        }
    }

    pub fn states(&self) -> ActuatorVector {
        ActuatorVector::from_fn(|i, _| self.actuators[i].state)
    }

    pub fn commands(&self) -> ActuatorVector {
        ActuatorVector::from_fn(|i, _| self.actuators[i].command)
    }

    pub fn lower(&self) -> ActuatorVector {
        ActuatorVector::from_fn(|i, _| self.actuators[i].lower)
    }

    pub fn upper(&self) -> ActuatorVector {
        ActuatorVector::from_fn(|i, _| self.actuators[i].upper)
    }

    /// Forces one actuator to a fixed value by collapsing its bounds.
    pub fn pin(&mut self, index: usize, value: f64) {
        let a = &mut self.actuators[index];
        a.lower = value;
        a.upper = value;
        a.command = value;
        a.state = value;
    }

    /// Overwrites the modeled states (used when initialising a scenario).
    pub fn set_states(&mut self, states: &ActuatorVector) {
        for (a, &s) in self.actuators.iter_mut().zip(states.iter()) {
            a.state = s.clamp(a.lower, a.upper);
            a.command = a.state;
        }
    }

    /// Advances every actuator by `dt` towards `commands`.
    pub fn step(&self, commands: &ActuatorVector, dt: f64) -> ActuatorBank {
        let mut next = self.clone();
        for (i, a) in next.actuators.iter_mut().enumerate() {
            *a = self.actuators[i].step(commands[i], dt);
        }
        next
    }

    /// Bit `i` set when actuator `i`'s command equals one of its bounds.
    pub fn saturation_mask(&self) -> u8 {
        self.actuators
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_saturated())
            .fold(0u8, |m, (i, _)| m | (1 << i))
    }
}

/// Pure-function form of [`ActuatorBank::step`].
pub fn actuator_step(bank: &ActuatorBank, commands: &ActuatorVector, dt: f64) -> ActuatorBank {
    bank.step(commands, dt)
}
