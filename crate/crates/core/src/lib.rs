//! Simulation and control of a dual-tiltrotor tailsitter: rigid-body model,
//! ground pivot takeoff/landing control, incremental nonlinear dynamic
//! inversion attitude control with weighted least-squares allocation,
//! waypoint guidance and a closed-loop plant with wind.

pub mod actuator;
pub mod guidance;
pub mod indi;
pub mod mission;
pub mod model;
pub mod pivot;
pub mod plant;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod telemetry;
pub mod wls;
