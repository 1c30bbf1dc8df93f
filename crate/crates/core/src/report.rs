//! Run summary computed from telemetry alone, and assertion checks.

use std::fmt::Write as _;

use crate::actuator::{ACTUATOR_NAMES, ELEVON_L, ELEVON_R, N_ACTUATORS};
use crate::guidance::FlightPhase;
use crate::scenario::Assertions;
use crate::telemetry::TelemetryLog;

/// Reference vertical speed separating climb/descent rows from level ones, m/s.
const VERTICAL_REF_EPS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mean: f64,
    pub max: f64,
    pub samples: usize,
}

impl ErrorStats {
    fn from(values: impl Iterator<Item = f64>) -> Option<Self> {
        let (mut sum, mut max, mut n) = (0.0, 0.0f64, 0usize);
        for v in values {
            sum += v;
            max = max.max(v);
            n += 1;
        }
        (n > 0).then(|| ErrorStats {
            mean: sum / n as f64,
            max,
            samples: n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointResult {
    /// Closest approach, m.
    pub min_distance: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub name: String,
    pub mode: String,
    pub seed: u64,
    pub rows: usize,
    pub end_time: f64,
    pub diverged: Option<usize>,
    /// Phases in order of entry.
    pub phase_sequence: Vec<FlightPhase>,
    /// First entry time of each phase, indexed by phase code; `None` when never entered.
    pub phase_entry: [Option<f64>; 7],
    /// Position error per phase, indexed by phase code.
    pub phase_error: [Option<ErrorStats>; 7],
    /// Share of in-flight steps (outside ground phases) with each actuator saturated, %.
    pub saturation_duty: [f64; N_ACTUATORS],
    pub waypoints: Vec<WaypointResult>,
    /// Time the upright gate was passed, s.
    pub gate_time: Option<f64>,
    /// Slope of `ln E` over the first pivot phase, 1/s.
    pub lyapunov_slope: Option<f64>,
    pub climb_error: Option<ErrorStats>,
    pub descent_error: Option<ErrorStats>,
    /// Share of descent steps with an elevon saturated downwards, %.
    pub descent_elevon_saturation: f64,
}

impl RunReport {
    pub fn entry(&self, phase: FlightPhase) -> Option<f64> {
        self.phase_entry[phase.code() as usize]
    }

    pub fn error(&self, phase: FlightPhase) -> Option<ErrorStats> {
        self.phase_error[phase.code() as usize]
    }

    pub fn max_flight_saturation(&self) -> f64 {
        self.saturation_duty.iter().copied().fold(0.0, f64::max)
    }

    /// Mean descent error over mean climb error.
    pub fn descent_ratio(&self) -> Option<f64> {
        match (self.climb_error, self.descent_error) {
            (Some(c), Some(d)) if c.mean > 0.0 => Some(d.mean / c.mean),
            _ => None,
        }
    }

    pub fn all_waypoints_hit(&self) -> bool {
        self.waypoints.iter().all(|w| w.hit)
    }

    /// Machine-readable `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:?}"));
        let _ = writeln!(s, "name={}", self.name);
        let _ = writeln!(s, "mode={}", self.mode);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "rows={}", self.rows);
        let _ = writeln!(s, "end_time={:?}", self.end_time);
        let _ = writeln!(
            s,
            "diverged={}",
            self.diverged.map_or("none".to_string(), |k| k.to_string())
        );
        let seq: Vec<&str> = self.phase_sequence.iter().map(|p| p.name()).collect();
        let _ = writeln!(s, "phase_sequence={}", seq.join(","));
        for p in FlightPhase::ALL {
            let _ = writeln!(s, "phase.{}.entry={}", p.name(), opt(self.entry(p)));
            if let Some(e) = self.error(p) {
                let _ = writeln!(s, "phase.{}.error_mean={:?}", p.name(), e.mean);
                let _ = writeln!(s, "phase.{}.error_max={:?}", p.name(), e.max);
            }
        }
        for (i, name) in ACTUATOR_NAMES.iter().enumerate() {
            let _ = writeln!(s, "saturation.{name}={:?}", self.saturation_duty[i]);
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            let _ = writeln!(s, "waypoint.{i}.min_distance={:?}", w.min_distance);
            let _ = writeln!(s, "waypoint.{i}.hit={}", w.hit);
        }
        let _ = writeln!(s, "gate_time={}", opt(self.gate_time));
        let _ = writeln!(s, "lyapunov_slope={}", opt(self.lyapunov_slope));
        let _ = writeln!(s, "climb_error_mean={}", opt(self.climb_error.map(|e| e.mean)));
        let _ = writeln!(s, "descent_error_mean={}", opt(self.descent_error.map(|e| e.mean)));
        let _ = writeln!(s, "descent_ratio={}", opt(self.descent_ratio()));
        let _ = writeln!(s, "descent_elevon_saturation={:?}", self.descent_elevon_saturation);
        s
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "run {} (mode {}, seed {}): {} steps, {:.2} s",
            self.name, self.mode, self.seed, self.rows, self.end_time
        );
        if let Some(k) = self.diverged {
            let _ = writeln!(s, "  DIVERGED at step {k}");
        }
        let seq: Vec<&str> = self.phase_sequence.iter().map(|p| p.name()).collect();
        let _ = writeln!(s, "  phases: {}", seq.join(" -> "));
        let _ = writeln!(
            s,
            "  {:<24} {:>9} {:>10} {:>10}",
            "phase", "entry [s]", "mean [m]", "max [m]"
        );
        for p in FlightPhase::ALL {
            let entry = self.entry(p).map_or("absent".to_string(), |t| format!("{t:.3}"));
            let (mean, max) = self.error(p).map_or(("-".to_string(), "-".to_string()), |e| {
                (format!("{:.3}", e.mean), format!("{:.3}", e.max))
            });
            let _ = writeln!(s, "  {:<24} {:>9} {:>10} {:>10}", p.name(), entry, mean, max);
        }
        let _ = writeln!(s, "  saturation duty in flight [%]:");
        for (i, name) in ACTUATOR_NAMES.iter().enumerate() {
            let _ = writeln!(s, "    {:<10} {:>7.3}", name, self.saturation_duty[i]);
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            let _ = writeln!(
                s,
                "  waypoint {i}: closest {:.2} m ({})",
                w.min_distance,
                if w.hit { "hit" } else { "MISS" }
            );
        }
        match self.gate_time {
            Some(t) => {
                let _ = writeln!(s, "  upright gate at {t:.3} s");
            }
            None => {
                let _ = writeln!(s, "  upright gate: not reached");
            }
        }
        if let Some(k) = self.lyapunov_slope {
            let _ = writeln!(s, "  pivot ln E slope: {k:.3} 1/s");
        }
        if let (Some(c), Some(d)) = (self.climb_error, self.descent_error) {
            let _ = writeln!(
                s,
                "  climb error {:.3} m, descent error {:.3} m (ratio {:.2})",
                c.mean,
                d.mean,
                d.mean / c.mean
            );
        }
        let _ = writeln!(
            s,
            "  downward elevon saturation in descent: {:.2} %",
            self.descent_elevon_saturation
        );
        s
    }
}

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Least-squares slope of `y` against `x`.
fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Builds the report from a telemetry log.
pub fn compute_report(log: &TelemetryLog) -> RunReport {
    let rows = &log.rows;
    let mut phase_sequence: Vec<FlightPhase> = Vec::new();
    let mut phase_entry = [None; 7];
    for r in rows {
        if phase_sequence.last() != Some(&r.phase) {
            phase_sequence.push(r.phase);
            let slot = &mut phase_entry[r.phase.code() as usize];
            if slot.is_none() {
                *slot = Some(r.t);
            }
        }
    }

    let err = |r: &crate::telemetry::TelemetryRow| (r.position - r.position_ref).norm();
    let phase_error = FlightPhase::ALL.map(|p| ErrorStats::from(rows.iter().filter(|r| r.phase == p).map(err)));

    let flight: Vec<_> = rows.iter().filter(|r| !r.phase.is_ground()).collect();
    let saturation_duty = std::array::from_fn(|i| {
        percent(
            flight.iter().filter(|r| r.saturation & (1 << i) != 0).count(),
            flight.len(),
        )
    });

    let waypoints = log
        .meta
        .waypoints
        .iter()
        .map(|w| {
            let d = rows
                .iter()
                .map(|r| (r.position - w).norm())
                .fold(f64::INFINITY, f64::min);
            WaypointResult {
                min_distance: d,
                hit: d <= log.meta.radius,
            }
        })
        .collect();

    let gate_time = rows
        .windows(2)
        .find(|w| w[0].phase == FlightPhase::GroundedPivotUp && w[1].phase == FlightPhase::Hover)
        .map(|w| w[1].t);

    let pivot: Vec<(f64, f64)> = rows
        .iter()
        .take_while(|r| r.phase == FlightPhase::GroundedPivotUp)
        .filter(|r| r.pivot_z.is_finite() && r.pivot_z != 0.0)
        .map(|r| (r.t, (0.5 * r.pivot_z * r.pivot_z).ln()))
        .collect();
    let lyapunov_slope = slope(&pivot);

    let hovering = |r: &&crate::telemetry::TelemetryRow| r.phase == FlightPhase::Hover;
    let climb_error = ErrorStats::from(
        rows.iter()
            .filter(hovering)
            .filter(|r| r.velocity_ref.z < -VERTICAL_REF_EPS)
            .map(err),
    );
    let descent_rows: Vec<_> = rows
        .iter()
        .filter(hovering)
        .filter(|r| r.velocity_ref.z > VERTICAL_REF_EPS)
        .collect();
    let descent_error = ErrorStats::from(descent_rows.iter().map(|r| err(r)));
    let down = descent_rows
        .iter()
        .filter(|r| {
            [ELEVON_L, ELEVON_R]
                .iter()
                .any(|&i| r.saturation & (1 << i) != 0 && r.commands[i] < 0.0)
        })
        .count();

    RunReport {
        name: log.meta.name.clone(),
        mode: log.meta.mode.clone(),
        seed: log.meta.seed,
        rows: rows.len(),
        end_time: rows.last().map_or(0.0, |r| r.t),
        diverged: log.meta.diverged,
        phase_sequence,
        phase_entry,
        phase_error,
        saturation_duty,
        waypoints,
        gate_time,
        lyapunov_slope,
        climb_error,
        descent_error,
        descent_elevon_saturation: percent(down, descent_rows.len()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssertionResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Evaluates the scenario's assertions against a finished run.
pub fn check_assertions(a: &Assertions, report: &RunReport, log: &TelemetryLog) -> Vec<AssertionResult> {
    let mut out = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        out.push(AssertionResult {
            name: name.to_string(),
            passed,
            detail,
        })
    };
    let names = |seq: &[FlightPhase]| seq.iter().map(|p| p.name()).collect::<Vec<_>>().join(",");
    push(
        "no_divergence",
        report.diverged.is_none(),
        format!("diverged={:?}", report.diverged),
    );
    if let Some(seq) = &a.phase_sequence {
        push(
            "phase_sequence",
            &report.phase_sequence == seq,
            format!("expected {} got {}", names(seq), names(&report.phase_sequence)),
        );
    }
    if let Some(p) = a.reach_phase {
        push(
            "reach_phase",
            report.entry(p).is_some(),
            format!("{} entry {:?}", p.name(), report.entry(p)),
        );
    }
    if let Some(limit) = a.gate_time_max {
        push(
            "gate_time_max",
            report.gate_time.is_some_and(|t| t <= limit),
            format!("gate at {:?}, limit {limit}", report.gate_time),
        );
    }
    if let Some(want) = a.waypoints_reached {
        let got = report.all_waypoints_hit();
        let d: Vec<String> = report
            .waypoints
            .iter()
            .map(|w| format!("{:.2}", w.min_distance))
            .collect();
        push(
            "waypoints_reached",
            got == want,
            format!("closest approaches [{}] m", d.join(", ")),
        );
    }
    if let Some(limit) = a.max_flight_saturation {
        let got = report.max_flight_saturation();
        push(
            "max_flight_saturation",
            got <= limit,
            format!("{got:.3} % (limit {limit} %)"),
        );
    }
    if let Some(limit) = a.max_position_error {
        let settle = a.settle_time.unwrap_or(0.0);
        let worst = log
            .rows
            .iter()
            .filter(|r| r.t >= settle && !r.phase.is_ground())
            .map(|r| (r.position - r.position_ref).norm())
            .fold(0.0, f64::max);
        push(
            "max_position_error",
            worst < limit,
            format!("{worst:.3} m after {settle} s (limit {limit} m)"),
        );
    }
    if let Some(want) = a.descent_saturation {
        let got = report.descent_elevon_saturation > 0.0;
        push(
            "descent_saturation",
            got == want,
            format!("{:.2} %", report.descent_elevon_saturation),
        );
    }
    if let Some(limit) = a.min_descent_ratio {
        let r = report.descent_ratio();
        push(
            "min_descent_ratio",
            r.is_some_and(|r| r >= limit),
            format!("{r:?} (min {limit})"),
        );
    }
    if let Some(limit) = a.max_descent_ratio {
        let r = report.descent_ratio();
        push(
            "max_descent_ratio",
            r.is_some_and(|r| r <= limit),
            format!("{r:?} (max {limit})"),
        );
    }
    out
}
