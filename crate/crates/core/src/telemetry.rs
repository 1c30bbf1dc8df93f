//! Per-step telemetry and its CSV form.
//!
//! The file starts with `# key=value` metadata lines, then one header line,
//! one row per control step, and a closing `# end rows=N` line. A file
//! without the closing line is treated as truncated.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{Vector3, Vector4};

use crate::actuator::{ActuatorVector, ACTUATOR_NAMES, N_ACTUATORS};
use crate::guidance::FlightPhase;

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRow {
    pub t: f64,
    pub phase: FlightPhase,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// `[yaw, roll, pitch]`, rad.
    pub euler: Vector3<f64>,
    pub rates: Vector3<f64>,
    pub airspeed: f64,
    pub commands: ActuatorVector,
    /// Actuator states the controller saw this step.
    pub states: ActuatorVector,
    pub saturation: u8,
    pub pseudo_control: Vector4<f64>,
    pub position_ref: Vector3<f64>,
    pub velocity_ref: Vector3<f64>,
    /// `[yaw, roll, pitch]` reference, rad.
    pub euler_ref: Vector3<f64>,
    /// Pivot tracking variable `z`; NaN outside pivot control.
    pub pivot_z: f64,
    pub contact: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TelemetryMeta {
    pub name: String,
    pub mode: String,
    pub seed: u64,
    pub dt: f64,
    pub waypoints: Vec<Vector3<f64>>,
    pub radius: f64,
    /// Step index at which the run diverged.
    pub diverged: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TelemetryLog {
    pub meta: TelemetryMeta,
    pub rows: Vec<TelemetryRow>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("telemetry is truncated (no end marker)")]
    Truncated,
    #[error("row count mismatch: end marker says {expected}, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("{0}")]
    Io(String),
}

fn columns() -> Vec<String> {
    let mut c: Vec<String> = [
        "t", "phase", "px", "py", "pz", "vx", "vy", "vz", "yaw", "roll", "pitch", "p", "q", "r", "airspeed",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    c.extend(ACTUATOR_NAMES.iter().map(|n| format!("uc_{n}")));
    c.extend(ACTUATOR_NAMES.iter().map(|n| format!("u0_{n}")));
    c.push("sat".into());
    c.extend(["nu_p", "nu_q", "nu_r", "nu_tz"].iter().map(|s| s.to_string()));
    c.extend(
        [
            "px_ref",
            "py_ref",
            "pz_ref",
            "vx_ref",
            "vy_ref",
            "vz_ref",
            "yaw_ref",
            "roll_ref",
            "pitch_ref",
            "pivot_z",
            "contact",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    c
}

/// Header line of the CSV body.
pub fn header() -> String {
    columns().join(",")
}

fn push3(out: &mut String, v: &Vector3<f64>) {
    for x in v.iter() {
        let _ = write!(out, ",{x:?}");
    }
}

impl TelemetryRow {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{:?},{}", self.t, self.phase.name());
        push3(&mut s, &self.position);
        push3(&mut s, &self.velocity);
        push3(&mut s, &self.euler);
        push3(&mut s, &self.rates);
        let _ = write!(s, ",{:?}", self.airspeed);
        for x in self.commands.iter().chain(self.states.iter()) {
            let _ = write!(s, ",{x:?}");
        }
        let _ = write!(s, ",{}", self.saturation);
        for x in self.pseudo_control.iter() {
            let _ = write!(s, ",{x:?}");
        }
        push3(&mut s, &self.position_ref);
        push3(&mut s, &self.velocity_ref);
        push3(&mut s, &self.euler_ref);
        let _ = write!(s, ",{:?},{}", self.pivot_z, u8::from(self.contact));
        s
    }

    fn parse(line: &str, line_no: usize) -> Result<Self, FormatError> {
        let bad = |message: String| FormatError::Malformed { line: line_no, message };
        let fields: Vec<&str> = line.split(',').collect();
        let expected = columns().len();
        if fields.len() != expected {
            return Err(bad(format!("expected {expected} fields, found {}", fields.len())));
        }
        let num = |i: usize| -> Result<f64, FormatError> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("bad number `{}` in column {}", fields[i], i + 1)))
        };
        let v3 =
            |i: usize| -> Result<Vector3<f64>, FormatError> { Ok(Vector3::new(num(i)?, num(i + 1)?, num(i + 2)?)) };
        let phase = FlightPhase::parse(fields[1]).ok_or_else(|| bad(format!("unknown phase `{}`", fields[1])))?;
        let mut commands = ActuatorVector::zeros();
        let mut states = ActuatorVector::zeros();
        for k in 0..N_ACTUATORS {
            commands[k] = num(15 + k)?;
            states[k] = num(15 + N_ACTUATORS + k)?;
        }
        let sat_col = 15 + 2 * N_ACTUATORS;
        let saturation = fields[sat_col]
            .parse::<u8>()
            .map_err(|_| bad(format!("bad saturation mask `{}`", fields[sat_col])))?;
        let nu = sat_col + 1;
        let refs = nu + 4;
        let contact = match fields[refs + 10] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("bad contact flag `{other}`"))),
        };
        Ok(TelemetryRow {
            t: num(0)?,
            phase,
            position: v3(2)?,
            velocity: v3(5)?,
            euler: v3(8)?,
            rates: v3(11)?,
            airspeed: num(14)?,
            commands,
            states,
            saturation,
            pseudo_control: Vector4::new(num(nu)?, num(nu + 1)?, num(nu + 2)?, num(nu + 3)?),
            position_ref: v3(refs)?,
            velocity_ref: v3(refs + 3)?,
            euler_ref: v3(refs + 6)?,
            pivot_z: num(refs + 9)?,
            contact,
        })
    }
}

impl TelemetryLog {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let m = &self.meta;
        writeln!(w, "# name={}", m.name)?;
        writeln!(w, "# mode={}", m.mode)?;
        writeln!(w, "# seed={}", m.seed)?;
        writeln!(w, "# dt={:?}", m.dt)?;
        let wps: Vec<String> = m
            .waypoints
            .iter()
            .map(|p| format!("{:?} {:?} {:?}", p.x, p.y, p.z))
            .collect();
        writeln!(w, "# waypoints={}", wps.join(";"))?;
        writeln!(w, "# radius={:?}", m.radius)?;
        match m.diverged {
            Some(step) => writeln!(w, "# diverged={step}")?,
            None => writeln!(w, "# diverged=none")?,
        }
        writeln!(w, "{}", header())?;
        for row in &self.rows {
            writeln!(w, "{}", row.to_csv())?;
        }
        writeln!(w, "# end rows={}", self.rows.len())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("telemetry is ASCII")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, FormatError> {
        let mut log = TelemetryLog::default();
        let mut seen_header = false;
        let mut end = None;
        for (i, line) in r.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| FormatError::Io(e.to_string()))?;
            let bad = |message: String| FormatError::Malformed { line: line_no, message };
            if end.is_some() {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(bad("content after end marker".into()));
            }
            if let Some(meta) = line.strip_prefix("# ") {
                let (k, v) = meta
                    .split_once('=')
                    .ok_or_else(|| bad(format!("bad metadata `{meta}`")))?;
                if k == "end rows" {
                    let n: usize = v.parse().map_err(|_| bad(format!("bad row count `{v}`")))?;
                    end = Some(n);
                    continue;
                }
                if seen_header {
                    return Err(bad("metadata after header".into()));
                }
                parse_meta(&mut log.meta, k, v).map_err(bad)?;
                continue;
            }
            if !seen_header {
                if line != header() {
                    return Err(bad("unexpected header".into()));
                }
                seen_header = true;
                continue;
            }
            log.rows.push(TelemetryRow::parse(&line, line_no)?);
        }
        match end {
            None => Err(FormatError::Truncated),
            Some(n) if n != log.rows.len() => Err(FormatError::RowCount {
                expected: n,
                found: log.rows.len(),
            }),
            Some(_) => Ok(log),
        }
    }

    pub fn read_path(path: &std::path::Path) -> Result<Self, FormatError> {
        let f = std::fs::File::open(path).map_err(|e| FormatError::Io(format!("{}: {e}", path.display())))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

fn parse_meta(m: &mut TelemetryMeta, k: &str, v: &str) -> Result<(), String> {
    let num = |v: &str| v.parse::<f64>().map_err(|_| format!("bad number `{v}` for {k}"));
    match k {
        "name" => m.name = v.to_string(),
        "mode" => m.mode = v.to_string(),
        "seed" => m.seed = v.parse().map_err(|_| format!("bad seed `{v}`"))?,
        "dt" => m.dt = num(v)?,
        "radius" => m.radius = num(v)?,
        "diverged" => {
            m.diverged = match v {
                "none" => None,
                s => Some(s.parse().map_err(|_| format!("bad step `{s}`"))?),
            }
        }
        "waypoints" => {
            m.waypoints = v
                .split(';')
                .filter(|s| !s.is_empty())
                .map(|p| {
                    let xs: Vec<f64> = p.split(' ').map(num).collect::<Result<_, _>>()?;
                    if xs.len() != 3 {
                        return Err(format!("bad waypoint `{p}`"));
                    }
                    Ok(Vector3::new(xs[0], xs[1], xs[2]))
                })
                .collect::<Result<_, _>>()?
        }
        _ => return Err(format!("unknown metadata key `{k}`")),
    }
    Ok(())
}
