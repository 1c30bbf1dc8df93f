//! Mean wind plus a seeded first-order (Ornstein-Uhlenbeck) gust process.
//!
//! The gust series is generated up front and scaled so that the largest
//! horizontal wind speed over the run equals the configured peak.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub struct WindParams {
    /// Mean wind, NED, m/s (direction the air moves towards).
    pub mean: Vector3<f64>,
    /// Peak horizontal wind speed including gusts; at or below the mean speed
    /// the gust process is off.
    pub gust_peak: f64,
    /// Gust correlation time, s.
    pub gust_tau: f64,
    /// Vertical gust scale relative to horizontal.
    pub vertical_ratio: f64,
}

impl Default for WindParams {
    fn default() -> Self {
        Self {
            mean: Vector3::zeros(),
            gust_peak: 0.0,
            gust_tau: 2.0,
            vertical_ratio: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindModel {
    mean: Vector3<f64>,
    gusts: Vec<Vector3<f64>>,
    sample_dt: f64,
}

/// Gust samples per second.
const GUST_RATE: f64 = 50.0;

impl WindModel {
    pub fn constant(mean: Vector3<f64>) -> Self {
        Self {
            mean,
            gusts: Vec::new(),
            sample_dt: 1.0 / GUST_RATE,
        }
    }

    /// Builds the wind for a run of `duration` seconds.
    pub fn new(params: &WindParams, seed: u64, duration: f64) -> Self {
        let mean_h = params.mean.xy().norm();
        if params.gust_peak <= mean_h || duration <= 0.0 {
            return Self::constant(params.mean);
        }
        let dt = 1.0 / GUST_RATE;
        let n = (duration * GUST_RATE).ceil() as usize + 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let decay = (-dt / params.gust_tau).exp();
        let drive = (1.0 - decay * decay).sqrt();
        let mut g = Vector3::zeros();
        let mut raw = Vec::with_capacity(n);
        for _ in 0..n {
            let noise = Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng));
            g = g * decay + noise * drive;
            raw.push(Vector3::new(g.x, g.y, g.z * params.vertical_ratio));
        }
        let scale = peak_scale(&params.mean, &raw, params.gust_peak);
        Self {
            mean: params.mean,
            gusts: raw.into_iter().map(|v| v * scale).collect(),
            sample_dt: dt,
        }
    }

    /// Wind at time `t`, linearly interpolated between gust samples.
    pub fn at(&self, t: f64) -> Vector3<f64> {
        if self.gusts.is_empty() {
            return self.mean;
        }
        let x = (t.max(0.0) / self.sample_dt).min((self.gusts.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.gusts.len() - 2);
        let f = x - i as f64;
        self.mean + self.gusts[i] * (1.0 - f) + self.gusts[i + 1] * f
    }

    /// Largest horizontal wind speed over the generated series.
    pub fn peak_horizontal(&self) -> f64 {
        if self.gusts.is_empty() {
            return self.mean.xy().norm();
        }
        self.gusts
            .iter()
            .map(|g| (self.mean + g).xy().norm())
            .fold(0.0, f64::max)
    }

    pub fn mean(&self) -> Vector3<f64> {
        self.mean
    }
}

/// Scale `s` with `max_k |mean_h + s g_k,h| = peak`, by bisection on the
/// convex, initially-below-peak envelope.
fn peak_scale(mean: &Vector3<f64>, raw: &[Vector3<f64>], peak: f64) -> f64 {
    let envelope = |s: f64| raw.iter().map(|g| (mean + g * s).xy().norm()).fold(0.0, f64::max);
    let mut hi = 1.0;
    while envelope(hi) < peak {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if envelope(mid) < peak {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
