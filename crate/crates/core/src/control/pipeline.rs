//! 50 Hz to 600 Hz bridge: first-order hold between consecutive setpoints,
//! then a first-order low-pass per joint.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::robot::JointVector;

pub const POLICY_RATE: f64 = 50.0;
pub const ACTUATION_RATE: f64 = 600.0;
pub const TICKS_PER_ACTION: usize = 12;
pub const DEFAULT_CUTOFF: f64 = 37.5;

/// Smoothing factor of `y += alpha (x - y)` whose gain is exactly -3 dB at
/// `cutoff`.
pub fn lpf_alpha(cutoff: f64, rate: f64) -> f64 {
    let w = 2.0 * PI * cutoff / rate;
    let c = 4.0 - 2.0 * w.cos();
    let pole = (c - (c * c - 4.0).sqrt()) / 2.0;
    1.0 - pole
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPipeline {
    pub alpha: f64,
    pub ticks: usize,
    from: JointVector,
    to: JointVector,
    k: usize,
    filtered: JointVector,
}

impl ActionPipeline {
    pub fn new(q: JointVector, cutoff: f64) -> Self {
        Self {
            alpha: lpf_alpha(cutoff, ACTUATION_RATE),
            ticks: TICKS_PER_ACTION,
            from: q,
            to: q,
            k: TICKS_PER_ACTION,
            filtered: q,
        }
    }

    /// Resets hold and filter to `q`.
    pub fn reset(&mut self, q: JointVector) {
        self.from = q;
        self.to = q;
        self.k = self.ticks;
        self.filtered = q;
    }

    /// Starts the hold from the previous target towards `setpoint`.
    pub fn push(&mut self, setpoint: JointVector) {
        self.from = self.to;
        self.to = setpoint;
        self.k = 0;
    }

    pub fn tick(&mut self) -> JointVector {
        self.k = (self.k + 1).min(self.ticks);
        let s = self.k as f64 / self.ticks as f64;
        let held = self.from + (self.to - self.from) * s;
        self.filtered += (held - self.filtered) * self.alpha;
        self.filtered
    }

    pub fn output(&self) -> JointVector {
        self.filtered
    }

    pub fn target(&self) -> JointVector {
        self.to
    }
}
