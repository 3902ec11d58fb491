//! Frequency response of the 600 Hz action filter.

use std::f64::consts::PI;

use stagebot_core::control::{ActionPipeline, ACTUATION_RATE};
use stagebot_core::robot::JointVector;

fn gain(cutoff: f64, freq: f64) -> f64 {
    let mut p = ActionPipeline::new(JointVector::zeros(), cutoff);
    p.ticks = 1;
    let w = 2.0 * PI * freq / ACTUATION_RATE;
    let n = 6000;
    let (mut s, mut c) = (0.0, 0.0);
    for k in 0..2 * n {
        p.push(JointVector::from_element((w * k as f64).sin()));
        let y = p.tick()[0];
        if k >= n {
            s += y * (w * k as f64).sin();
            c += y * (w * k as f64).cos();
        }
    }
    2.0 * (s * s + c * c).sqrt() / n as f64
}

fn main() {
    let cutoff = 37.5;
    for f in [1.0, 5.0, 10.0, 25.0, 37.5, 50.0, 100.0, 200.0] {
        let g = gain(cutoff, f);
        println!("{f:6.1} Hz  gain {g:.4}  ({:+.2} dB)", 20.0 * g.log10());
    }
}
