//! Actuator models identified on a torque test bench: PD torque laws,
//! velocity-dependent torque limits, friction, backlash, encoder offset,
//! position noise and reflected inertia.
//!
//! Every stochastic operation takes the RNG explicitly so an episode can be
//! replayed from its seed.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robot::ActuatorType;

pub const ACTUATOR_SCHEMA: &str = "stagebot-actuators/1";
pub const DEFAULT_ACTUATORS: &str = include_str!("../assets/actuators.toml");

/// Period of the actuation loop the head-variant derivative is taken over.
pub const ACTUATION_DT: f64 = 1.0 / 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdVariant {
    /// `tau_m = kp (a - q~) - kd qd`
    QuasiDirect,
    /// `tau_m = kp (a - q~) + kd d/dt (a - q~)`
    Head,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorParams {
    pub pd_variant: PdVariant,
    pub kp: f64,
    pub kd: f64,
    pub tau_max: f64,
    /// Velocity above which the available torque ramps down.
    pub qd_tau_max: f64,
    /// Velocity at which the ramp reaches zero torque.
    pub qd_max: f64,
    pub mu_s: f64,
    pub mu_d: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub eps_q_max: f64,
    pub sigma_q0: f64,
    /// Noise growth per unit of joint speed.
    pub sigma_q1: f64,
    /// Reflected rotor inertia I_m.
    pub armature: f64,
    /// Friction activation velocity.
    pub qd_s: f64,
    /// Backlash activation torque.
    pub tau_b: f64,
}

impl ActuatorParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::config(format!("actuator parameters: {m}")));
        let all = [
            self.kp, self.kd, self.tau_max, self.qd_tau_max, self.qd_max, self.mu_s, self.mu_d,
            self.b_min, self.b_max, self.eps_q_max, self.sigma_q0, self.sigma_q1, self.armature,
            self.qd_s, self.tau_b,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return fail("non-finite value");
        }
        if self.tau_max <= 0.0 {
            return fail("tau_max must be positive");
        }
        if !(0.0 < self.qd_tau_max && self.qd_tau_max < self.qd_max) {
            return fail("need 0 < qd_tau_max < qd_max");
        }
        if self.b_min > self.b_max || self.b_min < 0.0 {
            return fail("need 0 <= b_min <= b_max");
        }
        if self.sigma_q0 < 0.0 || self.sigma_q1 < 0.0 || self.eps_q_max < 0.0 {
            return fail("noise and offset bounds must be non-negative");
        }
        if self.qd_s <= 0.0 || self.tau_b <= 0.0 {
            return fail("activation parameters must be positive");
        }
        if self.kp < 0.0 || self.kd < 0.0 || self.mu_s < 0.0 || self.mu_d < 0.0 || self.armature < 0.0 {
            return fail("gains, friction and inertia must be non-negative");
        }
        Ok(())
    }
}

/// One parameter block per actuator type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorTable {
    pub schema: String,
    #[serde(rename = "A1")]
    pub a1: ActuatorParams,
    #[serde(rename = "Go1")]
    pub go1: ActuatorParams,
    #[serde(rename = "XH540")]
    pub xh540: ActuatorParams,
}

impl ActuatorTable {
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_ACTUATORS).expect("bundled actuator table is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: ActuatorTable = toml::from_str(text).map_err(|source| Error::Toml {
            what: "actuator file".into(),
            source,
        })?;
        if table.schema != ACTUATOR_SCHEMA {
            return Err(Error::config(format!("unsupported actuator schema `{}`", table.schema)));
        }
        for kind in ActuatorType::ALL {
            table.get(kind).validate()?;
        }
        Ok(table)
    }

    pub fn get(&self, kind: ActuatorType) -> &ActuatorParams {
        match kind {
            ActuatorType::A1 => &self.a1,
            ActuatorType::Go1 => &self.go1,
            ActuatorType::XH540 => &self.xh540,
        }
    }
}

/// Per-episode randomization of one actuator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorDraw {
    pub encoder_offset: f64,
    pub backlash: f64,
    pub armature_scale: f64,
}

impl ActuatorDraw {
    /// No offset, no backlash, nominal armature.
    pub const IDEAL: ActuatorDraw = ActuatorDraw {
        encoder_offset: 0.0,
        backlash: 0.0,
        armature_scale: 1.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorStep {
    pub setpoint: f64,
    pub position: f64,
    pub velocity: f64,
    /// Setpoint error of the previous tick; head variant only.
    pub prev_error: Option<f64>,
    pub dt: f64,
}

/// Setpoint error as seen by the drive: `a - (q + eps)`.
pub fn setpoint_error(draw: &ActuatorDraw, step: &ActuatorStep) -> f64 {
    step.setpoint - (step.position + draw.encoder_offset)
}

pub fn pd_torque(params: &ActuatorParams, draw: &ActuatorDraw, step: &ActuatorStep) -> f64 {
    let err = setpoint_error(draw, step);
    match params.pd_variant {
        PdVariant::QuasiDirect => params.kp * err - params.kd * step.velocity,
        PdVariant::Head => {
            let derr = match step.prev_error {
                Some(prev) => (err - prev) / step.dt,
                None => 0.0,
            };
            params.kp * err + params.kd * derr
        }
    }
}

/// `(tau_lo, tau_hi)` at joint velocity `qd`. Driving torque ramps down
/// linearly between `qd_tau_max` and `qd_max`; braking torque is only
/// bounded by `tau_max`.
pub fn torque_limits(params: &ActuatorParams, qd: f64) -> (f64, f64) {
    let speed = qd.abs();
    let driving = if speed <= params.qd_tau_max {
        params.tau_max
    } else {
        (params.tau_max * (params.qd_max - speed) / (params.qd_max - params.qd_tau_max)).max(0.0)
    };
    if qd >= 0.0 {
        (-params.tau_max, driving)
    } else {
        (-driving, params.tau_max)
    }
}

pub fn friction(params: &ActuatorParams, qd: f64) -> f64 {
    params.mu_s * (qd / params.qd_s).tanh() + params.mu_d * qd
}

pub fn clamp_torque(params: &ActuatorParams, tau_m: f64, qd: f64) -> f64 {
    let (lo, hi) = torque_limits(params, qd);
    tau_m.max(lo).min(hi)
}

/// Torque delivered at the joint: limited motor torque minus friction.
pub fn joint_torque(params: &ActuatorParams, draw: &ActuatorDraw, step: &ActuatorStep) -> f64 {
    let tau_m = pd_torque(params, draw, step);
    clamp_torque(params, tau_m, step.velocity) - friction(params, step.velocity)
}

pub fn noise_std(params: &ActuatorParams, qd: f64) -> f64 {
    params.sigma_q0 + params.sigma_q1 * qd.abs()
}

/// Encoder reading: offset position, backlash side selected by the motor
/// torque, plus velocity-dependent Gaussian noise.
pub fn measured_position<R: Rng + ?Sized>(
    params: &ActuatorParams,
    draw: &ActuatorDraw,
    q: f64,
    tau_m: f64,
    qd: f64,
    rng: &mut R,
) -> f64 {
    let sigma = noise_std(params, qd);
    let noise = if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    } else {
        0.0
    };
    q + draw.encoder_offset + 0.5 * draw.backlash * (tau_m / params.tau_b).tanh() + noise
}

pub fn sample_draw<R: Rng + ?Sized>(params: &ActuatorParams, rng: &mut R) -> ActuatorDraw {
    let encoder_offset = if params.eps_q_max > 0.0 {
        rng.random_range(-params.eps_q_max..=params.eps_q_max)
    } else {
        0.0
    };
    let backlash = if params.b_max > params.b_min {
        rng.random_range(params.b_min..=params.b_max)
    } else {
        params.b_min
    };
    ActuatorDraw {
        encoder_offset,
        backlash,
        armature_scale: rng.random_range(0.8..=1.2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorOutput {
    pub tau_m: f64,
    pub tau: f64,
    pub tau_lo: f64,
    pub tau_hi: f64,
}

/// Stateful actuator: parameters, the episode draw and the previous
/// setpoint error for the head variant's derivative.
#[derive(Debug, Clone)]
pub struct Actuator {
    pub params: ActuatorParams,
    pub draw: ActuatorDraw,
    /// Multiplier on `kp`; raised when the joints are frozen.
    pub gain_scale: f64,
    prev_error: Option<f64>,
}

impl Actuator {
    pub fn new(params: ActuatorParams, draw: ActuatorDraw) -> Self {
        Self {
            params,
            draw,
            gain_scale: 1.0,
            prev_error: None,
        }
    }

    pub fn armature(&self) -> f64 {
        self.params.armature * self.draw.armature_scale
    }

    pub fn step(&mut self, setpoint: f64, q: f64, qd: f64, dt: f64) -> ActuatorOutput {
        let mut params = self.params;
        params.kp *= self.gain_scale;
        let step = ActuatorStep {
            setpoint,
            position: q,
            velocity: qd,
            prev_error: self.prev_error,
            dt,
        };
        let tau_m = pd_torque(&params, &self.draw, &step);
        self.prev_error = Some(setpoint_error(&self.draw, &step));
        let (tau_lo, tau_hi) = torque_limits(&params, qd);
        ActuatorOutput {
            tau_m,
            tau: tau_m.max(tau_lo).min(tau_hi) - friction(&params, qd),
            tau_lo,
            tau_hi,
        }
    }

    pub fn measure<R: Rng + ?Sized>(&self, q: f64, tau_m: f64, qd: f64, rng: &mut R) -> f64 {
        measured_position(&self.params, &self.draw, q, tau_m, qd, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn a1() -> ActuatorParams {
        *ActuatorTable::builtin().get(ActuatorType::A1)
    }

    fn xh() -> ActuatorParams {
        *ActuatorTable::builtin().get(ActuatorType::XH540)
    }

    fn step(err: f64, qd: f64) -> ActuatorStep {
        ActuatorStep {
            setpoint: err,
            position: 0.0,
            velocity: qd,
            prev_error: None,
            dt: ACTUATION_DT,
        }
    }

    #[test]
    fn zero_error_gives_zero_torque() {
        assert_eq!(pd_torque(&a1(), &ActuatorDraw::IDEAL, &step(0.0, 0.0)), 0.0);
        assert_eq!(joint_torque(&a1(), &ActuatorDraw::IDEAL, &step(0.0, 0.0)), 0.0);
    }

    #[test]
    fn quasi_direct_pd_scalar() {
        let tau = pd_torque(&a1(), &ActuatorDraw::IDEAL, &step(0.1, 1.0));
        assert!((tau - (15.0 * 0.1 - 0.6 * 1.0)).abs() < 1e-12);
        assert!((tau - 0.9).abs() < 1e-12);
    }

    #[test]
    fn encoder_offset_shifts_error() {
        let draw = ActuatorDraw { encoder_offset: 0.02, ..ActuatorDraw::IDEAL };
        let tau = pd_torque(&a1(), &draw, &step(0.0, 0.0));
        assert!((tau + 15.0 * 0.02).abs() < 1e-12);
    }

    #[test]
    fn head_variant_constant_error_has_no_derivative() {
        let p = xh();
        let s = ActuatorStep { prev_error: Some(0.1), ..step(0.1, 3.0) };
        assert!((pd_torque(&p, &ActuatorDraw::IDEAL, &s) - p.kp * 0.1).abs() < 1e-12);
        // first tick: derivative treated as zero
        assert!((pd_torque(&p, &ActuatorDraw::IDEAL, &step(0.1, 3.0)) - p.kp * 0.1).abs() < 1e-12);
    }

    #[test]
    fn head_variant_backward_difference() {
        let p = xh();
        let s = ActuatorStep { prev_error: Some(0.1), ..step(0.2, 0.0) };
        let expected = p.kp * 0.2 + p.kd * (0.2 - 0.1) * 600.0;
        assert!((pd_torque(&p, &ActuatorDraw::IDEAL, &s) - expected).abs() < 1e-9);
    }

    #[test]
    fn a1_limit_curve() {
        let p = a1();
        assert_eq!(torque_limits(&p, 0.0), (-34.0, 34.0));
        assert_eq!(torque_limits(&p, 7.4).1, 34.0);
        assert!((torque_limits(&p, 13.7).1 - 17.0).abs() < 1e-9);
        assert_eq!(torque_limits(&p, 20.0).1, 0.0);
        assert_eq!(torque_limits(&p, 25.0).1, 0.0);
        // braking side keeps the constant limit
        assert_eq!(torque_limits(&p, 13.7).0, -34.0);
        assert_eq!(torque_limits(&p, -13.7), (-torque_limits(&p, 13.7).1, 34.0));
    }

    #[test]
    fn go1_ramp_endpoint_is_zero() {
        let p = *ActuatorTable::builtin().get(ActuatorType::Go1);
        assert_eq!(torque_limits(&p, 28.8).1, 0.0);
    }

    #[test]
    fn stall_demand_saturates() {
        let p = a1();
        let s = step(100.0 / 15.0, 0.0);
        assert!((pd_torque(&p, &ActuatorDraw::IDEAL, &s) - 100.0).abs() < 1e-9);
        assert_eq!(joint_torque(&p, &ActuatorDraw::IDEAL, &s), 34.0);
    }

    #[test]
    fn friction_asymptote() {
        let p = a1();
        assert_eq!(friction(&p, 0.0), 0.0);
        let qd = 15.0;
        assert!((friction(&p, qd) - (0.45 + 0.023 * qd)).abs() < 1e-9);
    }

    #[test]
    fn degenerate_measurement_is_exact() {
        let mut p = a1();
        p.sigma_q0 = 0.0;
        p.sigma_q1 = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(measured_position(&p, &ActuatorDraw::IDEAL, 0.3, 5.0, 2.0, &mut rng), 0.3);
    }

    #[test]
    fn backlash_saturates_toward_torque_side() {
        let mut p = a1();
        p.sigma_q0 = 0.0;
        p.sigma_q1 = 0.0;
        let draw = ActuatorDraw { encoder_offset: 0.01, backlash: 0.012, armature_scale: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hi = measured_position(&p, &draw, 0.3, 1e3, 0.0, &mut rng);
        assert!((hi - 0.3 - 0.01 - 0.006).abs() < 1e-12);
        let lo = measured_position(&p, &draw, 0.3, -1e3, 0.0, &mut rng);
        assert!((lo - 0.3 - 0.01 + 0.006).abs() < 1e-12);
    }

    #[test]
    fn draws_are_deterministic_and_bounded() {
        let p = a1();
        let a = sample_draw(&p, &mut ChaCha8Rng::seed_from_u64(7));
        let b = sample_draw(&p, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..100_000 {
            let d = sample_draw(&p, &mut rng);
            lo = lo.min(d.backlash);
            hi = hi.max(d.backlash);
            assert!(d.encoder_offset.abs() <= 0.02);
            assert!((0.8..=1.2).contains(&d.armature_scale));
        }
        assert!(lo >= 0.005 && hi <= 0.015);
    }

    #[test]
    fn zero_offset_bound_gives_zero_offset() {
        let mut p = a1();
        p.eps_q_max = 0.0;
        let d = sample_draw(&p, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(d.encoder_offset, 0.0);
    }

    #[test]
    fn noise_std_matches_model() {
        let p = a1();
        let qd = 4.0;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| measured_position(&p, &ActuatorDraw::IDEAL, 0.0, 0.0, qd, &mut rng))
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expected = 1.80e-4 + 3.61e-5 * qd;
        assert!((var.sqrt() / expected - 1.0).abs() < 0.03);
    }

    #[test]
    fn all_tables_validate() {
        let t = ActuatorTable::builtin();
        for kind in ActuatorType::ALL {
            t.get(kind).validate().unwrap();
        }
        assert_eq!(t.get(ActuatorType::XH540).pd_variant, PdVariant::Head);
    }

    #[test]
    fn rejects_inverted_ramp() {
        let text = DEFAULT_ACTUATORS.replacen("qd_tau_max = 7.4", "qd_tau_max = 27.4", 1);
        assert!(ActuatorTable::from_toml_str(&text).is_err());
    }

    proptest! {
        #[test]
        fn friction_is_odd(qd in -30.0f64..30.0) {
            let p = a1();
            prop_assert!((friction(&p, -qd) + friction(&p, qd)).abs() < 1e-12);
        }

        #[test]
        fn limit_curve_non_increasing(a in 0.0f64..30.0, b in 0.0f64..30.0) {
            let p = a1();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(torque_limits(&p, hi).1 <= torque_limits(&p, lo).1);
            prop_assert!(torque_limits(&p, -hi).0 >= torque_limits(&p, -lo).0);
        }

        #[test]
        fn joint_torque_monotone_in_demand(t1 in -100.0f64..100.0, t2 in -100.0f64..100.0, qd in -25.0f64..25.0) {
            let p = a1();
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(clamp_torque(&p, lo, qd) <= clamp_torque(&p, hi, qd));
            let (tlo, thi) = torque_limits(&p, qd);
            let c = clamp_torque(&p, hi, qd);
            prop_assert!(c >= tlo && c <= thi);
        }

        #[test]
        fn backlash_term_is_odd(tau in -50.0f64..50.0) {
            let mut p = a1();
            p.sigma_q0 = 0.0;
            p.sigma_q1 = 0.0;
            let draw = ActuatorDraw { encoder_offset: 0.0, backlash: 0.01, armature_scale: 1.0 };
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let a = measured_position(&p, &draw, 0.0, tau, 0.0, &mut rng);
            let b = measured_position(&p, &draw, 0.0, -tau, 0.0, &mut rng);
            prop_assert!((a + b).abs() < 1e-15);
        }
    }
}
