//! Single-actuator test bench: a setpoint schedule against a locked,
//! inertial or velocity-driven load.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stagebot_core::actuator::{sample_draw, Actuator, ActuatorDraw, ActuatorTable, ACTUATION_DT};
use stagebot_core::robot::ActuatorType;

use crate::dynamics::step_joint;
use crate::error::{SimError, SimResult};

pub const BENCH_SCHEMA: &str = "stagebot-bench/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchLoad {
    /// Output shaft clamped at zero.
    Locked,
    /// Free rotating inertia (kg m^2) on top of the armature.
    Inertial { inertia: f64 },
    /// Shaft spun at the scheduled velocity by the bench motor.
    Driven,
}

/// Schedule keypoint; values are interpolated linearly in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchPoint {
    pub t: f64,
    pub setpoint: f64,
    #[serde(default)]
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchProfile {
    pub schema: String,
    pub actuator: ActuatorType,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Draw encoder offset, backlash and armature from the seed.
    #[serde(default)]
    pub randomize: bool,
    pub load: BenchLoad,
    pub points: Vec<BenchPoint>,
}

impl BenchProfile {
    pub fn load(path: &Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> SimResult<Self> {
        let p: Self = toml::from_str(text).map_err(|source| stagebot_core::Error::Toml {
            what: "bench profile".into(),
            source,
        })?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> SimResult<()> {
        let bad = |m: &str| Err(SimError::Scenario(format!("bench profile: {m}")));
        if self.schema != BENCH_SCHEMA {
            return bad(&format!("schema `{}`, expected `{BENCH_SCHEMA}`", self.schema));
        }
        if !(self.duration > 0.0) {
            return bad("duration must be positive");
        }
        if self.points.is_empty() {
            return bad("needs at least one point");
        }
        if self.points.windows(2).any(|w| w[1].t < w[0].t) {
            return bad("points must be in time order");
        }
        if let BenchLoad::Inertial { inertia } = self.load {
            if !(inertia >= 0.0) {
                return bad("inertia must be non-negative");
            }
        }
        Ok(())
    }

    /// `(setpoint, velocity)` at `t`, held constant outside the points.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let p = &self.points;
        let i = p.partition_point(|k| k.t <= t);
        if i == 0 {
            return (p[0].setpoint, p[0].velocity);
        }
        if i == p.len() {
            let l = p[p.len() - 1];
            return (l.setpoint, l.velocity);
        }
        let (a, b) = (p[i - 1], p[i]);
        let s = (t - a.t) / (b.t - a.t);
        (a.setpoint + (b.setpoint - a.setpoint) * s, a.velocity + (b.velocity - a.velocity) * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub t: f64,
    pub setpoint: f64,
    pub q: f64,
    pub qd: f64,
    pub tau_m: f64,
    pub tau: f64,
    pub tau_lo: f64,
    pub tau_hi: f64,
    /// Encoder reading.
    pub q_hat: f64,
}

pub fn actuator_bench(profile: &BenchProfile, table: &ActuatorTable) -> SimResult<Vec<BenchRow>> {
    profile.validate()?;
    let params = *table.get(profile.actuator);
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let draw = if profile.randomize {
        sample_draw(&params, &mut rng)
    } else {
        ActuatorDraw::IDEAL
    };
    let mut act = Actuator::new(params, draw);
    let ticks = (profile.duration / ACTUATION_DT).round() as usize;
    let (mut q, mut qd) = (0.0, profile.at(0.0).1);
    if profile.load == BenchLoad::Locked {
        qd = 0.0;
    }
    let mut rows = Vec::with_capacity(ticks + 1);
    for k in 0..=ticks {
        let t = k as f64 * ACTUATION_DT;
        let (setpoint, velocity) = profile.at(t);
        if profile.load == BenchLoad::Driven {
            qd = velocity;
        }
        let out = act.step(setpoint, q, qd, ACTUATION_DT);
        rows.push(BenchRow {
            t,
            setpoint,
            q,
            qd,
            tau_m: out.tau_m,
            tau: out.tau,
            tau_lo: out.tau_lo,
            tau_hi: out.tau_hi,
            q_hat: act.measure(q, out.tau_m, qd, &mut rng),
        });
        match profile.load {
            BenchLoad::Locked => {}
            BenchLoad::Inertial { inertia } => {
                (q, qd) = step_joint(q, qd, inertia + act.armature(), out.tau, ACTUATION_DT);
            }
            BenchLoad::Driven => q += qd * ACTUATION_DT,
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], w: W) -> SimResult<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |source: csv::Error| SimError::Csv {
        what: "bench trace".into(),
        source,
    };
    for r in rows {
        out.serialize(r).map_err(err)?;
    }
    out.flush().map_err(|e| err(e.into()))?;
    Ok(())
}
