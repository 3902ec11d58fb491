//! Random pushes: per body and category, an on/off renewal process with a
//! wrench drawn uniformly per dimension while on.

use std::path::Path;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use stagebot_core::robot::{JointVector, LinkPoses, RobotModel, LEG_JOINTS};

use crate::dynamics::{joint_frame, joint_subtrees};
use crate::error::{SimError, SimResult};

pub const DISTURBANCE_SCHEMA: &str = "stagebot-disturbances/1";
pub const DEFAULT_DISTURBANCES: &str = include_str!("../assets/disturbances.toml");

/// Bounds of one row. Each wrench component gets an absolute value drawn
/// from its range and a random sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceCategory {
    pub name: String,
    /// Link names.
    pub bodies: Vec<String>,
    pub force_xy: [f64; 2],
    pub force_z: [f64; 2],
    pub torque_xy: [f64; 2],
    pub torque_z: [f64; 2],
    pub on: [f64; 2],
    pub off: [f64; 2],
}

impl DisturbanceCategory {
    fn validate(&self, model: Option<&RobotModel>) -> SimResult<()> {
        let ranges = [self.force_xy, self.force_z, self.torque_xy, self.torque_z, self.on, self.off];
        if ranges.iter().any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && lo <= hi)) {
            return Err(SimError::Scenario(format!("disturbance `{}`: ranges must be 0 <= lo <= hi", self.name)));
        }
        if self.on[0] <= 0.0 || self.off[0] <= 0.0 {
            return Err(SimError::Scenario(format!("disturbance `{}`: durations must be positive", self.name)));
        }
        if let Some(m) = model {
            if let Some(b) = self.bodies.iter().find(|b| m.layout.link_index(b).is_none()) {
                return Err(SimError::Scenario(format!("disturbance `{}`: unknown body `{b}`", self.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceConfig {
    pub schema: String,
    pub categories: Vec<DisturbanceCategory>,
}

impl DisturbanceConfig {
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_DISTURBANCES).expect("bundled disturbance table parses")
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> SimResult<Self> {
        let c: Self = toml::from_str(text).map_err(|source| stagebot_core::Error::Toml {
            what: "disturbance config".into(),
            source,
        })?;
        if c.schema != DISTURBANCE_SCHEMA {
            return Err(SimError::Scenario(format!("disturbance schema `{}`, expected `{DISTURBANCE_SCHEMA}`", c.schema)));
        }
        for cat in &c.categories {
            cat.validate(None)?;
        }
        Ok(c)
    }

    pub fn category(&self, name: &str) -> Option<&DisturbanceCategory> {
        self.categories.iter().find(|c| c.name == name)
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn signed<R: Rng + ?Sized>(rng: &mut R, range: [f64; 2]) -> f64 {
    let v = uniform(rng, range);
    if rng.random::<bool>() {
        v
    } else {
        -v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub const ZERO: Wrench = Wrench {
        force: Vector3::new(0.0, 0.0, 0.0),
        torque: Vector3::new(0.0, 0.0, 0.0),
    };
}

pub fn sample_wrench<R: Rng + ?Sized>(cat: &DisturbanceCategory, rng: &mut R) -> Wrench {
    Wrench {
        force: Vector3::new(signed(rng, cat.force_xy), signed(rng, cat.force_xy), signed(rng, cat.force_z)),
        torque: Vector3::new(signed(rng, cat.torque_xy), signed(rng, cat.torque_xy), signed(rng, cat.torque_z)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceEvent {
    pub category: String,
    pub body: String,
    pub start: f64,
    pub duration: f64,
    pub wrench: Wrench,
}

#[derive(Debug, Clone)]
struct Channel {
    category: usize,
    body: String,
    link: usize,
    /// Time of the next on/off switch.
    next: f64,
    active: Option<Wrench>,
}

/// Independent renewal process for every (category, body) pair. Every
/// channel starts in its off state.
#[derive(Debug, Clone)]
pub struct DisturbanceSampler<R> {
    config: DisturbanceConfig,
    channels: Vec<Channel>,
    rng: R,
    events: Vec<DisturbanceEvent>,
}

impl<R: Rng> DisturbanceSampler<R> {
    pub fn new(config: DisturbanceConfig, model: &RobotModel, mut rng: R) -> SimResult<Self> {
        let mut channels = Vec::new();
        for (ci, cat) in config.categories.iter().enumerate() {
            cat.validate(Some(model))?;
            for b in &cat.bodies {
                channels.push(Channel {
                    category: ci,
                    body: b.clone(),
                    link: model.layout.link_index(b).expect("validated"),
                    next: uniform(&mut rng, cat.off),
                    active: None,
                });
            }
        }
        Ok(Self {
            config,
            channels,
            rng,
            events: Vec::new(),
        })
    }

    /// Advances every channel to time `t` (non-decreasing between calls).
    pub fn advance(&mut self, t: f64) {
        for ch in &mut self.channels {
            let cat = &self.config.categories[ch.category];
            while t >= ch.next {
                if ch.active.is_some() {
                    ch.active = None;
                    ch.next += uniform(&mut self.rng, cat.off);
                } else {
                    let w = sample_wrench(cat, &mut self.rng);
                    let duration = uniform(&mut self.rng, cat.on);
                    self.events.push(DisturbanceEvent {
                        category: cat.name.clone(),
                        body: ch.body.clone(),
                        start: ch.next,
                        duration,
                        wrench: w,
                    });
                    ch.active = Some(w);
                    ch.next += duration;
                }
            }
        }
    }

    /// Active wrenches summed per link, `(link index, wrench)`.
    pub fn active(&self) -> Vec<(usize, Wrench)> {
        let mut out: Vec<(usize, Wrench)> = Vec::new();
        for ch in &self.channels {
            if let Some(w) = ch.active {
                match out.iter_mut().find(|(l, _)| *l == ch.link) {
                    Some((_, acc)) => {
                        acc.force += w.force;
                        acc.torque += w.torque;
                    }
                    None => out.push((ch.link, w)),
                }
            }
        }
        out
    }

    pub fn events(&self) -> &[DisturbanceEvent] {
        &self.events
    }
}

/// Maps body wrenches to joint torques with the transposed Jacobian of the
/// chain from the torso. Wrenches on the torso itself are reacted by the
/// legs in contact, shared equally.
#[derive(Debug, Clone)]
pub struct WrenchMapping {
    subtrees: Vec<Vec<usize>>,
    torso: usize,
    pub coupling: f64,
}

impl WrenchMapping {
    pub fn new(model: &RobotModel, coupling: f64) -> Self {
        Self {
            subtrees: joint_subtrees(model),
            torso: model.torso_link(),
            coupling,
        }
    }

    pub fn joint_torques(
        &self,
        model: &RobotModel,
        poses: &LinkPoses,
        wrenches: &[(usize, Wrench)],
        contacts: [bool; 2],
    ) -> JointVector {
        let mut tau = JointVector::zeros();
        let moment = |j: usize, link: usize, w: &Wrench| {
            let (o, a) = joint_frame(model, poses, j);
            let p = poses.get(link) * nalgebra::Point3::from(model.layout.links[link].com);
            a.dot(&(w.torque + (p.coords - o).cross(&w.force)))
        };
        for (link, w) in wrenches {
            if *link == self.torso {
                let n = contacts.iter().filter(|c| **c).count();
                if n == 0 {
                    continue;
                }
                for j in LEG_JOINTS {
                    let side = if j < 5 { 0 } else { 1 };
                    if contacts[side] {
                        tau[j] -= moment(j, *link, w) / n as f64;
                    }
                }
            } else {
                for (j, sub) in self.subtrees.iter().enumerate() {
                    if sub.contains(link) {
                        tau[j] += moment(j, *link, w);
                    }
                }
            }
        }
        tau * self.coupling
    }
}
