//! Policy inputs and outputs: normalization, the MLP, the action transform
//! and the reference-tracking stub.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::features::PhaseFeatureParams;
use super::observation::{Observation, OBSERVATION_DIM};
use crate::actuator::ActuatorTable;
use crate::animation::PolicyCommand;
use crate::error::{Error, Result};
use crate::motion::{CommandRanges, PhaseMode};
use crate::robot::{JointVector, RobotModel, NUM_JOINTS};

pub const POLICY_FORMAT: &str = "stagebot-policy/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Perpetual,
    Periodic,
    Episodic,
}

impl PolicyKind {
    pub fn command_dim(self) -> usize {
        match self {
            PolicyKind::Perpetual => 8,
            PolicyKind::Periodic => 7,
            PolicyKind::Episodic => 0,
        }
    }

    pub fn phase_mode(self) -> Option<PhaseMode> {
        match self {
            PolicyKind::Perpetual => None,
            PolicyKind::Periodic => Some(PhaseMode::Periodic),
            PolicyKind::Episodic => Some(PhaseMode::Episodic),
        }
    }

    pub fn input_dim(self, features: &PhaseFeatureParams) -> usize {
        OBSERVATION_DIM + self.phase_mode().map_or(0, |m| features.dim(m)) + self.command_dim()
    }
}

pub fn command_vector(cmd: &PolicyCommand) -> Vec<f64> {
    match cmd {
        PolicyCommand::Perpetual(c) => {
            let mut v = vec![c.dh_head];
            v.extend(c.dtheta_head.as_vector().iter());
            v.push(c.h_torso);
            v.extend(c.theta_torso.as_vector().iter());
            v
        }
        PolicyCommand::Periodic(c) => {
            let mut v = vec![c.dh_head];
            v.extend(c.dtheta_head.as_vector().iter());
            v.extend([c.velocity.x, c.velocity.y, c.omega]);
            v
        }
        PolicyCommand::None => Vec::new(),
    }
}

/// Expected magnitude of every policy input, in input order:
/// observation, phase features, command.
pub fn default_input_ranges(kind: PolicyKind, features: &PhaseFeatureParams, commands: &CommandRanges) -> Vec<f64> {
    let mut r = vec![0.3, 0.3, 0.5, 0.5, 0.5, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0];
    r.extend([std::f64::consts::PI; NUM_JOINTS]);
    r.extend([10.0; NUM_JOINTS]);
    r.extend([1.0; 2 * NUM_JOINTS]);
    if let Some(m) = kind.phase_mode() {
        r.extend(std::iter::repeat_n(1.0, features.dim(m)));
    }
    let mag = |b: [f64; 2]| b[0].abs().max(b[1].abs());
    let head = [mag(commands.dh_head), mag(commands.head_roll), mag(commands.head_pitch), mag(commands.head_yaw)];
    match kind {
        PolicyKind::Perpetual => {
            r.extend(head);
            r.extend([mag(commands.h_torso), mag(commands.torso_roll), mag(commands.torso_pitch), mag(commands.torso_yaw)]);
        }
        PolicyKind::Periodic => {
            r.extend(head);
            let l = &commands.velocity;
            r.extend([l.vx, l.vy, l.omega]);
        }
        PolicyKind::Episodic => {}
    }
    r
}

/// Concatenates observation, phase features and command, each channel
/// divided by its range.
pub fn normalize_inputs(obs: &Observation, features: &[f64], command: &[f64], ranges: &[f64]) -> Result<Vec<f64>> {
    let mut x = obs.to_vec();
    x.extend_from_slice(features);
    x.extend_from_slice(command);
    if x.len() != ranges.len() {
        return Err(Error::Shape(format!("{} inputs but {} ranges", x.len(), ranges.len())));
    }
    Ok(x.iter().zip(ranges).map(|(v, r)| v / r).collect())
}

pub fn denormalize(x: &[f64], ranges: &[f64]) -> Vec<f64> {
    x.iter().zip(ranges).map(|(v, r)| v * r).collect()
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// Row-major, one row per output.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PolicyFile {
    format: String,
    kind: PolicyKind,
    #[serde(default)]
    clip: Option<String>,
    input_ranges: Vec<f64>,
    layers: Vec<DenseLayer>,
}

/// Fully connected network with ELU hidden activations and a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    pub kind: PolicyKind,
    pub clip: Option<String>,
    pub input_ranges: Vec<f64>,
    layers: Vec<(DMatrix<f64>, DVector<f64>)>,
}

impl PolicyNet {
    pub fn new(kind: PolicyKind, input_ranges: Vec<f64>, layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("policy has no layers".into()));
        }
        let mut dense = Vec::with_capacity(layers.len());
        let mut width = input_ranges.len();
        for (k, l) in layers.into_iter().enumerate() {
            let rows = l.weights.len();
            if rows == 0 || l.bias.len() != rows {
                return Err(Error::Shape(format!("layer {k}: {rows} rows but {} biases", l.bias.len())));
            }
            if let Some(r) = l.weights.iter().position(|r| r.len() != width) {
                return Err(Error::Shape(format!(
                    "layer {k} row {r}: {} columns, expected {width}",
                    l.weights[r].len()
                )));
            }
            let flat = l.weights.iter().flatten().chain(&l.bias);
            if flat.clone().any(|v| !v.is_finite()) {
                return Err(Error::Shape(format!("layer {k} has non-finite parameters")));
            }
            let m = DMatrix::from_row_iterator(rows, width, l.weights.into_iter().flatten());
            dense.push((m, DVector::from_vec(l.bias)));
            width = rows;
        }
        if input_ranges.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Shape("input ranges must be positive".into()));
        }
        Ok(Self {
            kind,
            clip: None,
            input_ranges,
            layers: dense,
        })
    }

    /// Network with the given layer widths and seeded uniform weights, for
    /// exercising the inference path without trained parameters.
    pub fn seeded(kind: PolicyKind, input_ranges: Vec<f64>, hidden: &[usize], output: usize, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut width = input_ranges.len();
        let mut layers = Vec::new();
        for &rows in hidden.iter().chain(std::iter::once(&output)) {
            let s = (1.0 / width as f64).sqrt();
            layers.push(DenseLayer {
                weights: (0..rows).map(|_| (0..width).map(|_| rng.random_range(-s..s)).collect()).collect(),
                bias: vec![0.0; rows],
            });
            width = rows;
        }
        Self::new(kind, input_ranges, layers).expect("consistent shapes")
    }

    pub fn input_dim(&self) -> usize {
        self.input_ranges.len()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.0.nrows())
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.0.nrows()).collect()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!("policy expects {} inputs, got {}", self.input_dim(), input.len())));
        }
        let mut x = DVector::from_column_slice(input);
        let last = self.layers.len() - 1;
        for (k, (w, b)) in self.layers.iter().enumerate() {
            x = w * x + b;
            if k < last {
                x.apply(|v| *v = elu(*v));
            }
        }
        Ok(x.iter().copied().collect())
    }

    pub fn to_json(&self) -> String {
        let file = PolicyFile {
            format: POLICY_FORMAT.into(),
            kind: self.kind,
            clip: self.clip.clone(),
            input_ranges: self.input_ranges.clone(),
            layers: self
                .layers
                .iter()
                .map(|(w, b)| DenseLayer {
                    weights: w.row_iter().map(|r| r.iter().copied().collect()).collect(),
                    bias: b.iter().copied().collect(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: PolicyFile = serde_json::from_str(text).map_err(|source| Error::Json {
            what: "policy weights".into(),
            source,
        })?;
        if f.format != POLICY_FORMAT {
            return Err(Error::config(format!("policy format `{}`, expected `{POLICY_FORMAT}`", f.format)));
        }
        let mut net = Self::new(f.kind, f.input_ranges, f.layers)?;
        net.clip = f.clip;
        Ok(net)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks that the network fits a policy slot of the given kind.
    pub fn check_slot(&self, kind: PolicyKind, features: &PhaseFeatureParams) -> Result<()> {
        let want = kind.input_dim(features);
        if self.kind != kind || self.input_dim() != want || self.output_dim() != NUM_JOINTS {
            return Err(Error::Shape(format!(
                "{:?} policy with {} inputs / {} outputs does not fit a {kind:?} slot ({want} / {NUM_JOINTS})",
                self.kind,
                self.input_dim(),
                self.output_dim()
            )));
        }
        Ok(())
    }
}

/// Affine action map around the nominal pose and the setpoint clip around
/// the measured position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTransform {
    pub nominal: JointVector,
    pub range: JointVector,
    pub delta_max: JointVector,
}

/// Default per-joint action range: hip yaw, hip roll, hip pitch, knee, ankle
/// for both legs, then the four neck joints.
pub const DEFAULT_ACTION_RANGE: [f64; NUM_JOINTS] = [0.3, 0.3, 0.6, 0.8, 0.6, 0.3, 0.3, 0.6, 0.8, 0.6, 0.6, 0.4, 0.6, 0.6];

impl ActionTransform {
    /// Range from [`DEFAULT_ACTION_RANGE`], clip width `tau_max / kp` so the
    /// peak torque stays reachable.
    pub fn new(model: &RobotModel, actuators: &ActuatorTable) -> Self {
        let kinds = model.layout.actuator_types();
        Self {
            nominal: model.nominal_q(),
            range: JointVector::from_row_slice(&DEFAULT_ACTION_RANGE),
            delta_max: JointVector::from_fn(|i, _| {
                let p = actuators.get(kinds[i]);
                p.tau_max / p.kp
            }),
        }
    }

    pub fn unclipped(&self, action: &JointVector) -> JointVector {
        self.nominal + self.range.component_mul(action)
    }

    pub fn to_setpoints(&self, action: &JointVector, measured_q: &JointVector) -> JointVector {
        let raw = self.unclipped(action);
        JointVector::from_fn(|i, _| raw[i].clamp(measured_q[i] - self.delta_max[i], measured_q[i] + self.delta_max[i]))
    }

    pub fn to_action(&self, setpoints: &JointVector) -> JointVector {
        (setpoints - self.nominal).component_div(&self.range)
    }
}

/// Stand-in for a trained network: the action that puts the setpoints on the
/// reference joint positions.
pub fn stub_policy(reference_q: &JointVector, transform: &ActionTransform) -> JointVector {
    transform.to_action(reference_q)
}
