//! Imitation, regularization and survival rewards, termination, and the
//! phase-windowed weight schedule.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::boxminus_angle;
use crate::robot::{JointVector, KinematicTargetState, RobotConfig, RobotModel, LEG_JOINTS, NECK_JOINTS};

pub const REWARD_SCHEMA: &str = "stagebot-rewards/1";
pub const DEFAULT_REWARDS: &str = include_str!("../assets/rewards.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardTerm {
    TorsoPositionXy,
    TorsoOrientation,
    LinearVelocityXy,
    LinearVelocityZ,
    AngularVelocityXy,
    AngularVelocityZ,
    LegJointPositions,
    NeckJointPositions,
    LegJointVelocities,
    NeckJointVelocities,
    Contact,
    JointTorques,
    JointAccelerations,
    LegActionRate,
    NeckActionRate,
    LegActionAcc,
    NeckActionAcc,
    Survival,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardGroup {
    Imitation,
    Regularization,
    Survival,
}

impl RewardTerm {
    pub const ALL: [RewardTerm; 18] = [
        RewardTerm::TorsoPositionXy,
        RewardTerm::TorsoOrientation,
        RewardTerm::LinearVelocityXy,
        RewardTerm::LinearVelocityZ,
        RewardTerm::AngularVelocityXy,
        RewardTerm::AngularVelocityZ,
        RewardTerm::LegJointPositions,
        RewardTerm::NeckJointPositions,
        RewardTerm::LegJointVelocities,
        RewardTerm::NeckJointVelocities,
        RewardTerm::Contact,
        RewardTerm::JointTorques,
        RewardTerm::JointAccelerations,
        RewardTerm::LegActionRate,
        RewardTerm::NeckActionRate,
        RewardTerm::LegActionAcc,
        RewardTerm::NeckActionAcc,
        RewardTerm::Survival,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RewardTerm::TorsoPositionXy => "torso_position_xy",
            RewardTerm::TorsoOrientation => "torso_orientation",
            RewardTerm::LinearVelocityXy => "linear_velocity_xy",
            RewardTerm::LinearVelocityZ => "linear_velocity_z",
            RewardTerm::AngularVelocityXy => "angular_velocity_xy",
            RewardTerm::AngularVelocityZ => "angular_velocity_z",
            RewardTerm::LegJointPositions => "leg_joint_positions",
            RewardTerm::NeckJointPositions => "neck_joint_positions",
            RewardTerm::LegJointVelocities => "leg_joint_velocities",
            RewardTerm::NeckJointVelocities => "neck_joint_velocities",
            RewardTerm::Contact => "contact",
            RewardTerm::JointTorques => "joint_torques",
            RewardTerm::JointAccelerations => "joint_accelerations",
            RewardTerm::LegActionRate => "leg_action_rate",
            RewardTerm::NeckActionRate => "neck_action_rate",
            RewardTerm::LegActionAcc => "leg_action_acc",
            RewardTerm::NeckActionAcc => "neck_action_acc",
            RewardTerm::Survival => "survival",
        }
    }

    pub fn group(self) -> RewardGroup {
        use RewardTerm::*;
        match self {
            JointTorques | JointAccelerations | LegActionRate | NeckActionRate | LegActionAcc | NeckActionAcc => {
                RewardGroup::Regularization
            }
            Survival => RewardGroup::Survival,
            _ => RewardGroup::Imitation,
        }
    }

    /// Coefficient `k` of the `exp(-k e^2)` terms.
    pub fn exp_scale(self) -> Option<f64> {
        match self {
            RewardTerm::TorsoPositionXy => Some(200.0),
            RewardTerm::TorsoOrientation => Some(20.0),
            RewardTerm::LinearVelocityXy | RewardTerm::LinearVelocityZ => Some(8.0),
            RewardTerm::AngularVelocityXy | RewardTerm::AngularVelocityZ => Some(2.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub torso_position_xy: f64,
    pub torso_orientation: f64,
    pub linear_velocity_xy: f64,
    pub linear_velocity_z: f64,
    pub angular_velocity_xy: f64,
    pub angular_velocity_z: f64,
    pub leg_joint_positions: f64,
    pub neck_joint_positions: f64,
    pub leg_joint_velocities: f64,
    pub neck_joint_velocities: f64,
    pub contact: f64,
    pub joint_torques: f64,
    pub joint_accelerations: f64,
    pub leg_action_rate: f64,
    pub neck_action_rate: f64,
    pub leg_action_acc: f64,
    pub neck_action_acc: f64,
    pub survival: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            torso_position_xy: 1.0,
            torso_orientation: 1.0,
            linear_velocity_xy: 1.0,
            linear_velocity_z: 1.0,
            angular_velocity_xy: 0.5,
            angular_velocity_z: 0.5,
            leg_joint_positions: 15.0,
            neck_joint_positions: 100.0,
            leg_joint_velocities: 1.0e-3,
            neck_joint_velocities: 1.0,
            contact: 1.0,
            joint_torques: 1.0e-3,
            joint_accelerations: 2.5e-6,
            leg_action_rate: 1.5,
            neck_action_rate: 5.0,
            leg_action_acc: 0.45,
            neck_action_acc: 5.0,
            survival: 20.0,
        }
    }
}

impl RewardWeights {
    pub fn get(&self, term: RewardTerm) -> f64 {
        *self.slot(term)
    }

    pub fn get_mut(&mut self, term: RewardTerm) -> &mut f64 {
        use RewardTerm::*;
        match term {
            TorsoPositionXy => &mut self.torso_position_xy,
            TorsoOrientation => &mut self.torso_orientation,
            LinearVelocityXy => &mut self.linear_velocity_xy,
            LinearVelocityZ => &mut self.linear_velocity_z,
            AngularVelocityXy => &mut self.angular_velocity_xy,
            AngularVelocityZ => &mut self.angular_velocity_z,
            LegJointPositions => &mut self.leg_joint_positions,
            NeckJointPositions => &mut self.neck_joint_positions,
            LegJointVelocities => &mut self.leg_joint_velocities,
            NeckJointVelocities => &mut self.neck_joint_velocities,
            Contact => &mut self.contact,
            JointTorques => &mut self.joint_torques,
            JointAccelerations => &mut self.joint_accelerations,
            LegActionRate => &mut self.leg_action_rate,
            NeckActionRate => &mut self.neck_action_rate,
            LegActionAcc => &mut self.leg_action_acc,
            NeckActionAcc => &mut self.neck_action_acc,
            Survival => &mut self.survival,
        }
    }

    fn slot(&self, term: RewardTerm) -> &f64 {
        use RewardTerm::*;
        match term {
            TorsoPositionXy => &self.torso_position_xy,
            TorsoOrientation => &self.torso_orientation,
            LinearVelocityXy => &self.linear_velocity_xy,
            LinearVelocityZ => &self.linear_velocity_z,
            AngularVelocityXy => &self.angular_velocity_xy,
            AngularVelocityZ => &self.angular_velocity_z,
            LegJointPositions => &self.leg_joint_positions,
            NeckJointPositions => &self.neck_joint_positions,
            LegJointVelocities => &self.leg_joint_velocities,
            NeckJointVelocities => &self.neck_joint_velocities,
            Contact => &self.contact,
            JointTorques => &self.joint_torques,
            JointAccelerations => &self.joint_accelerations,
            LegActionRate => &self.leg_action_rate,
            NeckActionRate => &self.neck_action_rate,
            LegActionAcc => &self.leg_action_acc,
            NeckActionAcc => &self.neck_action_acc,
            Survival => &self.survival,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in RewardTerm::ALL {
            let w = self.get(t);
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::config(format!("reward weight `{}` must be non-negative, got {w}", t.name())));
            }
        }
        Ok(())
    }
}

/// Extra weight on one term inside an open phase interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmphasisWindow {
    pub term: RewardTerm,
    pub phi_start: f64,
    pub phi_end: f64,
    pub w_extra: f64,
}

impl EmphasisWindow {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.phi_start)
            && (0.0..=1.0).contains(&self.phi_end)
            && self.phi_start < self.phi_end
            && self.w_extra >= 0.0;
        if !ok {
            return Err(Error::config(format!("bad emphasis window on `{}`", self.term.name())));
        }
        Ok(())
    }
}

pub fn scheduled_weight(phi: f64, w0: f64, window: &EmphasisWindow) -> f64 {
    if window.phi_start < phi && phi < window.phi_end {
        w0 + window.w_extra
    } else {
        w0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    pub schema: String,
    #[serde(default)]
    pub weights: RewardWeights,
    #[serde(default)]
    pub windows: Vec<EmphasisWindow>,
    /// Head or torso proxies closer than this to the ground terminate.
    #[serde(default = "default_clearance")]
    pub ground_clearance: f64,
}

fn default_clearance() -> f64 {
    0.01
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self::builtin()
    }
}

impl RewardConfig {
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_REWARDS).expect("bundled reward config parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: RewardConfig = toml::from_str(text).map_err(|source| Error::Toml {
            what: "reward config".into(),
            source,
        })?;
        if c.schema != REWARD_SCHEMA {
            return Err(Error::config(format!("reward schema `{}`, expected `{REWARD_SCHEMA}`", c.schema)));
        }
        c.weights.validate()?;
        for w in &c.windows {
            w.validate()?;
        }
        Ok(c)
    }

    /// Weights with every window applied at phase `phi`.
    pub fn weights_at(&self, phi: f64) -> RewardWeights {
        let mut w = self.weights;
        for win in &self.windows {
            let slot = w.get_mut(win.term);
            *slot = scheduled_weight(phi, *slot, win);
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermValue {
    pub term: RewardTerm,
    /// Unweighted value as written in the reward table.
    pub value: f64,
    pub weight: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub terms: Vec<TermValue>,
    pub imitation: f64,
    pub regularization: f64,
    pub survival: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn from_values(values: &[(RewardTerm, f64)], weights: &RewardWeights) -> Self {
        let mut b = RewardBreakdown {
            terms: Vec::with_capacity(values.len()),
            imitation: 0.0,
            regularization: 0.0,
            survival: 0.0,
            total: 0.0,
        };
        for &(term, value) in values {
            let weight = weights.get(term);
            let weighted = weight * value;
            match term.group() {
                RewardGroup::Imitation => b.imitation += weighted,
                RewardGroup::Regularization => b.regularization += weighted,
                RewardGroup::Survival => b.survival += weighted,
            }
            b.terms.push(TermValue {
                term,
                value,
                weight,
                weighted,
            });
        }
        b.total = b.terms.iter().map(|t| t.weighted).sum();
        b
    }

    pub fn get(&self, term: RewardTerm) -> Option<&TermValue> {
        self.terms.iter().find(|t| t.term == term)
    }

    pub fn csv_header() -> String {
        let mut cols: Vec<&str> = RewardTerm::ALL.iter().map(|t| t.name()).collect();
        cols.extend(["imitation", "regularization", "survival", "total"]);
        cols.join(",")
    }

    /// Weighted values in [`RewardTerm::ALL`] order, then the group totals.
    pub fn csv_row(&self) -> String {
        let mut cols: Vec<String> = RewardTerm::ALL
            .iter()
            .map(|t| self.get(*t).map_or(0.0, |v| v.weighted).to_string())
            .collect();
        cols.extend([self.imitation, self.regularization, self.survival, self.total].map(|v| v.to_string()));
        cols.join(",")
    }
}

fn sq_xy(v: &Vector3<f64>) -> f64 {
    v.x * v.x + v.y * v.y
}

fn sq_range(v: &JointVector, r: std::ops::Range<usize>) -> f64 {
    v.rows(r.start, r.len()).norm_squared()
}

/// Unweighted imitation terms between the simulated and the target state.
pub fn imitation_terms(sim: &KinematicTargetState, target: &KinematicTargetState) -> Vec<(RewardTerm, f64)> {
    use RewardTerm::*;
    let e = |t: RewardTerm, sq: f64| (t, (-t.exp_scale().expect("exp term") * sq).exp());
    let dv = sim.linear_velocity - target.linear_velocity;
    let dw = sim.angular_velocity - target.angular_velocity;
    let dq = sim.q - target.q;
    let dqd = sim.qd - target.qd;
    let contact = (sim.contact_left == target.contact_left) as u8 + (sim.contact_right == target.contact_right) as u8;
    vec![
        e(TorsoPositionXy, sq_xy(&(sim.position - target.position))),
        e(TorsoOrientation, boxminus_angle(&sim.orientation, &target.orientation).powi(2)),
        e(LinearVelocityXy, sq_xy(&dv)),
        e(LinearVelocityZ, dv.z * dv.z),
        e(AngularVelocityXy, sq_xy(&dw)),
        e(AngularVelocityZ, dw.z * dw.z),
        (LegJointPositions, -sq_range(&dq, LEG_JOINTS)),
        (NeckJointPositions, -sq_range(&dq, NECK_JOINTS)),
        (LegJointVelocities, -sq_range(&dqd, LEG_JOINTS)),
        (NeckJointVelocities, -sq_range(&dqd, NECK_JOINTS)),
        (Contact, contact as f64),
    ]
}

/// Unweighted regularization terms. `actions` is `[a_t, a_{t-1}, a_{t-2}]`.
pub fn regularization_terms(tau: &JointVector, qdd: &JointVector, actions: [&JointVector; 3]) -> Vec<(RewardTerm, f64)> {
    use RewardTerm::*;
    let [a, a1, a2] = actions;
    let rate = a - a1;
    let acc = a - a1 * 2.0 + a2;
    vec![
        (JointTorques, -tau.norm_squared()),
        (JointAccelerations, -qdd.norm_squared()),
        (LegActionRate, -sq_range(&rate, LEG_JOINTS)),
        (NeckActionRate, -sq_range(&rate, NECK_JOINTS)),
        (LegActionAcc, -sq_range(&acc, LEG_JOINTS)),
        (NeckActionAcc, -sq_range(&acc, NECK_JOINTS)),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    HeadGround,
    TorsoGround,
    SelfCollision,
}

pub fn termination(model: &RobotModel, sim: &KinematicTargetState, ground_clearance: f64) -> Option<Termination> {
    let poses = model.fk(&sim.base_pose(), &sim.q);
    let (head, torso) = model.ground_clearance(&poses);
    if torso < ground_clearance {
        Some(Termination::TorsoGround)
    } else if head < ground_clearance {
        Some(Termination::HeadGround)
    } else if model.head_torso_clearance_poses(&poses) < 0.0 {
        Some(Termination::SelfCollision)
    } else {
        None
    }
}

/// Weighted survival reward and the termination verdict.
pub fn survival_and_termination(
    model: &RobotModel,
    sim: &KinematicTargetState,
    weights: &RewardWeights,
    ground_clearance: f64,
) -> (f64, Option<Termination>) {
    let t = termination(model, sim, ground_clearance);
    (if t.is_none() { weights.survival } else { 0.0 }, t)
}

/// Backward-difference joint acceleration at the reward tick.
pub fn joint_acceleration(qd: &JointVector, prev_qd: &JointVector, dt: f64) -> JointVector {
    (qd - prev_qd) / dt
}

pub struct RewardInputs<'a> {
    pub sim: &'a KinematicTargetState,
    pub target: &'a KinematicTargetState,
    pub tau: &'a JointVector,
    pub qdd: &'a JointVector,
    pub actions: [&'a JointVector; 3],
}

/// Full breakdown. A terminated state earns no survival reward.
pub fn evaluate(model: &RobotModel, inputs: &RewardInputs, config: &RewardConfig, phi: f64) -> (RewardBreakdown, Option<Termination>) {
    let weights = config.weights_at(phi);
    let mut values = imitation_terms(inputs.sim, inputs.target);
    values.extend(regularization_terms(inputs.tau, inputs.qdd, inputs.actions));
    let t = termination(model, inputs.sim, config.ground_clearance);
    values.push((RewardTerm::Survival, if t.is_none() { 1.0 } else { 0.0 }));
    (RewardBreakdown::from_values(&values, &weights), t)
}

pub fn total_reward(b: &RewardBreakdown) -> f64 {
    b.imitation + b.regularization + b.survival
}

/// Kinematic state of a configuration at rest, for scoring poses.
pub fn state_at_rest(config: &RobotConfig) -> KinematicTargetState {
    KinematicTargetState {
        position: config.position,
        orientation: config.orientation,
        linear_velocity: Vector3::zeros(),
        angular_velocity: Vector3::zeros(),
        q: config.q,
        qd: JointVector::zeros(),
        contact_left: true,
        contact_right: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{iso, rot_z, Euler};
    use crate::robot::idx;
    use proptest::prelude::*;

    fn nominal() -> KinematicTargetState {
        state_at_rest(&RobotModel::builtin().nominal_pose())
    }

    fn zeros() -> JointVector {
        JointVector::zeros()
    }

    fn full(sim: &KinematicTargetState, target: &KinematicTargetState) -> RewardBreakdown {
        let z = zeros();
        let inputs = RewardInputs {
            sim,
            target,
            tau: &z,
            qdd: &z,
            actions: [&z, &z, &z],
        };
        evaluate(&RobotModel::builtin(), &inputs, &RewardConfig::builtin(), 0.5).0
    }

    #[test]
    fn builtin_file_matches_table_defaults() {
        assert_eq!(RewardConfig::builtin().weights, RewardWeights::default());
    }

    #[test]
    fn zero_error_breakdown() {
        let s = nominal();
        let b = full(&s, &s);
        for t in RewardTerm::ALL.iter().filter(|t| t.exp_scale().is_some()) {
            assert_eq!(b.get(*t).unwrap().value, 1.0);
        }
        assert_eq!(b.get(RewardTerm::Contact).unwrap().value, 2.0);
        assert_eq!(b.survival, 20.0);
        assert_eq!(b.regularization, 0.0);
        // Oracle: weights of the six exp terms + contact 2 * 1 + survival.
        let w = RewardWeights::default();
        let want = w.torso_position_xy
            + w.torso_orientation
            + w.linear_velocity_xy
            + w.linear_velocity_z
            + w.angular_velocity_xy
            + w.angular_velocity_z
            + 2.0 * w.contact
            + w.survival;
        assert_eq!(b.total, want);
        assert_eq!(b.total, 27.0);
        assert_eq!(total_reward(&b), b.total);
    }

    #[test]
    fn position_error_of_ten_centimeters() {
        let t = nominal();
        let mut s = t.clone();
        s.position.x += 0.1;
        let v = full(&s, &t).get(RewardTerm::TorsoPositionXy).unwrap().value;
        assert!((v - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn one_contact_mismatch() {
        let t = nominal();
        let mut s = t.clone();
        s.contact_left = false;
        assert_eq!(full(&s, &t).get(RewardTerm::Contact).unwrap().value, 1.0);
    }

    #[test]
    fn leg_action_step() {
        let a0 = zeros();
        let mut a = zeros();
        a[idx::L_KP] = 0.1;
        let v = regularization_terms(&zeros(), &zeros(), [&a, &a0, &a0]);
        let rate = v.iter().find(|(t, _)| *t == RewardTerm::LegActionRate).unwrap().1;
        assert!((rate + 0.01).abs() < 1e-15);
        let b = RewardBreakdown::from_values(&v, &RewardWeights::default());
        assert!((b.get(RewardTerm::LegActionRate).unwrap().weighted + 0.015).abs() < 1e-15);
        let still = regularization_terms(&zeros(), &zeros(), [&a, &a, &a]);
        assert!(still.iter().filter(|(t, _)| t.name().contains("action")).all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn survival_and_terminations() {
        let m = RobotModel::builtin();
        let s = nominal();
        assert_eq!(survival_and_termination(&m, &s, &RewardWeights::default(), 0.01), (20.0, None));
        let mut low = s.clone();
        low.position.z = 0.0;
        assert_eq!(termination(&m, &low, 0.01), Some(Termination::TorsoGround));
        let mut bent = s.clone();
        bent.q[idx::NF] = m.layout.joints[idx::NF].upper;
        bent.q[idx::NP] = m.layout.joints[idx::NP].upper;
        let cfg = RobotConfig {
            position: bent.position,
            orientation: bent.orientation,
            q: bent.q,
        };
        if m.head_self_collision(&cfg) {
            assert!(termination(&m, &bent, 0.01).is_some());
        }
        let b = full(&low, &s);
        assert_eq!(b.survival, 0.0);
    }

    #[test]
    fn window_edges_are_open() {
        let w = EmphasisWindow {
            term: RewardTerm::AngularVelocityXy,
            phi_start: 0.3,
            phi_end: 0.6,
            w_extra: 2.0,
        };
        assert_eq!(scheduled_weight(0.1, 0.5, &w), 0.5);
        assert_eq!(scheduled_weight(0.45, 0.5, &w), 2.5);
        assert_eq!(scheduled_weight(0.3, 0.5, &w), 0.5);
        assert_eq!(scheduled_weight(0.6, 0.5, &w), 0.5);
    }

    #[test]
    fn bundled_emphasis_configs_load() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/emphasis");
        for name in ["jump.toml", "excited.toml"] {
            let c = RewardConfig::load(&dir.join(name)).unwrap();
            assert!(!c.windows.is_empty());
            let w = c.windows[0];
            let inside = c.weights_at(0.5 * (w.phi_start + w.phi_end)).get(w.term);
            assert_eq!(inside, c.weights.get(w.term) + w.w_extra);
            assert_eq!(c.weights_at(0.0), c.weights);
        }
    }

    #[test]
    fn config_rejects_negative_weights_and_unknown_terms() {
        let bad = format!("schema = \"{REWARD_SCHEMA}\"\n[weights]\nsurvival = -1.0\n");
        assert!(RewardConfig::from_toml_str(&bad).is_err());
        let typo = format!("schema = \"{REWARD_SCHEMA}\"\n[weights]\nsurvivl = 1.0\n");
        assert!(RewardConfig::from_toml_str(&typo).is_err());
    }

    proptest! {
        #[test]
        fn exp_terms_in_unit_interval(dx in -1.0f64..1.0, yaw in -3.0f64..3.0, vz in -2.0f64..2.0) {
            let t = nominal();
            let mut s = t.clone();
            s.position.x += dx;
            s.orientation = rot_z(yaw) * s.orientation;
            s.linear_velocity.z = vz;
            for (term, v) in imitation_terms(&s, &t) {
                if term.exp_scale().is_some() {
                    prop_assert!(v > 0.0 && v <= 1.0);
                }
            }
        }

        #[test]
        fn orientation_term_symmetric(a in prop::array::uniform3(-1.0f64..1.0), b in prop::array::uniform3(-1.0f64..1.0)) {
            let mut s = nominal();
            let mut t = nominal();
            s.orientation = Euler::new(a[0], a[1], a[2]).to_quat();
            t.orientation = Euler::new(b[0], b[1], b[2]).to_quat();
            let f = |x: &KinematicTargetState, y: &KinematicTargetState| imitation_terms(x, y)[1].1;
            prop_assert!((f(&s, &t) - f(&t, &s)).abs() < 1e-12);
        }

        #[test]
        fn planar_rigid_motion_leaves_reward_unchanged(
            x in -3.0f64..3.0, y in -3.0f64..3.0, yaw in -3.0f64..3.0,
            dx in -0.2f64..0.2, vx in -1.0f64..1.0, wz in -1.0f64..1.0,
        ) {
            let t = nominal();
            let mut s = t.clone();
            s.position.x += dx;
            s.linear_velocity.x = vx;
            s.angular_velocity = Vector3::new(0.2, 0.0, wz);
            let g = iso(Vector3::new(x, y, 0.0), rot_z(yaw));
            let moved = |k: &KinematicTargetState| {
                let mut k = k.clone();
                let pose = g * k.base_pose();
                k.position = pose.translation.vector;
                k.orientation = pose.rotation;
                k.linear_velocity = g.rotation * k.linear_velocity;
                k.angular_velocity = g.rotation * k.angular_velocity;
                k
            };
            let a = full(&s, &t).total;
            let b = full(&moved(&s), &moved(&t)).total;
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn penalties_only_lower_the_total(tau in 0.01f64..10.0) {
            let s = nominal();
            let base = full(&s, &s).total;
            let mut tv = zeros();
            tv[0] = tau;
            let z = zeros();
            let inputs = RewardInputs { sim: &s, target: &s, tau: &tv, qdd: &z, actions: [&z, &z, &z] };
            let b = evaluate(&RobotModel::builtin(), &inputs, &RewardConfig::builtin(), 0.5).0;
            prop_assert!(b.total < base);
        }

        #[test]
        fn zero_extra_is_identity(phi in 0.0f64..=1.0, w0 in 0.0f64..50.0) {
            let w = EmphasisWindow { term: RewardTerm::Contact, phi_start: 0.2, phi_end: 0.8, w_extra: 0.0 };
            prop_assert_eq!(scheduled_weight(phi, w0, &w), w0);
        }
    }
}
