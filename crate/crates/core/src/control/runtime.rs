//! The controller: mode state machine, reference generation, policy
//! evaluation and the 600 Hz setpoint stream.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::features::{phase_features, PhaseFeatureParams};
use super::observation::{build_observation, ActionHistory, MeasuredState};
use super::pipeline::{ActionPipeline, DEFAULT_CUTOFF, POLICY_RATE};
use super::policy::{command_vector, normalize_inputs, stub_policy, ActionTransform, PolicyKind, PolicyNet};
use crate::actuator::ActuatorTable;
use crate::animation::{
    AnimationEngine, Cue, EngineConfig, EngineMode, OperatorEvent, PolicyCommand, ShowFunctionState,
};
use crate::error::{Error, Result};
use crate::math::{iso, rot_z};
use crate::motion::{
    episodic_path_frame, gen_episodic, gen_periodic, gen_perpetual, project_path_frame, update_path_frame_standing,
    update_path_frame_walking, ClipCategory, ClipLibrary, GaitLibrary, PathFrame, PathFrameParams,
    PerpetualCommand, PhaseMode, PhaseSignal, Stance,
};
use crate::robot::{JointVector, KinematicTargetState, RobotModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ControllerMode {
    Standing,
    Walking,
    Episodic { clip: String },
    MotionStop,
}

impl ControllerMode {
    pub fn name(&self) -> &str {
        match self {
            ControllerMode::Standing => "standing",
            ControllerMode::Walking => "walking",
            ControllerMode::Episodic { .. } => "episodic",
            ControllerMode::MotionStop => "motion_stop",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum TransitionTarget {
    Standing,
    Walking,
    Episodic { clip: String },
    MotionStop,
    /// Leave motion stop and return to the default pose.
    Home,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionOutcome {
    Applied,
    /// Executed later (walking stops at the next double support).
    Latched,
    /// Not allowed from the current mode.
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuntimeConfig {
    pub path: PathFrameParams,
    pub features: PhaseFeatureParams,
    pub cutoff: f64,
    /// Reference cross-fade after a mode switch.
    pub handoff_time: f64,
    /// Cross-fade used by the home command.
    pub home_time: f64,
    pub freeze_delay: f64,
    pub freeze_gain: f64,
    /// Start walking with a left step when the turn command is zero.
    pub zero_turn_left: bool,
    pub engine: EngineConfig,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        Self {
            path: PathFrameParams::default(),
            features: PhaseFeatureParams::default(),
            cutoff: DEFAULT_CUTOFF,
            handoff_time: 0.25,
            home_time: 1.0,
            freeze_delay: 0.5,
            freeze_gain: 2.0,
            zero_turn_left: true,
            engine: EngineConfig::default(),
        }
    }
}

/// Trained networks per slot. Empty slots fall back to the stub policy.
#[derive(Debug, Clone, Default)]
pub struct Policies {
    pub perpetual: Option<PolicyNet>,
    pub periodic: Option<PolicyNet>,
    pub episodic: BTreeMap<String, PolicyNet>,
}

impl Policies {
    pub fn validate(&self, features: &PhaseFeatureParams) -> Result<()> {
        if let Some(n) = &self.perpetual {
            n.check_slot(PolicyKind::Perpetual, features)?;
        }
        if let Some(n) = &self.periodic {
            n.check_slot(PolicyKind::Periodic, features)?;
        }
        for n in self.episodic.values() {
            n.check_slot(PolicyKind::Episodic, features)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: ControllerMode,
    pub to: ControllerMode,
    pub phi: f64,
}

/// Everything decided at one 50 Hz tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub time: f64,
    pub mode: ControllerMode,
    pub phase: PhaseSignal,
    pub path_frame: PathFrame,
    pub reference: KinematicTargetState,
    pub command: PolicyCommand,
    pub show: ShowFunctionState,
    pub action: JointVector,
    pub setpoint: JointVector,
    pub gain_scale: f64,
    pub cues: Vec<Cue>,
    pub transition: Option<Transition>,
    /// Some IK target was out of reach.
    pub clamped: bool,
}

#[derive(Debug, Clone)]
struct Handoff {
    dq: JointVector,
    dp: Vector3<f64>,
    drot: UnitQuaternion<f64>,
    t: f64,
    duration: f64,
}

impl Handoff {
    fn between(old: &KinematicTargetState, new: &KinematicTargetState, duration: f64) -> Self {
        Self {
            dq: old.q - new.q,
            dp: old.position - new.position,
            drot: old.orientation * new.orientation.inverse(),
            t: 0.0,
            duration,
        }
    }

    /// Raised-cosine weight of the old reference and its time derivative.
    fn weight(&self) -> (f64, f64) {
        let s = (self.t / self.duration).min(1.0);
        let w = 0.5 * (1.0 + (PI * s).cos());
        let dw = if s < 1.0 { -0.5 * PI * (PI * s).sin() / self.duration } else { 0.0 };
        (w, dw)
    }

    fn apply(&self, r: &mut KinematicTargetState) {
        let (w, dw) = self.weight();
        r.q += self.dq * w;
        r.qd += self.dq * dw;
        r.position += self.dp * w;
        r.linear_velocity += self.dp * dw;
        let (axis_angle, rot) = (self.drot.scaled_axis(), UnitQuaternion::from_scaled_axis(self.drot.scaled_axis() * w));
        r.orientation = rot * r.orientation;
        r.angular_velocity += axis_angle * dw;
    }
}

pub struct Controller {
    model: Arc<RobotModel>,
    gait: Arc<GaitLibrary>,
    clips: Arc<ClipLibrary>,
    engine: AnimationEngine,
    config: RuntimeConfig,
    policies: Policies,
    transform: ActionTransform,
    mode: ControllerMode,
    stop_requested: bool,
    phase: PhaseSignal,
    frame: PathFrame,
    episode_start: PathFrame,
    stance: Stance,
    reference: KinematicTargetState,
    handoff: Option<Handoff>,
    handoff_source: Option<(KinematicTargetState, f64)>,
    history: ActionHistory,
    pipeline: ActionPipeline,
    stop_elapsed: f64,
    frozen: Option<JointVector>,
    pending: Option<Transition>,
    /// The last decision showed the final frame of an episodic clip.
    episode_ended: bool,
    time: f64,
}

pub const DECISION_DT: f64 = 1.0 / POLICY_RATE;

impl Controller {
    pub fn new(
        model: Arc<RobotModel>,
        gait: Arc<GaitLibrary>,
        clips: Arc<ClipLibrary>,
        actuators: &ActuatorTable,
        config: RuntimeConfig,
        policies: Policies,
    ) -> Result<Self> {
        policies.validate(&config.features)?;
        let engine = AnimationEngine::new(model.clone(), clips.clone(), config.engine.clone())?;
        let frame = PathFrame::IDENTITY;
        let stance = Stance::nominal(&model, &frame);
        let reference = gen_perpetual(&model, &frame, &PerpetualCommand::nominal(&model), &stance).state;
        let transform = ActionTransform::new(&model, actuators);
        let q0 = reference.q;
        Ok(Self {
            history: ActionHistory::constant(transform.to_action(&q0)),
            pipeline: ActionPipeline::new(q0, config.cutoff),
            phase: PhaseSignal::periodic(0.0, 0.0),
            engine,
            model,
            gait,
            clips,
            config,
            policies,
            transform,
            mode: ControllerMode::Standing,
            stop_requested: false,
            frame,
            episode_start: frame,
            stance,
            reference,
            handoff: None,
            handoff_source: None,
            stop_elapsed: 0.0,
            frozen: None,
            pending: None,
            episode_ended: false,
            time: 0.0,
        })
    }

    /// Re-seats the controller on a measured state: path frame under the
    /// torso, stance at the reference feet, filter at the measured joints.
    pub fn initialize(&mut self, measured: &MeasuredState) {
        self.frame = PathFrame::from_pose(&measured.base);
        self.stance = Stance::nominal(&self.model, &self.frame);
        self.reference =
            gen_perpetual(&self.model, &self.frame, &PerpetualCommand::nominal(&self.model), &self.stance).state;
        self.pipeline.reset(measured.q);
        self.history = ActionHistory::constant(self.transform.to_action(&measured.q));
    }

    pub fn model(&self) -> &RobotModel {
        &self.model
    }

    pub fn gait(&self) -> &GaitLibrary {
        &self.gait
    }

    pub fn mode(&self) -> &ControllerMode {
        &self.mode
    }

    pub fn stop_pending(&self) -> bool {
        self.stop_requested
    }

    pub fn engine(&self) -> &AnimationEngine {
        &self.engine
    }

    pub fn engine_mut(&mut self) -> &mut AnimationEngine {
        &mut self.engine
    }

    pub fn config(&self) -> &RuntimeConfig {
        &self.config
    }

    pub fn transform(&self) -> &ActionTransform {
        &self.transform
    }

    pub fn path_frame(&self) -> PathFrame {
        self.frame
    }

    pub fn phase(&self) -> PhaseSignal {
        self.phase
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn gain_scale(&self) -> f64 {
        if self.frozen.is_some() {
            self.config.freeze_gain
        } else {
            1.0
        }
    }

    /// Switches mode; the last reference fades into the first one of the
    /// new mode over `handoff` seconds.
    fn switch(&mut self, to: ControllerMode, handoff: f64, phi: f64) {
        let from = std::mem::replace(&mut self.mode, to.clone());
        self.pending = Some(Transition { from, to, phi });
        self.handoff_source = Some((self.reference.clone(), handoff));
    }

    fn enter_standing(&mut self) {
        self.stance = Stance::from_state(&self.model, &self.reference);
        self.phase = PhaseSignal::periodic(0.0, 0.0);
    }

    pub fn request(&mut self, target: TransitionTarget) -> Result<TransitionOutcome> {
        use ControllerMode as M;
        let h = self.config.handoff_time;
        Ok(match (&self.mode, target) {
            (_, TransitionTarget::MotionStop) => {
                self.stop_requested = false;
                self.stop_elapsed = 0.0;
                if self.mode != M::MotionStop {
                    let phi = self.phase.phi;
                    self.enter_standing();
                    self.engine.cancel();
                    self.switch(M::MotionStop, h, phi);
                }
                TransitionOutcome::Applied
            }
            (M::MotionStop, TransitionTarget::Home) => {
                self.frozen = None;
                self.enter_standing();
                self.switch(M::Standing, self.config.home_time, 0.0);
                TransitionOutcome::Applied
            }
            (M::MotionStop, _) | (_, TransitionTarget::Home) => TransitionOutcome::Ignored,
            (M::Episodic { .. }, _) => TransitionOutcome::Ignored,
            (M::Standing, TransitionTarget::Standing) => TransitionOutcome::Ignored,
            (M::Walking, TransitionTarget::Standing) => {
                self.stop_requested = true;
                TransitionOutcome::Latched
            }
            (M::Walking, TransitionTarget::Walking) => {
                self.stop_requested = false;
                TransitionOutcome::Applied
            }
            (M::Standing, TransitionTarget::Walking) => {
                let (_, omega) = self.engine.target_velocity();
                let left = if omega == 0.0 { self.config.zero_turn_left } else { omega > 0.0 };
                let phi = if left { self.gait.left_step_onset() } else { self.gait.right_step_onset() };
                self.phase = PhaseSignal::periodic(phi, 0.0);
                self.switch(M::Walking, h, 0.0);
                TransitionOutcome::Applied
            }
            (_, TransitionTarget::Episodic { clip }) => {
                let c = self.clips.require(&clip, ClipCategory::Episodic)?;
                let phi = self.phase.phi;
                self.phase = PhaseSignal::episodic(c.duration);
                self.episode_start = self.frame;
                self.stop_requested = false;
                self.switch(M::Episodic { clip }, h, phi);
                TransitionOutcome::Applied
            }
        })
    }

    /// Routes an operator event to the state machine or the animation engine.
    pub fn handle(&mut self, event: &OperatorEvent) -> Result<TransitionOutcome> {
        match event {
            OperatorEvent::MotionStop => self.request(TransitionTarget::MotionStop),
            OperatorEvent::Home => self.request(TransitionTarget::Home),
            OperatorEvent::Stand => self.request(TransitionTarget::Standing),
            OperatorEvent::ToggleWalk => match self.mode {
                ControllerMode::Walking if !self.stop_requested => self.request(TransitionTarget::Standing),
                _ => self.request(TransitionTarget::Walking),
            },
            OperatorEvent::Episodic { name } => self.request(TransitionTarget::Episodic { clip: name.clone() }),
            other => {
                self.engine.handle(other)?;
                Ok(TransitionOutcome::Applied)
            }
        }
    }

    fn generate(&mut self, command: &PolicyCommand) -> (KinematicTargetState, f64, bool) {
        match (&self.mode, command) {
            (ControllerMode::Walking, PolicyCommand::Periodic(c)) => {
                let r = gen_periodic(&self.model, &self.frame, self.phase.phi, c, &self.gait);
                (r.state, r.phase_rate, r.clamped)
            }
            (ControllerMode::Episodic { clip }, _) => {
                let clip = self.clips.get(clip).expect("checked on entry");
                let r = gen_episodic(&self.episode_start, self.phase.phi, clip);
                (r.state, r.phase_rate, r.clamped)
            }
            (_, PolicyCommand::Perpetual(c)) => {
                let r = gen_perpetual(&self.model, &self.frame, c, &self.stance);
                (r.state, 0.0, r.clamped)
            }
            _ => {
                let r = gen_perpetual(&self.model, &self.frame, &PerpetualCommand::nominal(&self.model), &self.stance);
                (r.state, 0.0, r.clamped)
            }
        }
    }

    fn policy_action(&self, measured: &MeasuredState, command: &PolicyCommand, reference: &KinematicTargetState) -> Result<JointVector> {
        let (net, kind) = match &self.mode {
            ControllerMode::Standing | ControllerMode::MotionStop => (self.policies.perpetual.as_ref(), PolicyKind::Perpetual),
            ControllerMode::Walking => (self.policies.periodic.as_ref(), PolicyKind::Periodic),
            ControllerMode::Episodic { clip } => (self.policies.episodic.get(clip), PolicyKind::Episodic),
        };
        let Some(net) = net else {
            return Ok(stub_policy(&reference.q, &self.transform));
        };
        let obs = build_observation(measured, &self.frame, &self.history);
        let features = kind
            .phase_mode()
            .map_or_else(Vec::new, |m| phase_features(self.phase.phi, m, &self.config.features));
        let input = normalize_inputs(&obs, &features, &command_vector(command), &net.input_ranges)?;
        let out = net.forward(&input)?;
        let a = JointVector::from_column_slice(&out);
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("policy produced a non-finite action".into()));
        }
        Ok(a)
    }

    /// One 50 Hz decision tick.
    pub fn decide(&mut self, measured: &MeasuredState) -> Result<Decision> {
        let dt = DECISION_DT;
        if let ControllerMode::Episodic { .. } = self.mode {
            if self.episode_ended {
                self.episode_ended = false;
                let phi = self.phase.phi;
                self.enter_standing();
                self.switch(ControllerMode::Standing, self.config.handoff_time, phi);
            }
        }

        let engine_mode = match &self.mode {
            ControllerMode::Walking => EngineMode::Walking,
            ControllerMode::Episodic { clip } => EngineMode::Episodic {
                clip: clip.clone(),
                phi: self.phase.phi,
            },
            _ => EngineMode::Standing,
        };
        let out = self.engine.tick(dt, &engine_mode);
        let command = match self.mode {
            ControllerMode::MotionStop => PolicyCommand::Perpetual(PerpetualCommand::nominal(&self.model)),
            _ => out.command,
        };

        let (mut reference, rate, clamped) = self.generate(&command);
        if self.mode == ControllerMode::Walking && self.stop_requested {
            let onset = reference.both_contacts() && !self.reference.both_contacts();
            if onset {
                self.stop_requested = false;
                self.reference = reference.clone();
                let phi = self.phase.phi;
                self.enter_standing();
                self.switch(ControllerMode::Standing, self.config.handoff_time, phi);
                let standing = self.generate(&command_for_standing(&self.model, &command));
                reference = standing.0;
            }
        }
        if let Some((old, duration)) = self.handoff_source.take() {
            self.handoff = Some(Handoff::between(&old, &reference, duration));
        }
        if let Some(h) = &mut self.handoff {
            h.apply(&mut reference);
            h.t += dt;
            if h.t >= h.duration {
                self.handoff = None;
            }
        }

        let action = self.policy_action(measured, &command, &reference)?;
        let mut setpoint = self.transform.to_setpoints(&action, &measured.q);
        if self.mode == ControllerMode::MotionStop {
            self.stop_elapsed += dt;
            if self.frozen.is_none() && self.stop_elapsed >= self.config.freeze_delay {
                self.frozen = Some(measured.q);
            }
            if let Some(q) = self.frozen {
                setpoint = q;
            }
        }
        self.history.push(action);
        self.pipeline.push(setpoint);

        let decision = Decision {
            time: self.time,
            mode: self.mode.clone(),
            phase: self.phase,
            path_frame: self.frame,
            reference: reference.clone(),
            command,
            show: out.y.show,
            action,
            setpoint,
            gain_scale: self.gain_scale(),
            cues: out.cues,
            transition: self.pending.take(),
            clamped,
        };
        self.episode_ended = self.phase.mode == PhaseMode::Episodic && self.phase.phi >= 1.0;

        // Advance frame and phase for the next tick.
        self.reference = reference;
        match (&self.mode, &command) {
            (ControllerMode::Walking, PolicyCommand::Periodic(c)) => {
                self.phase.rate = rate;
                self.frame = update_path_frame_walking(&self.frame, &c.velocity, c.omega, dt);
            }
            (ControllerMode::Episodic { clip }, _) => {
                self.phase.rate = rate;
                let clip = self.clips.get(clip).expect("checked on entry");
                self.frame = episodic_path_frame(&self.episode_start, self.phase.advance(dt).phi, clip);
            }
            _ => {
                let [l, r] = self.stance.feet;
                self.frame = update_path_frame_standing(
                    &self.frame,
                    &iso(l.position, rot_z(l.yaw)),
                    &iso(r.position, rot_z(r.yaw)),
                    dt,
                    self.config.path.t_pf,
                );
            }
        }
        if self.phase.mode == PhaseMode::Episodic || self.mode == ControllerMode::Walking {
            self.phase = self.phase.advance(dt);
        }
        self.frame = project_path_frame(&self.frame, &measured.base, self.config.path.d_max, self.config.path.psi_max);
        self.time += dt;
        Ok(decision)
    }

    /// One 600 Hz actuation tick: the next filtered setpoint.
    pub fn actuate(&mut self) -> JointVector {
        self.pipeline.tick()
    }
}

fn command_for_standing(model: &RobotModel, command: &PolicyCommand) -> PolicyCommand {
    match command {
        PolicyCommand::Periodic(c) => PolicyCommand::Perpetual(PerpetualCommand {
            dh_head: c.dh_head,
            dtheta_head: c.dtheta_head,
            ..PerpetualCommand::nominal(model)
        }),
        other => *other,
    }
}
