//! Layered animation engine: looped background, one triggered clip at a
//! time, and the joystick layer on top.

use std::sync::Arc;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::blend::{blend, blend_ratios, AnimationCommand, BlendClock, T_ALPHA, T_BETA};
use super::joystick::{
    apply_offsets, modulate_show, standing_offsets, walking_offsets, JoystickInput, JoystickOffsets, JoystickRanges,
};
use super::mapping::OperatorEvent;
use super::show::ShowFunctionState;
use crate::error::Result;
use crate::math::Euler;
use crate::motion::clip::{ClipCategory, ClipFrame, ClipLibrary, MotionClip};
use crate::motion::{CommandRanges, PerpetualCommand, PeriodicCommand};
use crate::robot::{idx, RobotConfig, RobotModel};

/// What the runtime is doing, as far as the engine is concerned.
#[derive(Debug, Clone, PartialEq)]
pub enum EngineMode {
    Standing,
    Walking,
    Episodic { clip: String, phi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyCommand {
    Perpetual(PerpetualCommand),
    Periodic(PeriodicCommand),
    /// Episodic motions take no command.
    None,
}

/// Show/audio cue emitted when a clip starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cue {
    pub time: f64,
    pub id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuckParams {
    pub head_height: f64,
    pub head_pitch: f64,
    pub torso_lower: f64,
    pub antennas: f64,
    /// Ramp time in and out of the tuck.
    pub ramp: f64,
}

impl Default for TuckParams {
    fn default() -> Self {
        Self {
            head_height: -0.04,
            head_pitch: 0.3,
            torso_lower: 0.04,
            antennas: -1.0,
            ramp: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub t_beta: f64,
    pub t_alpha: f64,
    pub background: String,
    pub background_on: bool,
    pub joystick: JoystickRanges,
    pub commands: CommandRanges,
    /// Time for a stick axis to travel its full range.
    pub stick_slew: f64,
    /// Time to reach full walking speed.
    pub accel_time: f64,
    pub tuck: TuckParams,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            t_beta: T_BETA,
            t_alpha: T_ALPHA,
            background: "idle".into(),
            background_on: true,
            joystick: JoystickRanges::default(),
            commands: CommandRanges::default(),
            stick_slew: 0.25,
            accel_time: 0.5,
            tuck: TuckParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineOutput {
    pub y: AnimationCommand,
    pub command: PolicyCommand,
    pub cues: Vec<Cue>,
    pub beta: f64,
    pub alpha: f64,
    /// Name of the triggered clip currently playing.
    pub trigger: Option<String>,
}

#[derive(Debug, Clone)]
struct ActiveTrigger {
    clip: MotionClip,
    clock: BlendClock,
}

/// Reads the policy command off an animation output: head offsets against
/// the nominal head, torso pose while standing, velocities while walking.
/// Leg joints are ignored.
pub fn extract_policy_command(
    model: &RobotModel,
    y: &AnimationCommand,
    walking: Option<(Vector2<f64>, f64)>,
    ranges: &CommandRanges,
) -> PolicyCommand {
    let c = &y.config;
    let head = model.head_pose(c);
    let dh = head.translation.z - c.position.z - model.nominal_head_height();
    let dtheta = Euler::from_quat(&head.rotation);
    match walking {
        None => PolicyCommand::Perpetual(ranges.clamp_perpetual(&PerpetualCommand {
            dh_head: dh,
            dtheta_head: dtheta,
            h_torso: c.position.z,
            theta_torso: Euler::from_quat(&c.orientation),
        })),
        Some((velocity, omega)) => PolicyCommand::Periodic(ranges.clamp_periodic(&PeriodicCommand {
            dh_head: dh,
            dtheta_head: dtheta,
            velocity,
            omega,
        })),
    }
}

fn approach(x: f64, target: f64, step: f64) -> f64 {
    x + (target - x).clamp(-step, step)
}

fn frame_command(frame: &ClipFrame, fallback: &ShowFunctionState) -> AnimationCommand {
    AnimationCommand {
        show: frame.show.unwrap_or(*fallback),
        config: RobotConfig {
            position: frame.torso_position,
            orientation: frame.torso_orientation,
            q: frame.q,
        },
    }
}

pub struct AnimationEngine {
    model: Arc<RobotModel>,
    clips: Arc<ClipLibrary>,
    config: EngineConfig,
    time: f64,
    background: Option<MotionClip>,
    background_on: bool,
    background_weight: f64,
    active: Option<ActiveTrigger>,
    pending: Option<MotionClip>,
    input: JoystickInput,
    slewed: JoystickInput,
    velocity: Vector2<f64>,
    omega: f64,
    lamp_on: bool,
    lamp: f64,
    tuck_on: bool,
    tuck: f64,
    offsets: JoystickOffsets,
    offsets_walking: Option<bool>,
    offsets_fade: Option<(JoystickOffsets, f64)>,
    cues: Vec<Cue>,
}

impl AnimationEngine {
    pub fn new(model: Arc<RobotModel>, clips: Arc<ClipLibrary>, config: EngineConfig) -> Result<Self> {
        let background = if config.background.is_empty() {
            None
        } else {
            Some(clips.require(&config.background, ClipCategory::Background)?.clone())
        };
        Ok(Self {
            background_on: config.background_on && background.is_some(),
            background_weight: if config.background_on && background.is_some() { 1.0 } else { 0.0 },
            background,
            model,
            clips,
            config,
            time: 0.0,
            active: None,
            pending: None,
            input: JoystickInput::default(),
            slewed: JoystickInput::default(),
            velocity: Vector2::zeros(),
            omega: 0.0,
            lamp_on: false,
            lamp: 0.0,
            tuck_on: false,
            tuck: 0.0,
            offsets: JoystickOffsets::default(),
            offsets_walking: None,
            offsets_fade: None,
            cues: Vec::new(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn clips(&self) -> &ClipLibrary {
        &self.clips
    }

    pub fn set_input(&mut self, input: JoystickInput) {
        self.input = input.clamped();
    }

    pub fn input(&self) -> &JoystickInput {
        &self.input
    }

    /// Starts a triggered clip. An already playing clip is ramped out first
    /// and the new one starts once it has faded.
    pub fn trigger(&mut self, name: &str) -> Result<()> {
        let clip = self.clips.require(name, ClipCategory::Triggered)?.clone();
        match &mut self.active {
            Some(a) => {
                a.clock.cancel();
                self.pending = Some(clip);
            }
            None => self.start(clip),
        }
        Ok(())
    }

    fn start(&mut self, clip: MotionClip) {
        let mut clock = BlendClock::new(clip.duration);
        clock.t_beta = self.config.t_beta;
        clock.t_alpha = self.config.t_alpha;
        self.cues.push(Cue {
            time: self.time,
            id: clip.show_track.clone().unwrap_or_else(|| clip.name.clone()),
        });
        self.active = Some(ActiveTrigger { clip, clock });
    }

    /// Forced ramp-out of the triggered layer.
    pub fn cancel(&mut self) {
        self.pending = None;
        if let Some(a) = &mut self.active {
            a.clock.cancel();
        }
    }

    pub fn toggle_background(&mut self) {
        self.background_on = !self.background_on && self.background.is_some();
    }

    pub fn toggle_lamp(&mut self) {
        self.lamp_on = !self.lamp_on;
    }

    pub fn toggle_tuck(&mut self) {
        self.tuck_on = !self.tuck_on;
    }

    pub fn cue(&mut self, id: &str) {
        self.cues.push(Cue {
            time: self.time,
            id: id.to_string(),
        });
    }

    /// Handles the events the engine owns; mode events are ignored here.
    pub fn handle(&mut self, event: &OperatorEvent) -> Result<()> {
        match event {
            OperatorEvent::Trigger { name } => self.trigger(name)?,
            OperatorEvent::Cancel => self.cancel(),
            OperatorEvent::ToggleBackground => self.toggle_background(),
            OperatorEvent::ToggleLamp => self.toggle_lamp(),
            OperatorEvent::ToggleTuck => self.toggle_tuck(),
            OperatorEvent::AudioCue { name } => self.cue(name),
            _ => {}
        }
        Ok(())
    }

    /// Current blend ratios of the triggered layer.
    pub fn ratios(&self) -> (f64, f64) {
        self.active.as_ref().map_or((0.0, 0.0), |a| blend_ratios(&a.clock))
    }

    fn nominal(&self) -> AnimationCommand {
        AnimationCommand {
            show: ShowFunctionState::NEUTRAL,
            config: self.model.nominal_pose(),
        }
    }

    /// Background layer at engine time `t`.
    pub fn background_tick(&self, t: f64) -> AnimationCommand {
        let nominal = self.nominal();
        match &self.background {
            Some(clip) if self.background_weight > 0.0 => {
                let bg = frame_command(&clip.sample_time(t.rem_euclid(clip.duration)), &nominal.show);
                blend(&nominal, &bg, self.background_weight, self.background_weight)
            }
            _ => nominal,
        }
    }

    fn slew_inputs(&mut self, dt: f64) {
        let step = dt / self.config.stick_slew;
        let (s, u) = (&mut self.slewed, &self.input);
        for i in 0..2 {
            s.left[i] = approach(s.left[i], u.left[i], 2.0 * step);
            s.right[i] = approach(s.right[i], u.right[i], 2.0 * step);
            s.dpad[i] = approach(s.dpad[i], u.dpad[i], 2.0 * step);
        }
        s.l2 = approach(s.l2, u.l2, step);
        s.r2 = approach(s.r2, u.r2, step);
        s.r1_held = u.r1_held;
    }

    /// Produces the animation output for the current time, then advances
    /// all clocks by `dt`.
    pub fn tick(&mut self, dt: f64, mode: &EngineMode) -> EngineOutput {
        let walking = matches!(mode, EngineMode::Walking);
        let mut y = self.background_tick(self.time);
        let (beta, alpha) = self.ratios();
        let trigger = self.active.as_ref().map(|a| a.clip.name.clone());
        if let Some(a) = &self.active {
            let mut trig = frame_command(&a.clip.sample_time(a.clock.t), &y.show);
            if walking {
                // Only head and show channels follow the clip while walking.
                let mut c = y.config.clone();
                c.q.fixed_rows_mut::<4>(idx::NY)
                    .copy_from(&trig.config.q.fixed_rows::<4>(idx::NY));
                trig.config = c;
            }
            y = blend(&y, &trig, beta, alpha);
        }

        let mut command = PolicyCommand::None;
        match mode {
            EngineMode::Episodic { clip, phi } => {
                if let Ok(c) = self.clips.require(clip, ClipCategory::Episodic) {
                    y = frame_command(&c.sample(*phi), &y.show);
                }
            }
            EngineMode::Standing | EngineMode::Walking => {
                let tuck = self.config.tuck;
                let mut o: JoystickOffsets;
                if walking {
                    let (off, v, w) = walking_offsets(&self.slewed, &self.config.joystick, &self.config.commands.velocity);
                    o = off;
                    let l = &self.config.commands.velocity;
                    let step = dt / self.config.accel_time;
                    self.velocity.x = approach(self.velocity.x, v.x, l.vx * step);
                    self.velocity.y = approach(self.velocity.y, v.y, l.vy * step);
                    self.omega = approach(self.omega, w, l.omega * step);
                } else {
                    o = standing_offsets(&self.slewed, &self.config.joystick);
                    self.velocity = Vector2::zeros();
                    self.omega = 0.0;
                }
                o = self.crossfade_offsets(o, walking, dt);
                if !walking {
                    o.torso_height -= self.tuck * tuck.torso_lower;
                }
                o.head_height += self.tuck * tuck.head_height;
                o.head_local.pitch += self.tuck * tuck.head_pitch;
                y = apply_offsets(&self.model, &y, &o, &self.config.commands);
                if walking {
                    modulate_show(&mut y, &self.velocity, &self.config.commands.velocity, &self.config.joystick);
                }
                if self.tuck > 0.0 {
                    for e in y.show.eye_radius.iter_mut() {
                        *e *= 1.0 - self.tuck;
                    }
                    for a in y.show.antennas.iter_mut() {
                        *a += (tuck.antennas - *a) * self.tuck;
                    }
                }
                command = extract_policy_command(
                    &self.model,
                    &y,
                    walking.then_some((self.velocity, self.omega)),
                    &self.config.commands,
                );
            }
        }
        y.show.lamp = y.show.lamp.max(self.lamp);
        y.show = y.show.clamped();

        // Advance clocks.
        self.time += dt;
        self.slew_inputs(dt);
        let target = if self.background_on { 1.0 } else { 0.0 };
        self.background_weight = approach(self.background_weight, target, dt / self.config.t_alpha);
        self.lamp = approach(self.lamp, if self.lamp_on { 1.0 } else { 0.0 }, dt / self.config.t_beta);
        self.tuck = approach(self.tuck, if self.tuck_on { 1.0 } else { 0.0 }, dt / self.config.tuck.ramp);
        if let Some(a) = &mut self.active {
            a.clock = a.clock.at(a.clock.t + dt);
            if a.clock.finished() {
                self.active = None;
                if let Some(next) = self.pending.take() {
                    self.start(next);
                }
            }
        }
        EngineOutput {
            y,
            command,
            cues: std::mem::take(&mut self.cues),
            beta,
            alpha,
            trigger,
        }
    }

    /// Standing and walking read the sticks differently; after a switch the
    /// offsets fade linearly from their last value to the new mapping.
    fn crossfade_offsets(&mut self, target: JoystickOffsets, walking: bool, dt: f64) -> JoystickOffsets {
        if self.offsets_walking.is_some_and(|w| w != walking) {
            self.offsets_fade = Some((self.offsets, 0.0));
        }
        self.offsets_walking = Some(walking);
        let mut o = target;
        if let Some((from, t)) = &mut self.offsets_fade {
            *t += dt;
            let w = (*t / self.config.stick_slew).min(1.0);
            let (a, b) = (from.as_array(), target.as_array());
            o = JoystickOffsets::from_array(&std::array::from_fn(|i| a[i] + (b[i] - a[i]) * w));
            if w >= 1.0 {
                self.offsets_fade = None;
            }
        }
        self.offsets = o;
        o
    }

    /// Current smoothed path velocity command.
    pub fn velocity(&self) -> (Vector2<f64>, f64) {
        (self.velocity, self.omega)
    }

    /// Velocity the current stick input asks for, before smoothing.
    pub fn target_velocity(&self) -> (Vector2<f64>, f64) {
        let (_, v, w) = walking_offsets(&self.input, &self.config.joystick, &self.config.commands.velocity);
        (v, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::animation::authoring::builtin_clips;

    fn engine() -> AnimationEngine {
        AnimationEngine::new(
            Arc::new(RobotModel::builtin()),
            Arc::new(builtin_clips()),
            EngineConfig::default(),
        )
        .unwrap()
    }

    const DT: f64 = 0.02;

    #[test]
    fn background_loops() {
        let e = engine();
        let a = e.background_tick(0.0);
        let b = e.background_tick(4.0);
        assert_eq!(a, b);
    }

    #[test]
    fn trigger_starts_at_zero_weight() {
        let mut e = engine();
        e.trigger("yes").unwrap();
        let out = e.tick(DT, &EngineMode::Standing);
        assert_eq!((out.beta, out.alpha), (0.0, 0.0));
        assert_eq!(out.trigger.as_deref(), Some("yes"));
        assert_eq!(out.cues[0].id, "yes");
    }

    #[test]
    fn unknown_trigger_lists_clips() {
        let mut e = engine();
        let err = e.trigger("dance").unwrap_err().to_string();
        assert!(err.contains("yes") && err.contains("scan"), "{err}");
        assert!(e.trigger("bow").is_err(), "episodic clips cannot be triggered");
    }

    #[test]
    fn cancel_ramps_out_smoothly() {
        let mut e = engine();
        e.trigger("scan").unwrap();
        for _ in 0..50 {
            e.tick(DT, &EngineMode::Standing);
        }
        assert_eq!(e.ratios(), (1.0, 1.0));
        e.cancel();
        let mut prev = 1.0;
        let mut ticks = 0;
        while e.ratios().1 > 0.0 || ticks == 0 {
            let out = e.tick(DT, &EngineMode::Standing);
            assert!(prev - out.alpha <= DT / T_ALPHA + 1e-9);
            prev = out.alpha;
            ticks += 1;
            assert!(ticks < 30);
        }
        assert!(e.active.is_none());
    }

    #[test]
    fn zero_input_standing_command_matches_background() {
        let mut e = engine();
        e.toggle_background();
        for _ in 0..40 {
            e.tick(DT, &EngineMode::Standing);
        }
        let out = e.tick(DT, &EngineMode::Standing);
        match out.command {
            PolicyCommand::Perpetual(c) => {
                assert!(c.dh_head.abs() < 1e-9);
                assert!(c.dtheta_head.as_vector().norm() < 1e-9);
                assert!(c.theta_torso.as_vector().norm() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn leg_joints_do_not_affect_the_command() {
        let m = RobotModel::builtin();
        let mut y = AnimationCommand {
            show: ShowFunctionState::NEUTRAL,
            config: m.nominal_pose(),
        };
        y.config.orientation = Euler::new(0.0, 0.2, 0.0).to_quat();
        let r = CommandRanges::default();
        let a = extract_policy_command(&m, &y, None, &r);
        if let PolicyCommand::Perpetual(c) = a {
            assert!((c.theta_torso.pitch - 0.2).abs() < 1e-12);
        }
        for i in 0..10 {
            y.config.q[i] += 0.3;
        }
        assert_eq!(extract_policy_command(&m, &y, None, &r), a);
    }

    #[test]
    fn walking_speed_ramps_to_half_without_r1() {
        let mut e = engine();
        e.set_input(JoystickInput {
            left: [0.0, 1.0],
            ..Default::default()
        });
        let mut last = None;
        for _ in 0..100 {
            last = Some(e.tick(DT, &EngineMode::Walking));
        }
        match last.unwrap().command {
            PolicyCommand::Periodic(c) => assert!((c.velocity.x - 0.35).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn retrigger_waits_for_ramp_out() {
        let mut e = engine();
        e.trigger("yes").unwrap();
        for _ in 0..30 {
            e.tick(DT, &EngineMode::Standing);
        }
        e.trigger("no").unwrap();
        let mut prev_alpha = e.ratios().1;
        let mut saw_no = false;
        for _ in 0..60 {
            let out = e.tick(DT, &EngineMode::Standing);
            assert!((out.alpha - prev_alpha).abs() <= DT / T_ALPHA + 1e-9);
            prev_alpha = out.alpha;
            saw_no |= out.trigger.as_deref() == Some("no");
        }
        assert!(saw_no);
    }
}
