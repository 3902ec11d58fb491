//! Procedurally keyframed animation clips shipped with the library.
//!
//! The `.clip` files under `assets/clips` are the output of
//! [`author_builtin_clips`]; a test keeps them in sync.

use std::f64::consts::PI;

use super::show::ShowFunctionState;
use crate::math::Euler;
use crate::motion::clip::{ClipCategory, ClipFrame, ClipLibrary, MotionClip};
use crate::motion::generators::{gen_perpetual, PerpetualCommand, Stance};
use crate::motion::PathFrame;
use crate::robot::RobotModel;

pub const CLIP_RATE: f64 = 50.0;

pub const BUILTIN_CLIP_FILES: [(&str, &str); 10] = [
    ("idle", include_str!("../../assets/clips/idle.clip")),
    ("happy", include_str!("../../assets/clips/happy.clip")),
    ("angry", include_str!("../../assets/clips/angry.clip")),
    ("anxious", include_str!("../../assets/clips/anxious.clip")),
    ("curious", include_str!("../../assets/clips/curious.clip")),
    ("yes", include_str!("../../assets/clips/yes.clip")),
    ("no", include_str!("../../assets/clips/no.clip")),
    ("scan", include_str!("../../assets/clips/scan.clip")),
    ("bow", include_str!("../../assets/clips/bow.clip")),
    ("wiggle", include_str!("../../assets/clips/wiggle.clip")),
];

/// The shipped animation library.
pub fn builtin_clips() -> ClipLibrary {
    let mut lib = ClipLibrary::new();
    for (name, text) in BUILTIN_CLIP_FILES {
        lib.insert(MotionClip::parse(text, &format!("{name}.clip")).expect("bundled clip parses"));
    }
    lib
}

fn smooth(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// Smooth in/out envelope with ramps of width `r`.
fn env(t: f64, d: f64, r: f64) -> f64 {
    smooth(t / r) * smooth((d - t) / r)
}

fn bump(t: f64, d: f64) -> f64 {
    (PI * t / d).sin().powi(2)
}

fn wave(t: f64, hz: f64) -> f64 {
    (2.0 * PI * hz * t).sin()
}

fn tinted(color: [f64; 3], radius: f64, w: f64) -> ShowFunctionState {
    let target = ShowFunctionState {
        eye_color: [color; 2],
        eye_radius: [radius; 2],
        ..ShowFunctionState::NEUTRAL
    };
    ShowFunctionState::NEUTRAL.blend(&target, w)
}

/// Samples a standing animation given as a command/show curve over time.
pub fn author_standing_clip(
    model: &RobotModel,
    name: &str,
    category: ClipCategory,
    duration: f64,
    curve: impl Fn(f64, &mut PerpetualCommand, &mut ShowFunctionState),
) -> MotionClip {
    let f = PathFrame::IDENTITY;
    let stance = Stance::nominal(model, &f);
    let steps = (duration * CLIP_RATE).round() as usize;
    let n = if category.is_cyclic() { steps } else { steps + 1 };
    let frames = (0..n)
        .map(|k| {
            let t = k as f64 / CLIP_RATE;
            let mut cmd = PerpetualCommand::nominal(model);
            let mut show = ShowFunctionState::NEUTRAL;
            curve(t, &mut cmd, &mut show);
            let r = gen_perpetual(model, &f, &cmd, &stance);
            ClipFrame {
                path: PathFrame::IDENTITY,
                torso_position: r.state.position,
                torso_orientation: r.state.orientation,
                q: r.state.q,
                contacts: [true, true],
                feet: None,
                show: Some(show.clamped()),
            }
        })
        .collect();
    MotionClip {
        name: name.to_string(),
        category,
        duration,
        sample_rate: CLIP_RATE,
        show_track: Some(name.to_string()),
        gait: None,
        frames,
    }
}

pub fn author_builtin_clips(model: &RobotModel) -> Vec<MotionClip> {
    use ClipCategory::{Background, Episodic, Triggered};
    let a = |name: &str, cat, d: f64, c: &dyn Fn(f64, &mut PerpetualCommand, &mut ShowFunctionState)| {
        author_standing_clip(model, name, cat, d, c)
    };
    let h0 = model.nominal_torso_height();
    vec![
        a("idle", Background, 4.0, &|t, c, s| {
            let p = 2.0 * PI * t / 4.0;
            c.h_torso = h0 + 0.004 * p.sin();
            c.theta_torso.pitch = 0.02 * (p + 1.0).sin();
            c.dtheta_head = Euler::new(0.0, 0.04 * (2.0 * p).sin(), 0.12 * p.sin());
            s.antennas = [0.15 * (2.0 * p).sin(), -0.15 * (2.0 * p + 0.5).sin()];
            let blink = (-((t - 2.0) / 0.05).powi(2)).exp();
            s.eye_radius = [0.8 * (1.0 - 0.9 * blink); 2];
        }),
        a("happy", Triggered, 2.0, &|t, c, s| {
            let e = env(t, 2.0, 0.3);
            c.h_torso = h0 - 0.012 * 0.5 * (1.0 - (4.0 * PI * t).cos()) * e;
            c.dtheta_head.roll = 0.15 * wave(t, 2.0) * e;
            *s = tinted([1.0, 0.85, 0.2], 1.0, e);
            s.antennas = [(0.3 + 0.6 * wave(t, 3.0)) * e, (0.3 - 0.6 * wave(t, 3.0)) * e];
        }),
        a("angry", Triggered, 2.0, &|t, c, s| {
            let e = env(t, 2.0, 0.3);
            c.theta_torso.pitch = 0.15 * e;
            c.dtheta_head.pitch = -0.1 * e;
            *s = tinted([1.0, 0.1, 0.05], 0.55, e);
            s.antennas = [-0.8 * e; 2];
        }),
        a("anxious", Triggered, 2.0, &|t, c, s| {
            let e = env(t, 2.0, 0.3);
            c.h_torso = h0 - 0.03 * e;
            c.dtheta_head.yaw = 0.12 * wave(t, 5.0) * e;
            *s = tinted([0.6, 0.6, 0.9], 0.6, e);
            s.antennas = [(-0.3 + 0.1 * wave(t, 6.0)) * e, (-0.3 - 0.1 * wave(t, 6.0)) * e];
        }),
        a("curious", Triggered, 2.4, &|t, c, s| {
            let e = env(t, 2.4, 0.4);
            c.theta_torso.pitch = 0.1 * e;
            c.dtheta_head = Euler::new(0.3 * e, -0.15 * e, 0.0);
            *s = tinted([0.3, 1.0, 0.6], 1.0, e);
            s.antennas = [0.5 * e; 2];
        }),
        a("yes", Triggered, 1.6, &|t, c, _| {
            c.dtheta_head.pitch = 0.25 * wave(t, 2.5) * env(t, 1.6, 0.2);
        }),
        a("no", Triggered, 1.6, &|t, c, _| {
            c.dtheta_head.yaw = 0.5 * wave(t, 2.0) * env(t, 1.6, 0.2);
        }),
        a("scan", Triggered, 3.0, &|t, c, s| {
            let e = env(t, 3.0, 0.35);
            c.dtheta_head.yaw = 0.9 * wave(t, 1.0 / 3.0) * e;
            s.lamp = e;
        }),
        a("bow", Episodic, 3.0, &|t, c, s| {
            let b = bump(t, 3.0);
            c.h_torso = h0 - 0.03 * b;
            c.theta_torso.pitch = 0.35 * b;
            c.dtheta_head.pitch = 0.5 * b;
            s.antennas = [-0.4 * b; 2];
            s.eye_radius = [0.8 - 0.5 * b; 2];
        }),
        a("wiggle", Episodic, 2.5, &|t, c, s| {
            let e = env(t, 2.5, 0.4);
            c.theta_torso.roll = 0.2 * wave(t, 2.0) * e;
            c.theta_torso.yaw = 0.15 * wave(t, 1.0) * e;
            *s = tinted([1.0, 0.4, 0.7], 0.9, e);
            s.antennas = [0.7 * wave(t, 4.0) * e, -0.7 * wave(t, 4.0) * e];
        }),
    ]
}
