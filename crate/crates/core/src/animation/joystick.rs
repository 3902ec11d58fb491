//! Joystick layer: posture/gaze offsets while standing, path velocities
//! and gaze while walking.

use nalgebra::{Isometry3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::blend::AnimationCommand;
use crate::math::{iso, Euler};
use crate::motion::{CommandRanges, VelocityLimits};
use crate::robot::{idx, RobotModel};

/// Continuous controller state. Axes are +x right, +y up.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct JoystickInput {
    pub left: [f64; 2],
    pub right: [f64; 2],
    pub l2: f64,
    pub r2: f64,
    /// D-pad as axes in {-1, 0, 1}.
    pub dpad: [f64; 2],
    /// R1 held: full velocity gain.
    pub r1_held: bool,
}

impl JoystickInput {
    pub fn clamped(&self) -> Self {
        let c = |v: f64| if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 };
        let t = |v: f64| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
        Self {
            left: self.left.map(c),
            right: self.right.map(c),
            l2: t(self.l2),
            r2: t(self.r2),
            dpad: self.dpad.map(c),
            r1_held: self.r1_held,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JoystickRanges {
    pub torso_yaw: f64,
    pub torso_pitch_forward: f64,
    pub torso_lower: f64,
    pub torso_roll: f64,
    pub head_yaw: f64,
    pub head_pitch: f64,
    pub head_roll: f64,
    pub head_up: f64,
    pub head_down: f64,
    /// Fraction of right-stick yaw travel before the torso joins in.
    pub knee: f64,
    /// Torso pitch added by full right-stick pitch while standing.
    pub gaze_torso_pitch: f64,
    /// Velocity gain without R1 held.
    pub walk_gain: f64,
    /// Speed fraction above which antennas and eyes react.
    pub modulation_onset: f64,
    pub antenna_duck: f64,
    pub eye_narrow: f64,
}

impl Default for JoystickRanges {
    fn default() -> Self {
        Self {
            torso_yaw: 0.5,
            torso_pitch_forward: 0.35,
            torso_lower: 0.06,
            torso_roll: 0.25,
            head_yaw: 1.0,
            head_pitch: 0.5,
            head_roll: 0.4,
            head_up: 0.03,
            head_down: 0.04,
            knee: 0.8,
            gaze_torso_pitch: 0.15,
            walk_gain: 0.5,
            modulation_onset: 0.5,
            antenna_duck: -0.6,
            eye_narrow: 0.4,
        }
    }
}

/// Offsets produced by the sticks. The net gaze is `torso + head_local`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JoystickOffsets {
    pub torso: Euler,
    pub torso_height: f64,
    pub head_local: Euler,
    pub head_height: f64,
}

impl JoystickOffsets {
    pub fn gaze(&self) -> Euler {
        Euler::from_vector(&(self.torso.as_vector() + self.head_local.as_vector()))
    }

    pub fn as_array(&self) -> [f64; 8] {
        let (t, h) = (self.torso, self.head_local);
        [t.roll, t.pitch, t.yaw, self.torso_height, h.roll, h.pitch, h.yaw, self.head_height]
    }

    pub fn from_array(a: &[f64; 8]) -> Self {
        Self {
            torso: Euler::new(a[0], a[1], a[2]),
            torso_height: a[3],
            head_local: Euler::new(a[4], a[5], a[6]),
            head_height: a[7],
        }
    }
}

fn gaze_offsets(u: &JoystickInput, r: &JoystickRanges, standing: bool) -> JoystickOffsets {
    let [rx, ry] = u.right;
    let mut o = JoystickOffsets {
        head_local: Euler::new(u.dpad[0] * r.head_roll, -ry * r.head_pitch, -rx * r.head_yaw),
        head_height: if u.dpad[1] >= 0.0 { u.dpad[1] * r.head_up } else { u.dpad[1] * r.head_down },
        ..Default::default()
    };
    if standing {
        let beyond = ((rx.abs() - r.knee) / (1.0 - r.knee)).max(0.0);
        o.torso.yaw = -rx.signum() * beyond * r.torso_yaw;
        o.torso.pitch = -ry * r.gaze_torso_pitch;
    }
    o
}

/// Standing offsets: the left stick and triggers move the torso with the
/// head counter-rotating; the right stick and D-pad move the gaze.
pub fn standing_offsets(u: &JoystickInput, r: &JoystickRanges) -> JoystickOffsets {
    let u = u.clamped();
    let mut o = gaze_offsets(&u, r, true);
    let [lx, ly] = u.left;
    let posture = Euler::new(
        (u.r2 - u.l2) * r.torso_roll,
        ly.max(0.0) * r.torso_pitch_forward,
        -lx * r.torso_yaw,
    );
    o.torso = Euler::from_vector(&(o.torso.as_vector() + posture.as_vector()));
    o.head_local = Euler::from_vector(&(o.head_local.as_vector() - posture.as_vector()));
    o.torso_height = ly.min(0.0) * r.torso_lower;
    o
}

/// Walking: head offsets plus the path velocity command.
pub fn walking_offsets(
    u: &JoystickInput,
    r: &JoystickRanges,
    limits: &VelocityLimits,
) -> (JoystickOffsets, Vector2<f64>, f64) {
    let u = u.clamped();
    let gain = if u.r1_held { 1.0 } else { r.walk_gain };
    let v = Vector2::new(u.left[1] * limits.vx, (u.l2 - u.r2) * limits.vy) * gain;
    let omega = -u.left[0] * limits.omega * gain;
    (gaze_offsets(&u, r, false), v, omega)
}

/// Applies offsets to a configuration: torso offsets add to its Euler
/// angles, the head keeps its path-frame pose plus the net gaze, and the
/// neck is re-solved. Leg joints are left untouched.
pub fn apply_offsets(
    model: &RobotModel,
    y: &AnimationCommand,
    o: &JoystickOffsets,
    ranges: &CommandRanges,
) -> AnimationCommand {
    let c = &y.config;
    let head = *model.fk(&c.base_pose(), &c.q).get(model.head_link());
    let e = Euler::from_quat(&c.orientation);
    let (h, torso_e) = ranges.clamp_torso(
        c.position.z + o.torso_height,
        Euler::from_vector(&(e.as_vector() + o.torso.as_vector())),
    );
    let applied = torso_e.as_vector() - e.as_vector();
    let gaze = applied + o.head_local.as_vector();
    let head_e = Euler::from_vector(&(Euler::from_quat(&head.rotation).as_vector() + gaze));
    let torso: Isometry3<f64> = iso(Vector3::new(c.position.x, c.position.y, h), torso_e.to_quat());
    let rel = head.translation.z + o.head_height - h;
    let neck = model.solve_neck(&torso, rel, &head_e.to_quat());
    let mut config = c.clone();
    config.position.z = h;
    config.orientation = torso.rotation;
    config.q.fixed_rows_mut::<4>(idx::NY).copy_from_slice(&neck.q);
    AnimationCommand { show: y.show, config }
}

/// Standing joystick layer.
pub fn joystick_perp(
    model: &RobotModel,
    y: &AnimationCommand,
    u: &JoystickInput,
    r: &JoystickRanges,
    ranges: &CommandRanges,
) -> AnimationCommand {
    apply_offsets(model, y, &standing_offsets(u, r), ranges)
}

/// Antennas duck back and eyes narrow as the speed fraction approaches 1.
pub fn modulate_show(y: &mut AnimationCommand, v: &Vector2<f64>, limits: &VelocityLimits, r: &JoystickRanges) {
    let s = (v.norm() / limits.vx).min(1.0);
    let k = ((s - r.modulation_onset) / (1.0 - r.modulation_onset)).max(0.0);
    if k > 0.0 {
        for a in y.show.antennas.iter_mut() {
            *a += k * r.antenna_duck;
        }
        for e in y.show.eye_radius.iter_mut() {
            *e *= 1.0 - r.eye_narrow * k;
        }
        y.show = y.show.clamped();
    }
}

/// Walking joystick layer.
pub fn joystick_peri(
    model: &RobotModel,
    y: &AnimationCommand,
    u: &JoystickInput,
    r: &JoystickRanges,
    ranges: &CommandRanges,
) -> (AnimationCommand, Vector2<f64>, f64) {
    let (o, v, omega) = walking_offsets(u, r, &ranges.velocity);
    let mut out = apply_offsets(model, y, &o, ranges);
    modulate_show(&mut out, &v, &ranges.velocity, r);
    (out, v, omega)
}
