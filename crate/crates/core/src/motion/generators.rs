//! The perpetual (standing), periodic (walking) and episodic reference
//! generators. All are pure functions of frame, phase, command and data.

use nalgebra::{UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::clip::{FootPose, MotionClip};
use super::gait::{path_displacement, GaitLibrary};
use super::{PathFrame, VelocityLimits};
use crate::math::{heading, iso, Euler};
use crate::robot::{idx, JointVector, KinematicTargetState, RobotModel, Side};

/// Finite-difference step for reference velocities (s).
const FD_STEP: f64 = 1e-3;

/// Standing command: head offsets from nominal plus torso height and
/// orientation in path coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerpetualCommand {
    pub dh_head: f64,
    pub dtheta_head: Euler,
    pub h_torso: f64,
    pub theta_torso: Euler,
}

impl PerpetualCommand {
    pub fn nominal(model: &RobotModel) -> Self {
        Self {
            dh_head: 0.0,
            dtheta_head: Euler::ZERO,
            h_torso: model.nominal_torso_height(),
            theta_torso: Euler::ZERO,
        }
    }
}

/// Walking command: head offsets plus path velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PeriodicCommand {
    pub dh_head: f64,
    pub dtheta_head: Euler,
    pub velocity: Vector2<f64>,
    pub omega: f64,
}

/// Per-dimension command ranges, `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommandRanges {
    pub dh_head: [f64; 2],
    pub head_roll: [f64; 2],
    pub head_pitch: [f64; 2],
    pub head_yaw: [f64; 2],
    pub h_torso: [f64; 2],
    pub torso_roll: [f64; 2],
    pub torso_pitch: [f64; 2],
    pub torso_yaw: [f64; 2],
    pub velocity: VelocityLimits,
}

impl Default for CommandRanges {
    fn default() -> Self {
        Self {
            dh_head: [-0.04, 0.03],
            head_roll: [-0.4, 0.4],
            head_pitch: [-0.6, 0.6],
            head_yaw: [-1.5, 1.5],
            h_torso: [0.30, 0.38],
            torso_roll: [-0.25, 0.25],
            torso_pitch: [-0.15, 0.4],
            torso_yaw: [-0.5, 0.5],
            velocity: VelocityLimits::default(),
        }
    }
}

fn clamp2(v: f64, r: [f64; 2]) -> f64 {
    v.clamp(r[0], r[1])
}

impl CommandRanges {
    pub fn clamp_head(&self, dh: f64, e: Euler) -> (f64, Euler) {
        (
            clamp2(dh, self.dh_head),
            Euler::new(
                clamp2(e.roll, self.head_roll),
                clamp2(e.pitch, self.head_pitch),
                clamp2(e.yaw, self.head_yaw),
            ),
        )
    }

    pub fn clamp_torso(&self, h: f64, e: Euler) -> (f64, Euler) {
        (
            clamp2(h, self.h_torso),
            Euler::new(
                clamp2(e.roll, self.torso_roll),
                clamp2(e.pitch, self.torso_pitch),
                clamp2(e.yaw, self.torso_yaw),
            ),
        )
    }

    pub fn clamp_perpetual(&self, c: &PerpetualCommand) -> PerpetualCommand {
        let (dh_head, dtheta_head) = self.clamp_head(c.dh_head, c.dtheta_head);
        let (h_torso, theta_torso) = self.clamp_torso(c.h_torso, c.theta_torso);
        PerpetualCommand {
            dh_head,
            dtheta_head,
            h_torso,
            theta_torso,
        }
    }

    pub fn clamp_periodic(&self, c: &PeriodicCommand) -> PeriodicCommand {
        let (dh_head, dtheta_head) = self.clamp_head(c.dh_head, c.dtheta_head);
        let l = &self.velocity;
        PeriodicCommand {
            dh_head,
            dtheta_head,
            velocity: Vector2::new(c.velocity.x.clamp(-l.vx, l.vx), c.velocity.y.clamp(-l.vy, l.vy)),
            omega: c.omega.clamp(-l.omega, l.omega),
        }
    }
}

/// World poses the standing generator keeps the feet at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stance {
    pub feet: [FootPose; 2],
}

impl Stance {
    /// Feet at their nominal place under path frame `f`.
    pub fn nominal(model: &RobotModel, f: &PathFrame) -> Self {
        let foot = |side: Side| {
            let hip = model.layout.hip_offset(side);
            FootPose {
                position: f.point_to_world(&Vector3::new(hip.x, hip.y, model.layout.ankle_height)),
                yaw: f.heading,
            }
        };
        Self {
            feet: [foot(Side::Left), foot(Side::Right)],
        }
    }

    /// Feet where a reference state puts them, dropped onto the ground.
    pub fn from_state(model: &RobotModel, state: &KinematicTargetState) -> Self {
        let poses = model.fk(&state.base_pose(), &state.q);
        let foot = |side: Side| {
            let p = poses.get(model.foot_link(side));
            let mut position = p.translation.vector;
            position.z = model.layout.ankle_height;
            FootPose {
                position,
                yaw: heading(&p.rotation),
            }
        };
        Self {
            feet: [foot(Side::Left), foot(Side::Right)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedReference {
    pub state: KinematicTargetState,
    /// Phase rate implied by the generator (0 for standing).
    pub phase_rate: f64,
    /// Some IK target was out of reach and got clamped.
    pub clamped: bool,
}

fn with_central_velocities(
    mut center: KinematicTargetState,
    minus: &KinematicTargetState,
    plus: &KinematicTargetState,
    h: f64,
) -> KinematicTargetState {
    if h > 0.0 {
        center.linear_velocity = (plus.position - minus.position) / h;
        center.angular_velocity = (plus.orientation * minus.orientation.inverse()).scaled_axis() / h;
        center.qd = (plus.q - minus.q) / h;
    }
    center
}

/// Fills velocities of `cur` by backward difference from `prev`.
pub fn backward_velocities(prev: &KinematicTargetState, cur: &mut KinematicTargetState, dt: f64) {
    let prev = prev.clone();
    *cur = with_central_velocities(cur.clone(), &prev, &cur.clone(), dt);
}

fn state(
    position: Vector3<f64>,
    orientation: UnitQuaternion<f64>,
    q: JointVector,
    contacts: [bool; 2],
) -> KinematicTargetState {
    KinematicTargetState {
        position,
        orientation,
        linear_velocity: Vector3::zeros(),
        angular_velocity: Vector3::zeros(),
        q,
        qd: JointVector::zeros(),
        contact_left: contacts[0],
        contact_right: contacts[1],
    }
}

/// Standing pose: torso at (h_torso, theta_torso) in path coordinates, feet
/// flat at `stance`, head at nominal plus the head offsets.
pub fn gen_perpetual(
    model: &RobotModel,
    f: &PathFrame,
    cmd: &PerpetualCommand,
    stance: &Stance,
) -> GeneratedReference {
    let torso = f.pose_to_world(&iso(Vector3::new(0.0, 0.0, cmd.h_torso), cmd.theta_torso.to_quat()));
    let mut q = JointVector::zeros();
    let mut clamped = false;
    for side in Side::BOTH {
        let foot = &stance.feet[side.offset() / 5];
        let sol = model.solve_leg(side, &torso, &foot.position, foot.yaw);
        clamped |= sol.clamped;
        q.fixed_rows_mut::<5>(side.offset()).copy_from_slice(&sol.q);
    }
    let head = f.rotation() * cmd.dtheta_head.to_quat();
    let neck = model.solve_neck(&torso, model.nominal_head_height() + cmd.dh_head, &head);
    clamped |= neck.clamped;
    q.fixed_rows_mut::<4>(idx::NY).copy_from_slice(&neck.q);
    GeneratedReference {
        state: state(torso.translation.vector, torso.rotation, q, [true, true]),
        phase_rate: 0.0,
        clamped,
    }
}

fn periodic_pose(
    model: &RobotModel,
    f: &PathFrame,
    phi: f64,
    cmd: &PeriodicCommand,
    lib: &GaitLibrary,
) -> (KinematicTargetState, f64, bool) {
    let eval = lib.evaluate(&cmd.velocity, cmd.omega, phi);
    let (torso, q, clamped) = model.realize_gait_pose(f, &eval.pose, cmd.dh_head, &cmd.dtheta_head.to_quat());
    (
        state(torso.translation.vector, torso.rotation, q, eval.pose.contacts),
        eval.rate,
        clamped,
    )
}

/// Walking reference at phase `phi` for a (pre-clamped) command.
pub fn gen_periodic(
    model: &RobotModel,
    f: &PathFrame,
    phi: f64,
    cmd: &PeriodicCommand,
    lib: &GaitLibrary,
) -> GeneratedReference {
    let (center, rate, clamped) = periodic_pose(model, f, phi, cmd, lib);
    let h = FD_STEP;
    let side = |s: f64| {
        let g = f.compose(&path_displacement(&cmd.velocity, cmd.omega, s * h));
        periodic_pose(model, &g, phi + s * rate * h, cmd, lib).0
    };
    let state = with_central_velocities(center, &side(-1.0), &side(1.0), 2.0 * h);
    GeneratedReference {
        state,
        phase_rate: rate,
        clamped,
    }
}

/// Path frame of an episodic clip at phase `phi`, started at `f_start`.
pub fn episodic_path_frame(f_start: &PathFrame, phi: f64, clip: &MotionClip) -> PathFrame {
    f_start.compose(&clip.sample(phi).path)
}

fn episodic_pose(f_start: &PathFrame, phi: f64, clip: &MotionClip) -> KinematicTargetState {
    let frame = clip.sample(phi);
    let f = f_start.compose(&frame.path);
    let torso = f.pose_to_world(&iso(frame.torso_position, frame.torso_orientation));
    state(torso.translation.vector, torso.rotation, frame.q, frame.contacts)
}

/// Episodic reference: the clip frame at `phi` carried along the clip's own
/// path-frame trajectory from `f_start`.
pub fn gen_episodic(f_start: &PathFrame, phi: f64, clip: &MotionClip) -> GeneratedReference {
    let phi = phi.clamp(0.0, 1.0);
    let d = FD_STEP / clip.duration;
    let (lo, hi) = ((phi - d).max(0.0), (phi + d).min(1.0));
    let state = with_central_velocities(
        episodic_pose(f_start, phi, clip),
        &episodic_pose(f_start, lo, clip),
        &episodic_pose(f_start, hi, clip),
        (hi - lo) * clip.duration,
    );
    GeneratedReference {
        state,
        phase_rate: 1.0 / clip.duration,
        clamped: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::gait::GaitParams;
    use std::sync::OnceLock;

    fn fixture() -> &'static (RobotModel, GaitLibrary) {
        static LIB: OnceLock<(RobotModel, GaitLibrary)> = OnceLock::new();
        LIB.get_or_init(|| {
            let m = RobotModel::builtin();
            let lib = GaitLibrary::procedural(&m, &GaitParams::default(), &VelocityLimits::default()).unwrap();
            (m, lib)
        })
    }

    #[test]
    fn perpetual_identity_command_gives_nominal() {
        let (m, _) = fixture();
        let f = PathFrame::IDENTITY;
        let r = gen_perpetual(m, &f, &PerpetualCommand::nominal(m), &Stance::nominal(m, &f));
        assert!(!r.clamped);
        assert!((r.state.q - m.nominal_q()).amax() < 1e-6);
        assert!((r.state.position.z - m.nominal_torso_height()).abs() < 1e-12);
    }

    #[test]
    fn lowering_the_torso_flexes_knees_and_keeps_feet() {
        let (m, _) = fixture();
        let f = PathFrame::new(0.3, -0.2, 0.7);
        let stance = Stance::nominal(m, &f);
        let mut cmd = PerpetualCommand::nominal(m);
        cmd.h_torso -= 0.05;
        let r = gen_perpetual(m, &f, &cmd, &stance);
        assert!(!r.clamped);
        assert!(r.state.q[idx::L_KP] < m.nominal_q()[idx::L_KP]);
        let poses = m.fk(&r.state.base_pose(), &r.state.q);
        for side in Side::BOTH {
            let got = poses.get(m.foot_link(side)).translation.vector;
            assert!((got - stance.feet[side.offset() / 5].position).norm() < 1e-6);
        }
    }

    #[test]
    fn torso_yaw_extreme_keeps_feet_and_head() {
        let (m, _) = fixture();
        let f = PathFrame::IDENTITY;
        let stance = Stance::nominal(m, &f);
        let mut cmd = PerpetualCommand::nominal(m);
        cmd.theta_torso.yaw = CommandRanges::default().torso_yaw[1];
        let r = gen_perpetual(m, &f, &cmd, &stance);
        assert!(!r.clamped);
        assert!((heading(&r.state.orientation) - cmd.theta_torso.yaw).abs() < 1e-12);
        let poses = m.fk(&r.state.base_pose(), &r.state.q);
        let head = poses.get(m.head_link());
        assert!(head.rotation.angle() < 1e-9, "head must keep facing the path heading");
    }

    #[test]
    fn periodic_reproduces_sample_at_node() {
        let (m, lib) = fixture();
        let v = Vector2::new(0.35, -0.4);
        let clip = lib.sample_at(v, 1.8).unwrap();
        let cmd = PeriodicCommand {
            velocity: v,
            omega: 1.8,
            ..Default::default()
        };
        for (k, frame) in clip.frames.iter().enumerate().step_by(7) {
            let phi = k as f64 / clip.frames.len() as f64;
            let r = gen_periodic(m, &PathFrame::IDENTITY, phi, &cmd, lib);
            assert!((r.state.q - frame.q).amax() < 1e-9, "frame {k}");
            assert_eq!([r.state.contact_left, r.state.contact_right], frame.contacts);
            assert!((r.phase_rate - 1.0 / clip.duration).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_command_steps_in_place() {
        let (m, lib) = fixture();
        let r = gen_periodic(m, &PathFrame::IDENTITY, 0.2, &PeriodicCommand::default(), lib);
        assert!(!r.state.contact_left && r.state.contact_right);
        assert!(r.state.position.xy().norm() < 0.02);
    }

    #[test]
    fn periodic_is_one_periodic() {
        let (m, lib) = fixture();
        let cmd = PeriodicCommand {
            velocity: Vector2::new(0.2, 0.1),
            omega: -0.5,
            ..Default::default()
        };
        for phi in [0.0, 0.125, 0.5, 0.6875] {
            let a = gen_periodic(m, &PathFrame::IDENTITY, phi, &cmd, lib);
            let b = gen_periodic(m, &PathFrame::IDENTITY, phi + 1.0, &cmd, lib);
            assert_eq!(a.state.q, b.state.q);
            assert_eq!(a.state.position, b.state.position);
        }
    }

    #[test]
    fn path_frame_invariance() {
        let (m, lib) = fixture();
        let cmd = PeriodicCommand {
            velocity: Vector2::new(0.5, -0.1),
            omega: 0.9,
            dh_head: 0.01,
            dtheta_head: Euler::new(0.1, -0.1, 0.3),
        };
        let f1 = PathFrame::new(0.1, 0.2, 0.3);
        let t = PathFrame::new(-1.0, 2.0, 2.5);
        let f2 = t.compose(&f1);
        let a = gen_periodic(m, &f1, 0.37, &cmd, lib);
        let b = gen_periodic(m, &f2, 0.37, &cmd, lib);
        let moved = t.point_to_world(&a.state.position);
        assert!((moved - b.state.position).norm() < 1e-9);
        assert!((t.rotation() * a.state.orientation).angle_to(&b.state.orientation) < 1e-9);
        assert!((a.state.q - b.state.q).amax() < 1e-9);
    }

    #[test]
    fn forward_sample_advances_at_commanded_speed() {
        let (m, lib) = fixture();
        let cmd = PeriodicCommand {
            velocity: Vector2::new(0.7, 0.0),
            ..Default::default()
        };
        let clip = lib.sample_at(cmd.velocity, 0.0).unwrap();
        // Trapezoidal integral of the reference torso velocity over one cycle,
        // with the path frame moving at the command.
        let n = 400;
        let dt = clip.duration / n as f64;
        let mut disp = Vector3::zeros();
        let mut prev = None;
        for k in 0..=n {
            let t = k as f64 * dt;
            let f = path_displacement(&cmd.velocity, 0.0, t);
            let v = gen_periodic(m, &f, t / clip.duration, &cmd, lib).state.linear_velocity;
            if let Some(p) = prev {
                disp += (v + p) * 0.5 * dt;
            }
            prev = Some(v);
        }
        let expected = 0.7 * clip.duration;
        assert!((disp.x - expected).abs() < 0.05 * expected, "{} vs {}", disp.x, expected);
    }

    fn episodic_clip() -> MotionClip {
        use crate::motion::clip::{ClipCategory, ClipFrame};
        let frame = |x: f64, yaw: f64, a: f64| ClipFrame {
            path: PathFrame::new(x, 0.0, yaw),
            torso_position: Vector3::new(0.0, 0.0, 0.36),
            torso_orientation: Euler::new(0.0, a, 0.0).to_quat(),
            q: JointVector::from_element(a),
            contacts: [true, a < 0.1],
            feet: None,
            show: None,
        };
        MotionClip {
            name: "ep".into(),
            category: ClipCategory::Episodic,
            duration: 1.0,
            sample_rate: 2.0,
            show_track: None,
            gait: None,
            frames: vec![frame(0.0, 0.0, 0.0), frame(0.1, 0.2, 0.2), frame(0.2, 0.4, 0.0)],
        }
    }

    #[test]
    fn episodic_endpoints_and_midpoint() {
        let clip = episodic_clip();
        let f = PathFrame::new(1.0, 1.0, 0.5);
        let a = gen_episodic(&f, 0.0, &clip);
        assert!((a.state.position - Vector3::new(1.0, 1.0, 0.36)).norm() < 1e-12);
        let b = gen_episodic(&f, 1.0, &clip);
        let end = f.compose(&PathFrame::new(0.2, 0.0, 0.4));
        assert!((b.state.position.xy() - end.position).norm() < 1e-12);
        let mid = gen_episodic(&f, 0.25, &clip);
        assert!((mid.state.q[0] - 0.1).abs() < 1e-12);
        assert!((mid.phase_rate - 1.0).abs() < 1e-12);
        assert!(mid.state.qd[0] > 0.0);
        let c = gen_episodic(&f, 1.5, &clip);
        assert_eq!(c.state.q, b.state.q);
    }
}
