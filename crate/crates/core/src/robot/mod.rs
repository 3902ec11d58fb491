//! Kinematic model of the character: joint layout, forward kinematics,
//! closed-form leg/neck inverse kinematics and the head-torso proxy check.

mod ik;
pub mod layout;

use std::path::Path;

use nalgebra::{Isometry3, Point3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub use ik::{LegSolution, NeckSolution};
pub use layout::{
    idx, ActuatorType, JointLayout, JointVector, Side, JOINT_NAMES, LEG_JOINTS, NECK_JOINTS,
    NUM_JOINTS,
};

use crate::error::Result;
use crate::math::{iso, rotation_about};

/// Torso pose in path-frame coordinates plus the joint positions.
///
/// `position.z` is the torso height above the ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotConfig {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub q: JointVector,
}

impl RobotConfig {
    pub fn base_pose(&self) -> Isometry3<f64> {
        iso(self.position, self.orientation)
    }

    /// Re-normalizes the orientation quaternion.
    pub fn normalized(mut self) -> Self {
        self.orientation = UnitQuaternion::new_normalize(self.orientation.into_inner());
        self
    }
}

/// Full kinematic reference: torso pose and velocities (world), joint
/// positions and velocities, and the two foot contact flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicTargetState {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    pub q: JointVector,
    pub qd: JointVector,
    pub contact_left: bool,
    pub contact_right: bool,
}

impl KinematicTargetState {
    pub fn base_pose(&self) -> Isometry3<f64> {
        iso(self.position, self.orientation)
    }

    pub fn both_contacts(&self) -> bool {
        self.contact_left && self.contact_right
    }
}

/// World poses of every link, indexed like `JointLayout::links`.
#[derive(Debug, Clone)]
pub struct LinkPoses {
    pub poses: Vec<Isometry3<f64>>,
}

impl LinkPoses {
    pub fn get(&self, link: usize) -> &Isometry3<f64> {
        &self.poses[link]
    }
}

#[derive(Debug, Clone)]
pub struct RobotModel {
    pub layout: JointLayout,
    torso: usize,
    head: usize,
    feet: [usize; 2],
    nominal: RobotConfig,
}

impl RobotModel {
    pub fn new(layout: JointLayout) -> Result<Self> {
        let find = |name: &str| {
            layout
                .link_index(name)
                .ok_or_else(|| crate::Error::config(format!("model is missing link `{name}`")))
        };
        let torso = find("torso")?;
        let head = layout.joints[idx::NP].child;
        let feet = [layout.joints[idx::L_AP].child, layout.joints[idx::R_AP].child];
        let mut model = RobotModel {
            layout,
            torso,
            head,
            feet,
            nominal: RobotConfig {
                position: Vector3::zeros(),
                orientation: UnitQuaternion::identity(),
                q: JointVector::zeros(),
            },
        };
        model.nominal = model.build_nominal()?;
        Ok(model)
    }

    pub fn builtin() -> Self {
        Self::new(JointLayout::builtin()).expect("bundled model is consistent")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(JointLayout::load(path)?)
    }

    fn build_nominal(&self) -> Result<RobotConfig> {
        let hip_z = self.layout.hip_offset(Side::Left).z;
        let height = self.layout.ankle_height + self.layout.nominal_leg_length - hip_z;
        let torso = iso(Vector3::new(0.0, 0.0, height), UnitQuaternion::identity());
        let mut q = JointVector::zeros();
        for side in Side::BOTH {
            let hip = self.layout.hip_offset(side);
            let ankle = Vector3::new(hip.x, hip.y, self.layout.ankle_height);
            let sol = self.solve_leg(side, &torso, &ankle, 0.0);
            if sol.clamped {
                return Err(crate::Error::config("nominal stance is outside the leg workspace"));
            }
            q.fixed_rows_mut::<5>(side.offset()).copy_from_slice(&sol.q);
        }
        let nf = self.layout.nominal_neck_forward;
        q[idx::NF] = nf;
        q[idx::NP] = -(nf + self.layout.neck_wrist_tilt().unwrap_or(0.0));
        let config = RobotConfig {
            position: torso.translation.vector,
            orientation: UnitQuaternion::identity(),
            q,
        };
        if self.clamp_to_limits(&q) != q {
            return Err(crate::Error::config("nominal pose violates joint limits"));
        }
        Ok(config)
    }

    pub fn nominal_pose(&self) -> RobotConfig {
        self.nominal.clone()
    }

    pub fn nominal_q(&self) -> JointVector {
        self.nominal.q
    }

    pub fn nominal_torso_height(&self) -> f64 {
        self.nominal.position.z
    }

    pub fn torso_link(&self) -> usize {
        self.torso
    }

    pub fn head_link(&self) -> usize {
        self.head
    }

    pub fn foot_link(&self, side: Side) -> usize {
        match side {
            Side::Left => self.feet[0],
            Side::Right => self.feet[1],
        }
    }

    /// Poses every link given the torso pose and joint positions.
    pub fn fk(&self, base: &Isometry3<f64>, q: &JointVector) -> LinkPoses {
        let mut poses = vec![Isometry3::identity(); self.layout.links.len()];
        poses[self.layout.root] = *base;
        for &j in &self.layout.fk_order {
            let joint = &self.layout.joints[j];
            let motion = iso(Vector3::zeros(), rotation_about(&joint.axis, q[j]));
            poses[joint.child] = poses[joint.parent] * joint.origin * motion;
        }
        LinkPoses { poses }
    }

    pub fn forward_kinematics(&self, config: &RobotConfig) -> LinkPoses {
        self.fk(&config.base_pose(), &config.q)
    }

    /// Same as [`forward_kinematics`](Self::forward_kinematics) with the
    /// torso height overridden.
    pub fn forward_kinematics_at(&self, config: &RobotConfig, base_height: f64) -> LinkPoses {
        let mut base = config.base_pose();
        base.translation.vector.z = base_height;
        self.fk(&base, &config.q)
    }

    /// Sole contact point below the ankle of one foot.
    pub fn sole_point(&self, poses: &LinkPoses, side: Side) -> Point3<f64> {
        poses.get(self.foot_link(side)) * Point3::new(0.0, 0.0, -self.layout.ankle_height)
    }

    pub fn clamp_to_limits(&self, q: &JointVector) -> JointVector {
        JointVector::from_fn(|i, _| {
            let j = &self.layout.joints[i];
            q[i].max(j.lower).min(j.upper)
        })
    }

    /// Signed clearance between the head sphere and the torso box
    /// (negative when they overlap).
    pub fn head_torso_clearance(&self, config: &RobotConfig) -> f64 {
        self.head_torso_clearance_poses(&self.forward_kinematics(config))
    }

    pub fn head_torso_clearance_poses(&self, poses: &LinkPoses) -> f64 {
        let sphere = &self.layout.head_sphere;
        let bx = &self.layout.torso_box;
        let center_world = poses.get(sphere.link) * Point3::from(sphere.center);
        let in_box = poses.get(bx.link).inverse() * center_world;
        let local = in_box.coords - bx.center;
        let closest = Vector3::from_fn(|i, _| local[i].clamp(-bx.half_extents[i], bx.half_extents[i]));
        (local - closest).norm() - sphere.radius
    }

    pub fn head_self_collision(&self, config: &RobotConfig) -> bool {
        self.head_torso_clearance(config) < 0.0
    }

    /// Lowest point of the head sphere and of the torso box above z = 0.
    pub fn ground_clearance(&self, poses: &LinkPoses) -> (f64, f64) {
        let sphere = &self.layout.head_sphere;
        let head = (poses.get(sphere.link) * Point3::from(sphere.center)).z - sphere.radius;
        let bx = &self.layout.torso_box;
        let pose = poses.get(bx.link);
        let mut torso = f64::INFINITY;
        for k in 0..8 {
            let s = |b: usize| if k & (1 << b) == 0 { -1.0 } else { 1.0 };
            let corner = bx.center + Vector3::new(s(0), s(1), s(2)).component_mul(&bx.half_extents);
            torso = torso.min((pose * Point3::from(corner)).z);
        }
        (head, torso)
    }

    /// Height of the head frame above the torso origin in the nominal pose.
    pub fn nominal_head_height(&self) -> f64 {
        self.head_pose(&self.nominal).translation.z - self.nominal.position.z
    }

    /// Head frame expressed in the frame the config's torso pose lives in.
    pub fn head_pose(&self, config: &RobotConfig) -> Isometry3<f64> {
        *self.forward_kinematics(config).get(self.head)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{heading, Euler};

    fn model() -> RobotModel {
        RobotModel::builtin()
    }

    #[test]
    fn nominal_feet_under_hips_on_the_ground() {
        let m = model();
        let cfg = m.nominal_pose();
        let poses = m.forward_kinematics(&cfg);
        let l = m.sole_point(&poses, Side::Left);
        let r = m.sole_point(&poses, Side::Right);
        assert!(l.z.abs() < 1e-9 && r.z.abs() < 1e-9);
        let spacing = m.layout.hip_offset(Side::Left).y - m.layout.hip_offset(Side::Right).y;
        assert!((l.y - r.y - spacing).abs() < 1e-9);
        assert!((l.x - r.x).abs() < 1e-12);
    }

    #[test]
    fn nominal_torso_height_matches_fk() {
        let m = model();
        let cfg = m.nominal_pose();
        let poses = m.forward_kinematics(&cfg);
        assert!((poses.get(m.torso_link()).translation.z - m.nominal_torso_height()).abs() < 1e-12);
    }

    #[test]
    fn nominal_leg_length_is_0_28() {
        let m = model();
        let poses = m.forward_kinematics(&m.nominal_pose());
        for side in Side::BOTH {
            let hip = poses.get(m.layout.joints[side.offset() + 2].child).translation.vector;
            let ankle = poses.get(m.foot_link(side)).translation.vector;
            assert!(((hip - ankle).norm() - 0.28).abs() < 1e-6);
        }
    }

    #[test]
    fn nominal_is_fixed_point_of_clamping() {
        let m = model();
        let q = m.nominal_q();
        assert_eq!(m.clamp_to_limits(&q), q);
    }

    #[test]
    fn clamp_handles_far_out_values() {
        let m = model();
        let upper = m.layout.upper_limits();
        let q = upper.add_scalar(10.0);
        assert_eq!(m.clamp_to_limits(&q), upper);
        let c = m.clamp_to_limits(&q);
        assert_eq!(m.clamp_to_limits(&c), c);
    }

    #[test]
    fn neck_yaw_yaws_head_relative_to_torso() {
        let m = model();
        let mut cfg = m.nominal_pose();
        cfg.q[idx::NY] = 0.5;
        let poses = m.forward_kinematics(&cfg);
        let rel = poses.get(m.torso_link()).rotation.inverse() * poses.get(m.head_link()).rotation;
        assert!((heading(&rel) - 0.5).abs() < 1e-12);
        let e = Euler::from_quat(&rel);
        assert!(e.roll.abs() < 1e-12 && e.pitch.abs() < 1e-12);
    }

    #[test]
    fn nominal_pose_has_no_self_collision() {
        let m = model();
        assert!(!m.head_self_collision(&m.nominal_pose()));
        assert!(m.head_torso_clearance(&m.nominal_pose()) > 0.0);
    }

    #[test]
    fn tucked_neck_collides() {
        let m = model();
        let mut cfg = m.nominal_pose();
        cfg.q[idx::NF] = m.layout.joints[idx::NF].lower;
        cfg.q[idx::NP] = m.layout.joints[idx::NP].upper;
        assert!(m.head_self_collision(&cfg));
    }

    /// FK composition against a hand-built two-link chain.
    #[test]
    fn fk_matches_two_link_oracle() {
        let m = model();
        let mut cfg = m.nominal_pose();
        let (hp, kp) = (0.3, -0.7);
        cfg.q[idx::L_HY] = 0.0;
        cfg.q[idx::L_HR] = 0.0;
        cfg.q[idx::L_HP] = hp;
        cfg.q[idx::L_KP] = kp;
        let poses = m.forward_kinematics(&cfg);
        let (l1, l2) = m.layout.leg_lengths();
        let hip = cfg.position + m.layout.hip_offset(Side::Left);
        // planar chain about +y: a rotation of theta maps -z to (-sin, 0, -cos)
        let knee = hip + Vector3::new(-l1 * hp.sin(), 0.0, -l1 * hp.cos());
        let ankle = knee + Vector3::new(-l2 * (hp + kp).sin(), 0.0, -l2 * (hp + kp).cos());
        let got = poses.get(m.foot_link(Side::Left)).translation.vector;
        assert!((got - ankle).norm() < 1e-12);
    }
}
