//! Independent per-joint rigid dynamics closed around the actuator models.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use stagebot_core::robot::{JointVector, LinkPoses, RobotConfig, RobotModel, NUM_JOINTS};

/// Semi-implicit Euler: velocity first, then position with the new velocity.
pub fn step_joint(q: f64, qd: f64, inertia: f64, tau: f64, dt: f64) -> (f64, f64) {
    let qd = qd + tau / inertia * dt;
    (q + qd * dt, qd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDynamics {
    /// `I_load + armature` per joint.
    pub inertia: JointVector,
    pub q: JointVector,
    pub qd: JointVector,
    pub lower: JointVector,
    pub upper: JointVector,
}

impl JointDynamics {
    pub fn new(inertia: JointVector, q: JointVector, lower: JointVector, upper: JointVector) -> Self {
        assert!(inertia.iter().all(|i| *i > 0.0), "joint inertia must be positive");
        Self {
            inertia,
            q,
            qd: JointVector::zeros(),
            lower,
            upper,
        }
    }

    /// Steps every joint; a joint that reaches a limit stops there.
    pub fn step(&mut self, tau: &JointVector, dt: f64) {
        for j in 0..NUM_JOINTS {
            let (q, qd) = step_joint(self.q[j], self.qd[j], self.inertia[j], tau[j], dt);
            let clamped = q.clamp(self.lower[j], self.upper[j]);
            self.q[j] = clamped;
            self.qd[j] = if clamped != q { 0.0 } else { qd };
        }
    }
}

/// Links rigidly carried by each joint, itself included.
pub fn joint_subtrees(model: &RobotModel) -> Vec<Vec<usize>> {
    let joints = &model.layout.joints;
    let n_links = model.layout.links.len();
    let parent_joint: Vec<Option<usize>> = (0..n_links).map(|l| joints.iter().position(|j| j.child == l)).collect();
    (0..joints.len())
        .map(|j| {
            (0..n_links)
                .filter(|&l| {
                    let mut cur = parent_joint[l];
                    while let Some(k) = cur {
                        if k == j {
                            return true;
                        }
                        cur = parent_joint[joints[k].parent];
                    }
                    false
                })
                .collect()
        })
        .collect()
}

/// Joint origin and unit axis in world coordinates.
pub fn joint_frame(model: &RobotModel, poses: &LinkPoses, j: usize) -> (Vector3<f64>, Vector3<f64>) {
    let joint = &model.layout.joints[j];
    let frame = poses.get(joint.parent) * joint.origin;
    (frame.translation.vector, frame.rotation * joint.axis.into_inner())
}

/// Load inertia about each joint axis with every other joint held at
/// `config`. Links count as point masses at their centers of mass.
pub fn load_inertia(model: &RobotModel, config: &RobotConfig) -> JointVector {
    let poses = model.forward_kinematics(config);
    let subtrees = joint_subtrees(model);
    JointVector::from_fn(|j, _| {
        let (o, a) = joint_frame(model, &poses, j);
        subtrees[j]
            .iter()
            .map(|&l| {
                let link = &model.layout.links[l];
                let r = poses.get(l) * nalgebra::Point3::from(link.com) - nalgebra::Point3::from(o);
                let along = r.dot(&a);
                link.mass * (r.norm_squared() - along * along).max(0.0)
            })
            .sum()
    })
}
