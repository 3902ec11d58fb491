//! Policy state: torso pose in path coordinates, body-frame velocities,
//! joint state and the two previous actions.

use nalgebra::{Isometry3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::motion::PathFrame;
use crate::robot::{JointVector, NUM_JOINTS};

/// Layout tag of [`Observation::to_vec`].
pub const OBSERVATION_LAYOUT: &str = "obs/1";
pub const OBSERVATION_DIM: usize = 2 + 3 + 3 + 3 + 4 * NUM_JOINTS;

/// What the robot (or the simulator) reports at a decision tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredState {
    pub base: Isometry3<f64>,
    /// World-frame torso velocities.
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    pub q: JointVector,
    pub qd: JointVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionHistory {
    pub prev: JointVector,
    pub prev2: JointVector,
}

impl ActionHistory {
    pub fn constant(a: JointVector) -> Self {
        Self { prev: a, prev2: a }
    }

    pub fn push(&mut self, a: JointVector) {
        self.prev2 = self.prev;
        self.prev = a;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub position: Vector2<f64>,
    /// Rotation vector of the torso orientation relative to the path frame.
    pub orientation: Vector3<f64>,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    pub q: JointVector,
    pub qd: JointVector,
    pub history: ActionHistory,
}

pub fn build_observation(state: &MeasuredState, f: &PathFrame, history: &ActionHistory) -> Observation {
    let local = f.pose_to_local(&state.base);
    let body = state.base.rotation.inverse();
    Observation {
        position: local.translation.vector.xy(),
        orientation: local.rotation.scaled_axis(),
        linear_velocity: body * state.linear_velocity,
        angular_velocity: body * state.angular_velocity,
        q: state.q,
        qd: state.qd,
        history: *history,
    }
}

impl Observation {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(OBSERVATION_DIM);
        v.extend(self.position.iter());
        v.extend(self.orientation.iter());
        v.extend(self.linear_velocity.iter());
        v.extend(self.angular_velocity.iter());
        v.extend(self.q.iter());
        v.extend(self.qd.iter());
        v.extend(self.history.prev.iter());
        v.extend(self.history.prev2.iter());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{iso, rot_z, Euler};
    use proptest::prelude::*;

    fn state(base: Isometry3<f64>, v: Vector3<f64>, w: Vector3<f64>) -> MeasuredState {
        MeasuredState {
            base,
            linear_velocity: v,
            angular_velocity: w,
            q: JointVector::from_element(0.1),
            qd: JointVector::zeros(),
        }
    }

    #[test]
    fn torso_at_frame_is_zero() {
        let f = PathFrame::new(1.0, -2.0, 0.7);
        let s = state(iso(Vector3::new(1.0, -2.0, 0.36), rot_z(0.7)), Vector3::zeros(), Vector3::zeros());
        let o = build_observation(&s, &f, &ActionHistory::constant(JointVector::zeros()));
        assert!(o.position.norm() < 1e-12);
        assert!(o.orientation.norm() < 1e-12);
        assert_eq!(o.linear_velocity, Vector3::zeros());
        assert_eq!(o.to_vec().len(), OBSERVATION_DIM);
    }

    #[test]
    fn forward_velocity_in_body_frame() {
        let s = state(iso(Vector3::zeros(), rot_z(std::f64::consts::FRAC_PI_2)), Vector3::new(0.0, 0.5, 0.0), Vector3::new(0.0, 0.0, 1.0));
        let o = build_observation(&s, &PathFrame::IDENTITY, &ActionHistory::constant(JointVector::zeros()));
        assert!((o.linear_velocity - Vector3::new(0.5, 0.0, 0.0)).norm() < 1e-12);
        assert!((o.angular_velocity.z - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn invariant_to_world_transform(
            x in -5.0f64..5.0, y in -5.0f64..5.0, yaw in -3.0f64..3.0,
            px in -0.3f64..0.3, py in -0.3f64..0.3, r in -0.3f64..0.3, p in -0.3f64..0.3, h in -3.0f64..3.0,
            vx in -1.0f64..1.0, wz in -2.0f64..2.0,
        ) {
            let f = PathFrame::new(0.2, -0.1, 0.4);
            let base = iso(Vector3::new(px, py, 0.35), Euler::new(r, p, h).to_quat());
            let s = state(base, Vector3::new(vx, 0.2, -0.1), Vector3::new(0.1, 0.0, wz));
            let hist = ActionHistory::constant(JointVector::from_element(0.3));
            let a = build_observation(&s, &f, &hist).to_vec();

            let g = PathFrame::new(x, y, yaw);
            let t = g.to_isometry();
            let moved = MeasuredState {
                base: t * base,
                linear_velocity: t.rotation * s.linear_velocity,
                angular_velocity: t.rotation * s.angular_velocity,
                ..s.clone()
            };
            let b = build_observation(&moved, &g.compose(&f), &hist).to_vec();
            for (u, w) in a.iter().zip(&b) {
                prop_assert!((u - w).abs() < 1e-12, "{u} vs {w}");
            }
        }
    }
}
