use nalgebra::{Isometry3, Point3, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::math::{angle_diff, heading, iso, rot2, rot_z, wrap_angle};

/// Planar frame that anchors every motion reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFrame {
    pub position: Vector2<f64>,
    pub heading: f64,
}

impl Default for PathFrame {
    fn default() -> Self {
        Self::IDENTITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFrameParams {
    /// Time constant of the standing convergence toward the feet.
    pub t_pf: f64,
    /// Maximum planar distance from the torso.
    pub d_max: f64,
    /// Maximum heading difference from the torso.
    pub psi_max: f64,
}

impl Default for PathFrameParams {
    fn default() -> Self {
        Self {
            t_pf: 1.0,
            d_max: 0.3,
            psi_max: 0.5,
        }
    }
}

impl PathFrame {
    pub const IDENTITY: PathFrame = PathFrame {
        position: Vector2::new(0.0, 0.0),
        heading: 0.0,
    };

    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            position: Vector2::new(x, y),
            heading: wrap_angle(heading),
        }
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        rot_z(self.heading)
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        iso(Vector3::new(self.position.x, self.position.y, 0.0), self.rotation())
    }

    /// Planar frame of a 3D pose: its xy position and heading.
    pub fn from_pose(pose: &Isometry3<f64>) -> Self {
        let t = pose.translation.vector;
        Self::new(t.x, t.y, heading(&pose.rotation))
    }

    /// `self ∘ rel`: a frame given relative to `self` expressed in world.
    pub fn compose(&self, rel: &PathFrame) -> PathFrame {
        let p = self.position + rot2(self.heading, &rel.position);
        PathFrame::new(p.x, p.y, self.heading + rel.heading)
    }

    /// `self⁻¹ ∘ other`: `other` expressed relative to `self`.
    pub fn relative(&self, other: &PathFrame) -> PathFrame {
        let p = rot2(-self.heading, &(other.position - self.position));
        PathFrame::new(p.x, p.y, angle_diff(other.heading, self.heading))
    }

    pub fn point_to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        (self.to_isometry() * Point3::from(*p)).coords
    }

    pub fn pose_to_world(&self, pose: &Isometry3<f64>) -> Isometry3<f64> {
        self.to_isometry() * pose
    }

    pub fn pose_to_local(&self, pose: &Isometry3<f64>) -> Isometry3<f64> {
        self.to_isometry().inverse() * pose
    }

    /// Componentwise interpolation with shortest-arc heading.
    pub fn interpolate(&self, other: &PathFrame, t: f64) -> PathFrame {
        let p = self.position + (other.position - self.position) * t;
        PathFrame::new(p.x, p.y, self.heading + angle_diff(other.heading, self.heading) * t)
    }
}

/// Average planar position and heading of the two feet.
pub fn feet_average(left: &Isometry3<f64>, right: &Isometry3<f64>) -> PathFrame {
    let l = PathFrame::from_pose(left);
    let r = PathFrame::from_pose(right);
    let p = (l.position + r.position) * 0.5;
    PathFrame::new(p.x, p.y, l.heading + 0.5 * angle_diff(r.heading, l.heading))
}

/// First-order convergence toward the feet average with time constant `t_pf`.
pub fn update_path_frame_standing(
    f: &PathFrame,
    left: &Isometry3<f64>,
    right: &Isometry3<f64>,
    dt: f64,
    t_pf: f64,
) -> PathFrame {
    let target = feet_average(left, right);
    let k = 1.0 - (-dt / t_pf).exp();
    let p = f.position + (target.position - f.position) * k;
    PathFrame::new(p.x, p.y, f.heading + k * angle_diff(target.heading, f.heading))
}

/// Integrates the path velocity commands, heading first.
pub fn update_path_frame_walking(f: &PathFrame, v: &Vector2<f64>, omega: f64, dt: f64) -> PathFrame {
    let heading = wrap_angle(f.heading + omega * dt);
    let p = f.position + rot2(heading, v) * dt;
    PathFrame {
        position: p,
        heading,
    }
}

/// Pulls `f` back within `d_max` and `psi_max` of the torso pose.
pub fn project_path_frame(f: &PathFrame, torso: &Isometry3<f64>, d_max: f64, psi_max: f64) -> PathFrame {
    let t = PathFrame::from_pose(torso);
    let off = f.position - t.position;
    let dist = off.norm();
    let position = if dist > d_max {
        t.position + off * (d_max / dist)
    } else {
        f.position
    };
    let dh = angle_diff(f.heading, t.heading);
    let heading = if dh.abs() > psi_max {
        wrap_angle(t.heading + psi_max.copysign(dh))
    } else {
        f.heading
    };
    PathFrame { position, heading }
}
