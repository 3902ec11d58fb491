//! Closed-form inverse kinematics for the 5-DoF legs and the 4-DoF neck.

use std::f64::consts::PI;

use nalgebra::{Isometry3, Matrix3, UnitQuaternion, Vector3};

use super::{idx, RobotModel, Side};
use crate::math::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegSolution {
    /// HY, HR, HP, KP, AP.
    pub q: [f64; 5],
    /// The target was out of reach or a joint hit its limit.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeckSolution {
    /// NY, NR, NP, NF.
    pub q: [f64; 4],
    pub clamped: bool,
}

fn rz(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rx(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn ry(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

impl RobotModel {
    /// Places the ankle of one leg at `ankle` (world) with the foot's
    /// forward axis horizontal at heading `foot_yaw`. Foot roll is left free;
    /// the five joints cannot control it.
    pub fn solve_leg(
        &self,
        side: Side,
        torso: &Isometry3<f64>,
        ankle: &Vector3<f64>,
        foot_yaw: f64,
    ) -> LegSolution {
        let (l1, l2) = self.layout.leg_lengths();
        let r_t = torso.rotation.to_rotation_matrix().into_inner();
        let hip = torso.translation.vector + r_t * self.layout.hip_offset(side);
        let d = r_t.transpose() * (ankle - hip);
        let f = r_t.transpose() * Vector3::new(foot_yaw.cos(), foot_yaw.sin(), 0.0);

        let n = f.cross(&d);
        let n = if n.norm() < 1e-9 { Vector3::y() } else { n.normalize() };
        let hr = n.z.clamp(-1.0, 1.0).asin();
        let hy = (-n.x).atan2(n.y);
        let r1 = rz(hy) * rx(hr);
        let dp = r1.transpose() * d;
        let fp = r1.transpose() * f;
        let sole_pitch = (-fp.z).atan2(fp.x);

        let mut clamped = false;
        let len = dp.norm();
        let mut cos_k = (len * len - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
        if !(-1.0..=1.0).contains(&cos_k) {
            clamped = true;
            cos_k = cos_k.clamp(-1.0, 1.0);
        }
        // Knees bend backwards: negative knee pitch.
        let kp = -cos_k.acos();
        let gamma = (-dp.x).atan2(-dp.z);
        let hp = gamma - (l2 * kp.sin()).atan2(l1 + l2 * kp.cos());
        let ap = wrap_angle(sole_pitch - hp - kp);

        let mut q = [hy, hr, hp, kp, ap];
        for (k, v) in q.iter_mut().enumerate() {
            let j = &self.layout.joints[side.offset() + k];
            let c = v.clamp(j.lower, j.upper);
            if (c - *v).abs() > 1e-12 {
                clamped = true;
            }
            *v = c;
        }
        LegSolution { q, clamped }
    }

    /// Places the head frame at height `head_height_rel` above the torso
    /// origin (measured along world z) with world orientation `head`.
    /// The head's horizontal position follows from the neck geometry.
    pub fn solve_neck(
        &self,
        torso: &Isometry3<f64>,
        head_height_rel: f64,
        head: &UnitQuaternion<f64>,
    ) -> NeckSolution {
        let r_t = torso.rotation.to_rotation_matrix().into_inner();
        let base = self.layout.neck_base();
        let len = self.layout.neck_length();
        let row = r_t.row(2);
        let (r31, r33) = (row[0], row[2]);
        let mut clamped = false;

        let mut c = (head_height_rel - row.dot(&base.transpose())) / len;
        let amp = r31.hypot(r33);
        if amp < 1e-9 {
            clamped = true;
            c = 0.0;
        }
        let mut s = if amp < 1e-9 { 0.0 } else { c / amp };
        if !(-1.0..=1.0).contains(&s) {
            clamped = true;
            s = s.clamp(-1.0, 1.0);
        }
        let delta = r33.atan2(r31);
        let nominal_nf = self.layout.nominal_neck_forward;
        let a = s.asin();
        let nf = [a - delta, PI - a - delta]
            .into_iter()
            .map(|v| nominal_nf + wrap_angle(v - nominal_nf))
            .min_by(|x, y| (x - nominal_nf).abs().total_cmp(&(y - nominal_nf).abs()))
            .expect("two candidates");

        let tilt = self.layout.neck_wrist_tilt().unwrap_or(0.0);
        let wrist = (r_t * ry(nf + tilt)).transpose() * head.to_rotation_matrix().into_inner();
        let nr = wrist[(2, 1)].clamp(-1.0, 1.0).asin();
        let np = (-wrist[(2, 0)]).atan2(wrist[(2, 2)]);
        let ny = (-wrist[(0, 1)]).atan2(wrist[(1, 1)]);

        let mut q = [ny, nr, np, nf];
        for (k, v) in q.iter_mut().enumerate() {
            let j = &self.layout.joints[idx::NY + k];
            let c = v.clamp(j.lower, j.upper);
            if (c - *v).abs() > 1e-12 {
                clamped = true;
            }
            *v = c;
        }
        NeckSolution { q, clamped }
    }
}
