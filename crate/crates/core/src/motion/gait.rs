//! Gait library: one-cycle gait samples on a (vx, vy, omega) grid and
//! their multilinear blend.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Isometry3, SVector, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::clip::{ClipCategory, ClipFrame, FootPose, GaitTag, MotionClip};
use super::{PathFrame, VelocityLimits};
use crate::error::{Error, Result};
use crate::math::{iso, rot2, Euler};
use crate::robot::{idx, JointVector, RobotModel, Side};

/// Parameters of the procedural gait samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaitParams {
    pub vx_grid: Vec<f64>,
    pub vy_grid: Vec<f64>,
    pub omega_grid: Vec<f64>,
    pub frames_per_cycle: usize,
    /// Cycle duration at rest and at full speed.
    pub cycle_slow: f64,
    pub cycle_fast: f64,
    /// Fraction of the cycle each foot spends in the air.
    pub swing_fraction: f64,
    pub step_height: f64,
    pub torso_height: f64,
    pub sway: f64,
    pub bob: f64,
    /// Forward torso pitch at full forward speed.
    pub lean: f64,
    pub head_bob: f64,
}

impl Default for GaitParams {
    fn default() -> Self {
        Self {
            vx_grid: vec![-0.7, -0.35, 0.0, 0.35, 0.7],
            vy_grid: vec![-0.4, 0.0, 0.4],
            omega_grid: vec![-1.8, 0.0, 1.8],
            frames_per_cycle: 100,
            cycle_slow: 0.7,
            cycle_fast: 0.55,
            swing_fraction: 0.4,
            step_height: 0.05,
            torso_height: 0.36,
            sway: 0.015,
            bob: 0.005,
            lean: 0.12,
            head_bob: 0.004,
        }
    }
}

/// Path frame reached after moving at constant `v`, `omega` for `t` seconds.
pub fn path_displacement(v: &Vector2<f64>, omega: f64, t: f64) -> PathFrame {
    let a = omega * t;
    let p = if omega.abs() < 1e-12 {
        v * t
    } else {
        let (s, c) = a.sin_cos();
        Vector2::new(s * v.x - (1.0 - c) * v.y, (1.0 - c) * v.x + s * v.y) / omega
    };
    PathFrame::new(p.x, p.y, a)
}

fn min_jerk(w: f64) -> f64 {
    w * w * w * (10.0 - 15.0 * w + 6.0 * w * w)
}

/// Swing interval start of each foot; the other foot swings half a cycle later.
fn swing_start(side: Side) -> f64 {
    match side {
        Side::Left => 0.0,
        Side::Right => 0.5,
    }
}

/// Task-space targets of a gait frame, all relative to the path frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitPose {
    pub torso: Isometry3<f64>,
    pub feet: [FootPose; 2],
    /// Head frame height above the torso origin.
    pub head_height: f64,
    pub head_orientation: UnitQuaternion<f64>,
    pub contacts: [bool; 2],
}

impl RobotModel {
    /// Joint positions realizing a gait pose placed at path frame `f`, with
    /// extra head height and head orientation offsets.
    pub fn realize_gait_pose(
        &self,
        f: &PathFrame,
        pose: &GaitPose,
        dh_head: f64,
        dtheta_head: &UnitQuaternion<f64>,
    ) -> (Isometry3<f64>, JointVector, bool) {
        let torso = f.pose_to_world(&pose.torso);
        let mut q = JointVector::zeros();
        let mut clamped = false;
        for side in Side::BOTH {
            let foot = &pose.feet[side.offset() / 5];
            let ankle = f.point_to_world(&foot.position);
            let sol = self.solve_leg(side, &torso, &ankle, f.heading + foot.yaw);
            clamped |= sol.clamped;
            q.fixed_rows_mut::<5>(side.offset()).copy_from_slice(&sol.q);
        }
        let head = f.rotation() * pose.head_orientation * dtheta_head;
        let neck = self.solve_neck(&torso, pose.head_height + dh_head, &head);
        clamped |= neck.clamped;
        q.fixed_rows_mut::<4>(idx::NY).copy_from_slice(&neck.q);
        (torso, q, clamped)
    }
}

/// Builds the one-cycle gait sample for a command point.
pub fn synthesize_sample(
    model: &RobotModel,
    params: &GaitParams,
    limits: &VelocityLimits,
    v: Vector2<f64>,
    omega: f64,
) -> MotionClip {
    let speed = (v.x.abs() / limits.vx)
        .max(v.y.abs() / limits.vy)
        .max(omega.abs() / limits.omega)
        .min(1.0);
    let period = params.cycle_slow - (params.cycle_slow - params.cycle_fast) * speed;
    let n = params.frames_per_cycle;
    let sw = params.swing_fraction;
    let stance_half = 0.5 * (1.0 - sw);
    let ankle_z = model.layout.ankle_height;
    let head_height = model.nominal_head_height();

    // Stance foot in path coordinates, `s` seconds after midstance: the foot
    // is fixed in the world while the path frame moves.
    let stance = |side: Side, s: f64| -> FootPose {
        let hip = model.layout.hip_offset(side);
        let mid = Vector2::new(hip.x, hip.y);
        let p = if omega.abs() < 1e-12 {
            mid - v * s
        } else {
            let c = Vector2::new(-v.y, v.x) / omega;
            c + rot2(-omega * s, &(mid - c))
        };
        FootPose {
            position: Vector3::new(p.x, p.y, ankle_z),
            yaw: -omega * s,
        }
    };

    let frames = (0..n)
        .map(|k| {
            let phi = k as f64 / n as f64;
            let mut feet = [stance(Side::Left, 0.0); 2];
            let mut contacts = [true; 2];
            for side in Side::BOTH {
                let i = side.offset() / 5;
                let u = (phi - swing_start(side)).rem_euclid(1.0);
                if u < sw {
                    let lift = stance(side, stance_half * period);
                    let land = stance(side, -stance_half * period);
                    let w = u / sw;
                    let m = min_jerk(w);
                    let xy = lift.position.lerp(&land.position, m);
                    feet[i] = FootPose {
                        position: Vector3::new(xy.x, xy.y, ankle_z + params.step_height * 0.5 * (1.0 - (2.0 * PI * w).cos())),
                        yaw: lift.yaw + (land.yaw - lift.yaw) * m,
                    };
                    contacts[i] = false;
                } else {
                    feet[i] = stance(side, (u - sw - stance_half) * period);
                }
            }
            let torso = iso(
                Vector3::new(
                    0.0,
                    -params.sway * (2.0 * PI * phi).sin(),
                    params.torso_height + params.bob * (4.0 * PI * phi).cos(),
                ),
                Euler::new(0.0, params.lean * v.x / limits.vx, 0.0).to_quat(),
            );
            let pose = GaitPose {
                torso,
                feet,
                head_height: head_height - params.head_bob * (4.0 * PI * phi).cos(),
                head_orientation: UnitQuaternion::identity(),
                contacts,
            };
            let (_, q, _) = model.realize_gait_pose(&PathFrame::IDENTITY, &pose, 0.0, &UnitQuaternion::identity());
            ClipFrame {
                path: path_displacement(&v, omega, phi * period),
                torso_position: torso.translation.vector,
                torso_orientation: torso.rotation,
                q,
                contacts,
                feet: Some(feet),
                show: None,
            }
        })
        .collect();
    MotionClip {
        name: format!("gait_{}_{}_{}", v.x, v.y, omega),
        category: ClipCategory::GaitSample,
        duration: period,
        sample_rate: n as f64 / period,
        show_track: None,
        gait: Some(GaitTag { velocity: v, omega }),
        frames,
    }
}

const CHANNELS: usize = 20;
type Channels = SVector<f64, CHANNELS>;

/// Torso (xyz, rpy), feet (xyz, yaw each), head height, head rpy, contacts.
fn channels_of(model: &RobotModel, frame: &ClipFrame) -> Channels {
    let torso = iso(frame.torso_position, frame.torso_orientation);
    let head = model.fk(&torso, &frame.q);
    let head = head.get(model.head_link());
    let feet = frame.feet.expect("gait samples carry feet");
    let mut c = Channels::zeros();
    c.fixed_rows_mut::<3>(0).copy_from(&frame.torso_position);
    c.fixed_rows_mut::<3>(3).copy_from(&Euler::from_quat(&frame.torso_orientation).as_vector());
    for (i, f) in feet.iter().enumerate() {
        c.fixed_rows_mut::<3>(6 + 4 * i).copy_from(&f.position);
        c[9 + 4 * i] = f.yaw;
    }
    c[14] = head.translation.z - frame.torso_position.z;
    c.fixed_rows_mut::<3>(15).copy_from(&Euler::from_quat(&head.rotation).as_vector());
    c[18] = f64::from(u8::from(frame.contacts[0]));
    c[19] = f64::from(u8::from(frame.contacts[1]));
    c
}

fn pose_of(c: &Channels) -> GaitPose {
    let v3 = |o: usize| Vector3::new(c[o], c[o + 1], c[o + 2]);
    let foot = |i: usize| FootPose {
        position: v3(6 + 4 * i),
        yaw: c[9 + 4 * i],
    };
    GaitPose {
        torso: iso(v3(0), Euler::from_vector(&v3(3)).to_quat()),
        feet: [foot(0), foot(1)],
        head_height: c[14],
        head_orientation: Euler::from_vector(&v3(15)).to_quat(),
        contacts: [c[18] > 0.5, c[19] > 0.5],
    }
}

#[derive(Debug, Clone)]
struct Sample {
    clip: MotionClip,
    channels: Vec<Channels>,
}

impl Sample {
    fn at(&self, phi: f64) -> Channels {
        let n = self.channels.len();
        let x = phi.rem_euclid(1.0) * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        let t = x - i as f64;
        if t == 0.0 {
            return self.channels[i];
        }
        self.channels[i] * (1.0 - t) + self.channels[(i + 1) % n] * t
    }
}

/// Output of the gait blend at one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitEval {
    pub pose: GaitPose,
    /// Phase rate, 1 / interpolated cycle duration.
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct GaitLibrary {
    samples: Vec<Sample>,
    grid: [Vec<f64>; 3],
    index: HashMap<[usize; 3], usize>,
    left_step_onset: f64,
    right_step_onset: f64,
}

fn grid_position(grid: &[f64], x: f64) -> [(usize, f64); 2] {
    if grid.len() == 1 {
        return [(0, 1.0), (0, 0.0)];
    }
    let x = x.clamp(grid[0], grid[grid.len() - 1]);
    let i = grid.windows(2).position(|w| x <= w[1]).unwrap_or(grid.len() - 2);
    let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    [(i, 1.0 - t), (i + 1, t)]
}

impl GaitLibrary {
    /// Synthesizes the full grid of procedural gait samples.
    pub fn procedural(model: &RobotModel, params: &GaitParams, limits: &VelocityLimits) -> Result<Self> {
        let mut clips = Vec::new();
        for &vx in &params.vx_grid {
            for &vy in &params.vy_grid {
                for &w in &params.omega_grid {
                    clips.push(synthesize_sample(model, params, limits, Vector2::new(vx, vy), w));
                }
            }
        }
        Self::from_clips(model, clips)
    }

    pub fn from_clips(model: &RobotModel, clips: Vec<MotionClip>) -> Result<Self> {
        let mut grid: [Vec<f64>; 3] = Default::default();
        for c in &clips {
            c.validate()?;
            let tag = c
                .gait
                .ok_or_else(|| Error::config(format!("clip `{}` is not a gait sample", c.name)))?;
            for (g, v) in grid.iter_mut().zip([tag.velocity.x, tag.velocity.y, tag.omega]) {
                if !g.contains(&v) {
                    g.push(v);
                }
            }
        }
        for g in grid.iter_mut() {
            g.sort_by(f64::total_cmp);
        }
        let mut index = HashMap::new();
        for (k, c) in clips.iter().enumerate() {
            let tag = c.gait.expect("checked above");
            let key = [
                grid[0].iter().position(|v| *v == tag.velocity.x).expect("on grid"),
                grid[1].iter().position(|v| *v == tag.velocity.y).expect("on grid"),
                grid[2].iter().position(|v| *v == tag.omega).expect("on grid"),
            ];
            if index.insert(key, k).is_some() {
                return Err(Error::config(format!("duplicate gait sample at {:?}", [tag.velocity.x, tag.velocity.y, tag.omega])));
            }
        }
        let expected = grid.iter().map(Vec::len).product::<usize>();
        if index.len() != expected {
            return Err(Error::config(format!(
                "gait samples do not form a full grid: {} of {expected} command points present",
                index.len()
            )));
        }
        let zero = grid.iter().map(|g| g.iter().position(|v| *v == 0.0)).collect::<Option<Vec<_>>>();
        let zero = zero.ok_or_else(|| Error::config("gait library lacks the in-place stepping sample"))?;
        let samples: Vec<Sample> = clips
            .into_iter()
            .map(|clip| Sample {
                channels: clip.frames.iter().map(|f| channels_of(model, f)).collect(),
                clip,
            })
            .collect();

        let zero_clip = &samples[index[&[zero[0], zero[1], zero[2]]]].clip;
        let onset = |i: usize| -> Result<f64> {
            let n = zero_clip.frames.len();
            (0..n)
                .find(|&k| zero_clip.frames[(k + n - 1) % n].contacts[i] && !zero_clip.frames[k].contacts[i])
                .map(|k| k as f64 / n as f64)
                .ok_or_else(|| Error::config("in-place sample has no step for one of the feet"))
        };
        Ok(Self {
            left_step_onset: onset(0)?,
            right_step_onset: onset(1)?,
            samples,
            grid,
            index,
        })
    }

    pub fn load_dir(model: &RobotModel, dir: &Path) -> Result<Self> {
        let lib = super::clip::ClipLibrary::load_dir(dir)?;
        let clips: Vec<_> = lib.iter().filter(|c| c.category == ClipCategory::GaitSample).cloned().collect();
        Self::from_clips(model, clips)
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for s in &self.samples {
            s.clip.save(&dir.join(format!("{}.clip", s.clip.name)))?;
        }
        Ok(())
    }

    pub fn clips(&self) -> impl Iterator<Item = &MotionClip> {
        self.samples.iter().map(|s| &s.clip)
    }

    /// The stored sample at a grid node.
    pub fn sample_at(&self, v: Vector2<f64>, omega: f64) -> Option<&MotionClip> {
        let find = |g: &[f64], x: f64| g.iter().position(|v| *v == x);
        let key = [find(&self.grid[0], v.x)?, find(&self.grid[1], v.y)?, find(&self.grid[2], omega)?];
        self.index.get(&key).map(|&k| &self.samples[k].clip)
    }

    /// Phase at which the left foot lifts off.
    pub fn left_step_onset(&self) -> f64 {
        self.left_step_onset
    }

    pub fn right_step_onset(&self) -> f64 {
        self.right_step_onset
    }

    /// Command box spanned by the grid.
    pub fn bounds(&self) -> [(f64, f64); 3] {
        std::array::from_fn(|i| (self.grid[i][0], self.grid[i][self.grid[i].len() - 1]))
    }

    /// Multilinear blend of the samples around `(v, omega)` at phase `phi`.
    pub fn evaluate(&self, v: &Vector2<f64>, omega: f64, phi: f64) -> GaitEval {
        let [a, b, c] = [
            grid_position(&self.grid[0], v.x),
            grid_position(&self.grid[1], v.y),
            grid_position(&self.grid[2], omega),
        ];
        let mut acc = Channels::zeros();
        let mut rate = 0.0;
        let mut first = true;
        for &(i, wi) in &a {
            for &(j, wj) in &b {
                for &(k, wk) in &c {
                    let w = wi * wj * wk;
                    if w == 0.0 {
                        continue;
                    }
                    let s = &self.samples[self.index[&[i, j, k]]];
                    if first && w == 1.0 {
                        return GaitEval {
                            pose: pose_of(&s.at(phi)),
                            rate: 1.0 / s.clip.duration,
                        };
                    }
                    first = false;
                    acc += s.at(phi) * w;
                    rate += w / s.clip.duration;
                }
            }
        }
        GaitEval {
            pose: pose_of(&acc),
            rate,
        }
    }
}
