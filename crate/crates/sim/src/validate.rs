//! Library checks for the `validate` verb. Every problem is collected
//! instead of stopping at the first.

use std::path::Path;

use serde::Serialize;
use stagebot_core::motion::{ClipCategory, ClipLibrary, GaitLibrary, MotionClip};
use stagebot_core::robot::{RobotModel, JOINT_NAMES};

/// Slack on joint limits for interpolated clip content.
const LIMIT_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub clips: usize,
    pub gait_samples: usize,
    pub problems: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Frame-level checks beyond what parsing enforces.
pub fn check_clip(model: &RobotModel, clip: &MotionClip) -> Vec<String> {
    let mut out = Vec::new();
    if let Err(e) = clip.validate() {
        out.push(e.to_string());
        return out;
    }
    let (lo, hi) = (model.layout.lower_limits(), model.layout.upper_limits());
    for (i, f) in clip.frames.iter().enumerate() {
        if let Some(j) = (0..JOINT_NAMES.len()).find(|&j| f.q[j] < lo[j] - LIMIT_SLACK || f.q[j] > hi[j] + LIMIT_SLACK) {
            out.push(format!(
                "clip `{}` frame {i}: {} = {} outside [{}, {}]",
                clip.name, JOINT_NAMES[j], f.q[j], lo[j], hi[j]
            ));
            break;
        }
    }
    if clip.category == ClipCategory::GaitSample && clip.gait.is_none() {
        out.push(format!("clip `{}`: gait sample without a command tag", clip.name));
    }
    out
}

pub fn validate_clips(model: &RobotModel, clips: &ClipLibrary) -> ValidationReport {
    let mut r = ValidationReport::default();
    for c in clips.iter() {
        r.clips += 1;
        r.problems.extend(check_clip(model, c));
    }
    r
}

pub fn validate_gait(model: &RobotModel, gait: &GaitLibrary) -> ValidationReport {
    let mut r = ValidationReport::default();
    for c in gait.clips() {
        r.gait_samples += 1;
        r.problems.extend(check_clip(model, c));
    }
    r
}

/// Validates a directory of `.clip` files. Gait samples in it must also
/// form a complete gait library.
pub fn validate_dir(model: &RobotModel, dir: &Path) -> ValidationReport {
    let mut r = ValidationReport::default();
    let mut paths: Vec<_> = match std::fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "clip"))
            .collect(),
        Err(e) => {
            r.problems.push(format!("{}: {e}", dir.display()));
            return r;
        }
    };
    paths.sort();
    let mut names = std::collections::BTreeSet::new();
    let mut gait = Vec::new();
    for p in paths {
        match MotionClip::load(&p) {
            Ok(c) => {
                if !names.insert(c.name.clone()) {
                    r.problems.push(format!("{}: duplicate clip name `{}`", p.display(), c.name));
                }
                r.problems.extend(check_clip(model, &c));
                if c.category == ClipCategory::GaitSample {
                    r.gait_samples += 1;
                    gait.push(c);
                } else {
                    r.clips += 1;
                }
            }
            Err(e) => r.problems.push(e.to_string()),
        }
    }
    if !gait.is_empty() {
        if let Err(e) = GaitLibrary::from_clips(model, gait) {
            r.problems.push(format!("gait library: {e}"));
        }
    }
    r
}
