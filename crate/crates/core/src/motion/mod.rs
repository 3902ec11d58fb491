//! Path frame, phase signal and the three reference generators.

pub mod clip;
pub mod gait;
pub mod generators;
pub mod path_frame;
pub mod phase;

use serde::{Deserialize, Serialize};

pub use clip::{ClipCategory, ClipFrame, ClipLibrary, FootPose, MotionClip};
pub use gait::{GaitLibrary, GaitParams};
pub use generators::{
    episodic_path_frame,
    gen_episodic, gen_periodic, gen_perpetual, CommandRanges, GeneratedReference, PerpetualCommand,
    PeriodicCommand, Stance,
};
pub use path_frame::{
    project_path_frame, update_path_frame_standing, update_path_frame_walking, PathFrame, PathFrameParams,
};
pub use phase::{advance_phase, PhaseMode, PhaseSignal};

/// Walking command box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityLimits {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl Default for VelocityLimits {
    fn default() -> Self {
        Self {
            vx: 0.7,
            vy: 0.4,
            omega: 1.8,
        }
    }
}
