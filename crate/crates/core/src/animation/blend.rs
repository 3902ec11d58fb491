use serde::{Deserialize, Serialize};

use super::show::ShowFunctionState;
use crate::math::slerp;
use crate::robot::RobotConfig;

pub const T_BETA: f64 = 0.1;
pub const T_ALPHA: f64 = 0.35;

/// Show-function command plus robot configuration in path coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimationCommand {
    pub show: ShowFunctionState,
    pub config: RobotConfig,
}

/// Playback clock of a triggered clip with its two blend ramps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendClock {
    pub t: f64,
    pub duration: f64,
    pub t_beta: f64,
    pub t_alpha: f64,
    /// Playback time and ratios at which a cancel was requested.
    pub cancel: Option<(f64, f64, f64)>,
}

fn ramp(t: f64, duration: f64, width: f64) -> f64 {
    (t / width).min(1.0).min((duration - t) / width).clamp(0.0, 1.0)
}

impl BlendClock {
    pub fn new(duration: f64) -> Self {
        Self {
            t: 0.0,
            duration,
            t_beta: T_BETA,
            t_alpha: T_ALPHA,
            cancel: None,
        }
    }

    pub fn at(mut self, t: f64) -> Self {
        self.t = t.clamp(0.0, self.duration);
        self
    }

    /// Starts a forced ramp-out from the current ratios.
    pub fn cancel(&mut self) {
        if self.cancel.is_none() {
            let (b, a) = blend_ratios(self);
            self.cancel = Some((self.t, b, a));
        }
    }

    pub fn finished(&self) -> bool {
        let (b, a) = blend_ratios(self);
        self.t >= self.duration || (self.cancel.is_some() && b == 0.0 && a == 0.0)
    }
}

/// `(beta, alpha)`: linear ramps in over `T_beta`/`T_alpha` after the start
/// and out over the same widths before the end (or after a cancel).
pub fn blend_ratios(clock: &BlendClock) -> (f64, f64) {
    let mut b = ramp(clock.t, clock.duration, clock.t_beta);
    let mut a = ramp(clock.t, clock.duration, clock.t_alpha);
    if let Some((tc, bc, ac)) = clock.cancel {
        let dt = (clock.t - tc).max(0.0);
        b = b.min(bc - dt / clock.t_beta).max(0.0);
        a = a.min(ac - dt / clock.t_alpha).max(0.0);
    }
    (b, a)
}

/// Show functions blend with `beta`, the configuration with `alpha`
/// (linear for positions and joints, slerp for the torso orientation).
pub fn blend(bg: &AnimationCommand, trig: &AnimationCommand, beta: f64, alpha: f64) -> AnimationCommand {
    AnimationCommand {
        show: bg.show.blend(&trig.show, beta),
        config: blend_config(&bg.config, &trig.config, alpha),
    }
}

pub fn blend_config(a: &RobotConfig, b: &RobotConfig, w: f64) -> RobotConfig {
    if w <= 0.0 {
        return a.clone();
    }
    RobotConfig {
        position: a.position.lerp(&b.position, w),
        orientation: slerp(&a.orientation, &b.orientation, w),
        q: a.q + (b.q - a.q) * w,
    }
}
