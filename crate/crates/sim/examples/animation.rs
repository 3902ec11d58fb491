//! Plays the idle background and two triggered clips, printing the blend
//! ratios and the head yaw as they evolve.

use std::sync::Arc;

use stagebot_core::animation::authoring::builtin_clips;
use stagebot_core::animation::{AnimationEngine, EngineConfig, EngineMode};
use stagebot_core::math::Euler;
use stagebot_core::robot::RobotModel;

fn main() -> stagebot_core::Result<()> {
    let model = Arc::new(RobotModel::builtin());
    let mut engine = AnimationEngine::new(model.clone(), Arc::new(builtin_clips()), EngineConfig::default())?;
    let dt = 0.02;
    for k in 0..250 {
        match k {
            10 => engine.trigger("yes")?,
            60 => engine.trigger("scan")?,
            150 => engine.cancel(),
            _ => {}
        }
        let out = engine.tick(dt, &EngineMode::Standing);
        if k % 10 == 0 {
            let head = Euler::from_quat(&model.head_pose(&out.y.config).rotation);
            println!(
                "t {:4.2}  clip {:6}  beta {:.2}  alpha {:.2}  head yaw {:+.3}  lamp {:.2}",
                k as f64 * dt,
                out.trigger.as_deref().unwrap_or("-"),
                out.beta,
                out.alpha,
                head.yaw,
                out.y.show.lamp
            );
        }
        for cue in &out.cues {
            println!("  cue {} at {:.2}", cue.id, cue.time);
        }
    }
    Ok(())
}
