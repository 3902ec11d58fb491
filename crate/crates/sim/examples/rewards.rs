//! Reward breakdown for a few perturbed states, with and without the
//! bundled jump emphasis windows.

use std::path::Path;

use stagebot_core::reward::{evaluate, state_at_rest, RewardConfig, RewardInputs};
use stagebot_core::robot::{JointVector, RobotModel};

fn main() -> stagebot_core::Result<()> {
    let model = RobotModel::builtin();
    let target = state_at_rest(&model.nominal_pose());
    let zero = JointVector::zeros();
    let plain = RewardConfig::builtin();
    let jump = RewardConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets/emphasis/jump.toml"))?;

    let mut shifted = target.clone();
    shifted.position.x += 0.05;
    let mut bent = target.clone();
    bent.q[3] += 0.2;
    let mut rising = target.clone();
    rising.linear_velocity.z = 0.3;

    for (name, sim) in [("exact", &target), ("torso +5 cm", &shifted), ("knee +0.2", &bent), ("vz 0.3", &rising)] {
        let inputs = RewardInputs {
            sim,
            target: &target,
            tau: &zero,
            qdd: &zero,
            actions: [&zero; 3],
        };
        let (b, _) = evaluate(&model, &inputs, &plain, 0.5);
        let (bj, _) = evaluate(&model, &inputs, &jump, 0.5);
        println!(
            "{name:12} total {:7.3} (imitation {:6.3}, regularization {:6.3})  jump-weighted {:7.3}",
            b.total, b.imitation, b.regularization, bj.total
        );
    }
    Ok(())
}
