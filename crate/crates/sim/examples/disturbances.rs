//! Samples a minute of disturbances and shows the joint torques of the
//! first few pushes on the nominal pose.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stagebot_core::robot::{RobotModel, JOINT_NAMES};
use stagebot_sim::disturbance::{DisturbanceConfig, DisturbanceSampler, WrenchMapping};
use stagebot_sim::SimResult;

fn main() -> SimResult<()> {
    let model = RobotModel::builtin();
    let mut sampler = DisturbanceSampler::new(DisturbanceConfig::builtin(), &model, ChaCha8Rng::seed_from_u64(1))?;
    let mapping = WrenchMapping::new(&model, 1.0);
    let pose = model.nominal_pose();
    let poses = model.fk(&pose.base_pose(), &pose.q);

    let mut shown = 0;
    let mut t = 0.0;
    while t < 60.0 {
        let before = sampler.events().len();
        sampler.advance(t);
        for e in &sampler.events()[before..] {
            if shown < 4 {
                println!(
                    "{:6.2}s {:11} on {:14} for {:.2}s  force {:+.1?}",
                    e.start, e.category, e.body, e.duration, e.wrench.force.as_slice()
                );
                let tau = mapping.joint_torques(&model, &poses, &sampler.active(), [true, true]);
                for (name, v) in JOINT_NAMES.iter().zip(tau.iter()).filter(|(_, v)| v.abs() > 1e-3) {
                    println!("        {name:5} {v:+.3} N m");
                }
                shown += 1;
            }
        }
        t += 1.0 / 600.0;
    }
    let mut counts = std::collections::BTreeMap::new();
    for e in sampler.events() {
        *counts.entry(e.category.as_str()).or_insert(0) += 1;
    }
    println!("events in 60 s: {counts:?}");
    Ok(())
}
