//! Replays a bench profile and prints a coarse view of the response.
//!
//! cargo run -p stagebot-sim --example bench -- [profile.toml]

use std::path::PathBuf;

use stagebot_core::actuator::ActuatorTable;
use stagebot_sim::bench::{actuator_bench, BenchProfile};
use stagebot_sim::SimResult;

fn main() -> SimResult<()> {
    let path = std::env::args().nth(1).map_or_else(
        || PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/bench/go1_step.toml"),
        PathBuf::from,
    );
    let profile = BenchProfile::load(&path)?;
    let rows = actuator_bench(&profile, &ActuatorTable::builtin())?;
    println!("{} on a {:?} load, {} ticks", profile.actuator.name(), profile.load, rows.len());
    for r in rows.iter().step_by(60) {
        println!(
            "t {:5.2}  setpoint {:+.3}  q {:+.4}  qd {:+7.3}  tau {:+7.3}",
            r.t, r.setpoint, r.q, r.qd, r.tau
        );
    }
    Ok(())
}
