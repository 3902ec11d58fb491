//! Runs the bundled show scenario and writes its traces.
//!
//! cargo run -p stagebot-sim --example episode -- [out_dir]

use std::path::PathBuf;

use stagebot_sim::{run_episode, EpisodeScenario, Libraries, SimResult};

fn main() -> SimResult<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("stagebot-episode"), PathBuf::from);
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/scenarios/show.toml");
    let scenario = EpisodeScenario::load(&path)?;
    let result = run_episode(&Libraries::builtin(), &scenario)?;
    for s in &result.summary.script {
        println!("{:6.2}s  {:?} -> {}", s.t, s.action, s.outcome);
    }
    let mut last_mode = String::new();
    for row in &result.slow {
        if row.mode != last_mode {
            println!("{:6.2}s  mode {}", row.t, row.mode);
            last_mode = row.mode.clone();
        }
    }
    println!("mae {:.4} rad, mean reward {:.3}", result.summary.mae, result.summary.reward_total_mean);
    result.write_dir(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
