//! Records an episode, reads the 50 Hz trace back and scores it again
//! under the excited emphasis windows.

use std::path::Path;

use stagebot_core::reward::RewardConfig;
use stagebot_sim::episode::SLOW_TRACE_FILE;
use stagebot_sim::score::score_trace;
use stagebot_sim::trace::read_slow_csv;
use stagebot_sim::{run_episode, EpisodeScenario, Libraries, SimResult};

fn main() -> SimResult<()> {
    let libs = Libraries::builtin();
    let dir = std::env::temp_dir().join("stagebot-rescore");
    let scenario = EpisodeScenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/scenarios/show.toml"))?;
    run_episode(&libs, &scenario)?.write_dir(&dir)?;
    let path = dir.join(SLOW_TRACE_FILE);
    let rows = read_slow_csv(std::fs::File::open(&path).map_err(|e| stagebot_sim::SimError::io(&path, e))?)?;

    let same = score_trace(&libs.model, &libs.rewards, &rows);
    println!("recorded weights: mean {:.4}, max deviation {:.1e}", same.total_mean, same.max_deviation);
    let excited = RewardConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets/emphasis/excited.toml"))?;
    let other = score_trace(&libs.model, &excited, &rows);
    println!("excited weights:  mean {:.4}", other.total_mean);
    for (term, mean) in other.means.iter().filter(|(_, m)| m.abs() > 1e-6) {
        println!("  {:24} {mean:+.4}", term.name());
    }
    Ok(())
}
