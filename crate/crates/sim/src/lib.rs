//! Desk-scale harness around the stagebot runtime: joint dynamics driven
//! by the actuator models, random pushes, scripted episodes with traces
//! and rewards, an actuator bench, and a live TCP service.

pub mod bench;
pub mod cli;
pub mod disturbance;
pub mod dynamics;
pub mod episode;
pub mod error;
pub mod libs;
pub mod protocol;
pub mod scenario;
pub mod score;
pub mod server;
pub mod trace;
pub mod validate;

pub use episode::{run_episode, run_episode_with, EpisodeResult, EpisodeSummary, RunOptions, Simulation};
pub use error::{SimError, SimResult};
pub use libs::Libraries;
pub use scenario::EpisodeScenario;
