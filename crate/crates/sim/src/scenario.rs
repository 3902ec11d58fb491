//! Episode scenarios: seed, duration, randomization switches and a timed
//! script of operator input.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stagebot_core::animation::{JoystickInput, OperatorEvent};
use stagebot_core::control::TransitionTarget;
use stagebot_core::motion::{ClipCategory, ClipLibrary};

use crate::error::{SimError, SimResult};

pub const SCENARIO_SCHEMA: &str = "stagebot-scenario/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Randomization {
    /// Per-episode encoder offsets, backlash and armature draws.
    pub actuators: bool,
    /// Encoder noise on measured positions.
    pub noise: bool,
}

impl Default for Randomization {
    fn default() -> Self {
        Self {
            actuators: true,
            noise: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Disturbances {
    pub enabled: bool,
    /// Scale of the body-wrench to joint-torque mapping.
    pub coupling: f64,
}

impl Default for Disturbances {
    fn default() -> Self {
        Self {
            enabled: false,
            coupling: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ScriptAction {
    /// Replaces the whole controller input.
    Joystick { input: JoystickInput },
    /// `to` is one of standing, walking, episodic, motion_stop, home.
    Transition {
        to: String,
        #[serde(default)]
        clip: Option<String>,
    },
    Event { event: OperatorEvent },
}

impl ScriptAction {
    pub fn target(&self) -> SimResult<Option<TransitionTarget>> {
        let ScriptAction::Transition { to, clip } = self else {
            return Ok(None);
        };
        let t = match (to.as_str(), clip) {
            ("standing", None) => TransitionTarget::Standing,
            ("walking", None) => TransitionTarget::Walking,
            ("motion_stop", None) => TransitionTarget::MotionStop,
            ("home", None) => TransitionTarget::Home,
            ("episodic", Some(c)) => TransitionTarget::Episodic { clip: c.clone() },
            ("episodic", None) => return Err(SimError::Scenario("episodic transition needs a clip".into())),
            (other, _) => return Err(SimError::Scenario(format!("unknown transition target `{other}`"))),
        };
        Ok(Some(t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub t: f64,
    #[serde(flatten)]
    pub action: ScriptAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeScenario {
    pub schema: String,
    pub seed: u64,
    pub duration: f64,
    #[serde(default)]
    pub randomization: Randomization,
    #[serde(default)]
    pub disturbances: Disturbances,
    #[serde(default)]
    pub script: Vec<ScriptEntry>,
}

impl EpisodeScenario {
    /// Standing still with default randomization and no script.
    pub fn standing(seed: u64, duration: f64) -> Self {
        Self {
            schema: SCENARIO_SCHEMA.into(),
            seed,
            duration,
            randomization: Randomization::default(),
            disturbances: Disturbances::default(),
            script: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> SimResult<Self> {
        let s: Self = toml::from_str(text).map_err(|source| stagebot_core::Error::Toml {
            what: "scenario".into(),
            source,
        })?;
        if s.schema != SCENARIO_SCHEMA {
            return Err(SimError::Scenario(format!("schema `{}`, expected `{SCENARIO_SCHEMA}`", s.schema)));
        }
        Ok(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Checks times, targets and clip names against `clips`.
    pub fn validate(&self, clips: &ClipLibrary) -> SimResult<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(SimError::Scenario(format!("duration must be positive, got {}", self.duration)));
        }
        if !(self.disturbances.coupling.is_finite() && self.disturbances.coupling >= 0.0) {
            return Err(SimError::Scenario("disturbance coupling must be non-negative".into()));
        }
        let mut last = 0.0;
        for (i, e) in self.script.iter().enumerate() {
            if !(0.0..=self.duration).contains(&e.t) {
                return Err(SimError::Scenario(format!("script entry {i} at t={} is outside [0, {}]", e.t, self.duration)));
            }
            if e.t < last {
                return Err(SimError::Scenario(format!("script entry {i} is out of time order")));
            }
            last = e.t;
            let need = |name: &str, cat: ClipCategory| clips.require(name, cat).map(|_| ()).map_err(SimError::from);
            match &e.action {
                ScriptAction::Transition { .. } => {
                    if let Some(TransitionTarget::Episodic { clip }) = e.action.target()? {
                        need(&clip, ClipCategory::Episodic)?;
                    }
                }
                ScriptAction::Event { event } => match event {
                    OperatorEvent::Trigger { name } => need(name, ClipCategory::Triggered)?,
                    OperatorEvent::Episodic { name } => need(name, ClipCategory::Episodic)?,
                    _ => {}
                },
                ScriptAction::Joystick { .. } => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use stagebot_core::animation::authoring::builtin_clips;

    const TEXT: &str = r#"
schema = "stagebot-scenario/1"
seed = 11
duration = 6.0

[randomization]
noise = false

[[script]]
t = 0.5
action = "joystick"
input = { left = [0.0, 1.0], r1_held = true }

[[script]]
t = 0.5
action = "transition"
to = "walking"

[[script]]
t = 2.0
action = "event"
event = { event = "trigger", name = "happy" }

[[script]]
t = 3.0
action = "transition"
to = "episodic"
clip = "bow"
"#;

    #[test]
    fn parses_and_validates() {
        let s = EpisodeScenario::from_toml_str(TEXT).unwrap();
        assert_eq!(s.script.len(), 4);
        assert!(!s.randomization.noise && s.randomization.actuators);
        assert_eq!(s.script[0].action, ScriptAction::Joystick {
            input: JoystickInput { left: [0.0, 1.0], r1_held: true, ..Default::default() }
        });
        assert_eq!(s.script[3].action.target().unwrap(), Some(TransitionTarget::Episodic { clip: "bow".into() }));
        s.validate(&builtin_clips()).unwrap();
    }

    #[test]
    fn round_trips_through_toml() {
        let s = EpisodeScenario::from_toml_str(TEXT).unwrap();
        assert_eq!(EpisodeScenario::from_toml_str(&s.to_toml_string()).unwrap(), s);
    }

    #[test]
    fn missing_clip_fails_before_start() {
        let text = TEXT.replace("clip = \"bow\"", "clip = \"moonwalk\"");
        let s = EpisodeScenario::from_toml_str(&text).unwrap();
        let err = s.validate(&builtin_clips()).unwrap_err();
        assert!(err.to_string().contains("moonwalk"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn script_past_the_end_is_rejected() {
        let text = TEXT.replace("t = 3.0", "t = 9.0");
        let s = EpisodeScenario::from_toml_str(&text).unwrap();
        assert!(s.validate(&builtin_clips()).is_err());
    }

    #[test]
    fn unknown_target_is_rejected() {
        let text = TEXT.replace("to = \"walking\"", "to = \"flying\"");
        let s = EpisodeScenario::from_toml_str(&text).unwrap();
        assert!(s.validate(&builtin_clips()).is_err());
    }
}
