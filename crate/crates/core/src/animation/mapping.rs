//! Button bindings: which operator event each button press produces.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAPPING_SCHEMA: &str = "stagebot-mapping/1";
pub const DEFAULT_MAPPING: &str = include_str!("../../assets/mapping.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Button {
    Menu,
    View,
    A,
    B,
    X,
    Y,
    L1,
    R1,
    L3,
    R3,
    L4,
    L5,
    R4,
    R5,
    /// Trackpad quadrants 0..4.
    LeftPad(u8),
    RightPad(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressKind {
    Short,
    Long,
}

/// Discrete operator intents, after button mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum OperatorEvent {
    MotionStop,
    /// Slowly return to the default pose (motion stop only).
    Home,
    Stand,
    ToggleWalk,
    ToggleTuck,
    Cancel,
    ToggleBackground,
    ToggleLamp,
    ToggleAudio,
    Trigger { name: String },
    Episodic { name: String },
    AudioCue { name: String },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingFile {
    schema: String,
    #[serde(default)]
    short: BTreeMap<String, String>,
    #[serde(default)]
    long: BTreeMap<String, String>,
    #[serde(default)]
    press: BTreeMap<String, String>,
    #[serde(default)]
    left_pad: Vec<String>,
    #[serde(default)]
    right_pad: Vec<String>,
    #[serde(default)]
    audio: BTreeMap<String, String>,
}

/// Clip names bound to the animation buttons and trackpads.
#[derive(Debug, Clone, PartialEq)]
pub struct ButtonMapping {
    short: BTreeMap<Button, String>,
    long: BTreeMap<Button, String>,
    press: BTreeMap<Button, String>,
    audio: BTreeMap<Button, String>,
    left_pad: Vec<String>,
    right_pad: Vec<String>,
}

fn button_name(s: &str) -> Option<Button> {
    Some(match s {
        "L3" => Button::L3,
        "L4" => Button::L4,
        "L5" => Button::L5,
        "R3" => Button::R3,
        "R4" => Button::R4,
        "R5" => Button::R5,
        _ => return None,
    })
}

impl ButtonMapping {
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_MAPPING).expect("bundled mapping parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let f: MappingFile = toml::from_str(text).map_err(|source| Error::Toml {
            what: "button mapping".into(),
            source,
        })?;
        if f.schema != MAPPING_SCHEMA {
            return Err(Error::config(format!("mapping schema `{}`, expected `{MAPPING_SCHEMA}`", f.schema)));
        }
        let convert = |m: BTreeMap<String, String>| -> Result<BTreeMap<Button, String>> {
            m.into_iter()
                .map(|(k, v)| {
                    button_name(&k)
                        .map(|b| (b, v))
                        .ok_or_else(|| Error::config(format!("button `{k}` cannot carry an animation binding")))
                })
                .collect()
        };
        if f.left_pad.len() > 4 || f.right_pad.len() > 4 {
            return Err(Error::config("a trackpad has at most four quadrants"));
        }
        Ok(Self {
            short: convert(f.short)?,
            long: convert(f.long)?,
            press: convert(f.press)?,
            audio: convert(f.audio)?,
            left_pad: f.left_pad,
            right_pad: f.right_pad,
        })
    }

    /// Every clip name the mapping refers to, as (name, episodic?).
    pub fn clip_names(&self) -> Vec<(&str, bool)> {
        let triggered = self.short.values().chain(self.long.values()).chain(self.press.values());
        let mut v: Vec<(&str, bool)> = triggered.map(|s| (s.as_str(), false)).collect();
        v.extend(self.left_pad.iter().chain(&self.right_pad).map(|s| (s.as_str(), true)));
        v
    }

    pub fn resolve(&self, button: Button, kind: PressKind) -> Option<OperatorEvent> {
        let trigger = |name: &String| OperatorEvent::Trigger { name: name.clone() };
        Some(match button {
            Button::Menu => OperatorEvent::MotionStop,
            Button::View => OperatorEvent::Home,
            Button::A => OperatorEvent::Stand,
            Button::B => OperatorEvent::ToggleTuck,
            Button::X => OperatorEvent::Cancel,
            Button::Y => OperatorEvent::ToggleBackground,
            Button::L1 => OperatorEvent::ToggleLamp,
            Button::R1 => OperatorEvent::ToggleWalk,
            Button::R3 => OperatorEvent::ToggleAudio,
            Button::LeftPad(i) => OperatorEvent::Episodic {
                name: self.left_pad.get(i as usize)?.clone(),
            },
            Button::RightPad(i) => OperatorEvent::Episodic {
                name: self.right_pad.get(i as usize)?.clone(),
            },
            b => {
                if let Some(name) = self.audio.get(&b) {
                    return Some(OperatorEvent::AudioCue { name: name.clone() });
                }
                if let Some(name) = self.press.get(&b) {
                    return Some(trigger(name));
                }
                let table = match kind {
                    PressKind::Short => &self.short,
                    PressKind::Long => &self.long,
                };
                trigger(table.get(&b)?)
            }
        })
    }
}
