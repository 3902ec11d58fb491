pub mod authoring;
pub mod blend;
pub mod engine;
pub mod joystick;
pub mod mapping;
pub mod show;

pub use blend::{AnimationCommand, BlendClock, T_ALPHA, T_BETA};
pub use engine::{AnimationEngine, Cue, EngineConfig, EngineMode, EngineOutput, PolicyCommand};
pub use joystick::{JoystickInput, JoystickRanges};
pub use mapping::{Button, ButtonMapping, OperatorEvent, PressKind};
pub use show::ShowFunctionState;
