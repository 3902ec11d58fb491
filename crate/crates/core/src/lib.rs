pub mod actuator;
pub mod animation;
pub mod control;
pub mod error;
pub mod math;
pub mod motion;
pub mod reward;
pub mod robot;

pub use error::{Error, Result};
