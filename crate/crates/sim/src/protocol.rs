//! Wire protocol of the live service.
//!
//! Each message is a frame: a big-endian `u32` byte length followed by
//! that many bytes of UTF-8 JSON. Every JSON object carries the protocol
//! version `"v"` and a `"type"` tag.
//!
//! Client to server:
//!
//! ```text
//! {"v":1,"type":"hello","role":"operator"}            role: operator | observer
//! {"v":1,"type":"joystick","input":{"left":[0,1],"r1_held":true}}
//! {"v":1,"type":"event","event":{"event":"trigger","name":"happy"}}
//! {"v":1,"type":"transition","target":"episodic","clip":"bow"}
//! {"v":1,"type":"motion_stop"}
//! {"v":1,"type":"bye"}
//! ```
//!
//! Server to client: `welcome`, `telemetry`, `ack` and `error`. An
//! `error` never closes the session.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use stagebot_core::animation::{JoystickInput, OperatorEvent, PolicyCommand, ShowFunctionState};
use stagebot_core::control::TransitionTarget;
use stagebot_core::motion::PathFrame;

pub const PROTOCOL_VERSION: u32 = 1;
/// Frames above this size are rejected without reading the payload.
pub const MAX_FRAME: u32 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Operator,
    Observer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello {
        role: Role,
    },
    Joystick {
        input: JoystickInput,
    },
    Event {
        event: OperatorEvent,
    },
    Transition {
        #[serde(flatten)]
        target: TransitionTarget,
    },
    MotionStop,
    Bye,
}

impl ClientMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            ClientMessage::Hello { .. } => "hello",
            ClientMessage::Joystick { .. } => "joystick",
            ClientMessage::Event { .. } => "event",
            ClientMessage::Transition { .. } => "transition",
            ClientMessage::MotionStop => "motion_stop",
            ClientMessage::Bye => "bye",
        }
    }

    /// Motion stops jump the queue; this includes the operator event form.
    pub fn is_motion_stop(&self) -> bool {
        matches!(
            self,
            ClientMessage::MotionStop
                | ClientMessage::Event {
                    event: OperatorEvent::MotionStop
                }
                | ClientMessage::Transition {
                    target: TransitionTarget::MotionStop
                }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub t: f64,
    pub mode: String,
    pub phi: f64,
    pub stop_pending: bool,
    pub command: PolicyCommand,
    pub show: ShowFunctionState,
    pub path: PathFrame,
    /// Per link: position xyz then quaternion wxyz, in the order given in
    /// the welcome message.
    pub links: Vec<[f64; 7]>,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub tau: Vec<f64>,
    pub setpoint: Vec<f64>,
    /// Total reward of the latest decision.
    pub reward: Option<f64>,
    pub deadline_misses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Welcome {
        session: u64,
        role: Role,
        telemetry_rate: f64,
        links: Vec<String>,
        joints: Vec<String>,
    },
    Telemetry {
        frame: TelemetryFrame,
    },
    Ack {
        of: String,
        outcome: String,
    },
    Error {
        message: String,
    },
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    v: u32,
    #[serde(flatten)]
    body: T,
}

pub fn encode<T: Serialize>(msg: &T) -> Vec<u8> {
    serde_json::to_vec(&Envelope {
        v: PROTOCOL_VERSION,
        body: msg,
    })
    .expect("protocol messages serialize")
}

fn decode<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<T, String> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| format!("malformed JSON: {e}"))?;
    match value.get("v").and_then(|v| v.as_u64()) {
        Some(v) if v == PROTOCOL_VERSION as u64 => {}
        Some(v) => return Err(format!("unsupported protocol version {v}, this server speaks {PROTOCOL_VERSION}")),
        None => return Err("missing protocol version `v`".into()),
    }
    serde_json::from_value::<Envelope<T>>(value)
        .map(|e| e.body)
        .map_err(|e| format!("bad message: {e}"))
}

pub fn decode_client(bytes: &[u8]) -> Result<ClientMessage, String> {
    decode(bytes)
}

pub fn decode_server(bytes: &[u8]) -> Result<ServerMessage, String> {
    decode(bytes)
}

pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> std::io::Result<()> {
    let len = u32::try_from(payload.len())
        .ok()
        .filter(|l| *l <= MAX_FRAME)
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Next frame, or `None` on a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> std::io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len);
    if len > MAX_FRAME {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("frame of {len} bytes")));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}
