//! Live service: a runtime thread owns the simulation and talks to client
//! sessions only through queues.
//!
//! Command precedence: the first session to say hello as operator holds
//! the operator role until it leaves. Other sessions observe; their
//! commands are refused, except motion stops which any session may send.
//! Queued motion stops are handled before any other queued input.

use std::collections::{BTreeMap, VecDeque};
use std::io::BufWriter;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use stagebot_core::actuator::ACTUATION_DT;
use stagebot_core::animation::{PolicyCommand, ShowFunctionState};
use stagebot_core::control::TransitionTarget;
use stagebot_core::robot::JOINT_NAMES;

use crate::episode::{mode_label, Simulation};
use crate::error::{SimError, SimResult};
use crate::protocol::{decode_client, encode, read_frame, write_frame, ClientMessage, Role, ServerMessage, TelemetryFrame};

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub bind: String,
    /// Telemetry frames per second.
    pub telemetry_rate: f64,
    /// Pace the loop to the wall clock.
    pub realtime: bool,
    /// Stop after this much simulated time.
    pub max_duration: Option<f64>,
    /// Per-session telemetry backlog; the oldest frame is dropped first.
    pub queue_len: usize,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:7600".into(),
            telemetry_rate: 30.0,
            realtime: true,
            max_duration: None,
            queue_len: 64,
        }
    }
}

/// Actuation ticks between telemetry frames.
pub fn decimation(rate: f64) -> u64 {
    ((1.0 / ACTUATION_DT) / rate).round().max(1.0) as u64
}

/// Bounded outgoing queue. Telemetry is dropped oldest-first when full;
/// replies are never dropped.
struct Outbox {
    queue: Mutex<(VecDeque<ServerMessage>, bool)>,
    ready: Condvar,
    cap: usize,
}

impl Outbox {
    fn new(cap: usize) -> Self {
        Self {
            queue: Mutex::new((VecDeque::new(), false)),
            ready: Condvar::new(),
            cap,
        }
    }

    fn push(&self, msg: ServerMessage) {
        let mut g = self.queue.lock().expect("outbox lock");
        if matches!(msg, ServerMessage::Telemetry { .. }) && g.0.len() >= self.cap {
            if let Some(i) = g.0.iter().position(|m| matches!(m, ServerMessage::Telemetry { .. })) {
                g.0.remove(i);
            }
        }
        g.0.push_back(msg);
        self.ready.notify_one();
    }

    fn close(&self) {
        self.queue.lock().expect("outbox lock").1 = true;
        self.ready.notify_all();
    }

    /// Blocks for the next message; `None` once closed and drained.
    fn pop(&self) -> Option<ServerMessage> {
        let mut g = self.queue.lock().expect("outbox lock");
        loop {
            if let Some(m) = g.0.pop_front() {
                return Some(m);
            }
            if g.1 {
                return None;
            }
            g = self.ready.wait(g).expect("outbox lock");
        }
    }
}

#[derive(Debug)]
pub enum Inbound {
    Connected { session: u64 },
    Message { session: u64, msg: ClientMessage },
    Malformed { session: u64, error: String },
    Closed { session: u64 },
}

impl Inbound {
    fn is_motion_stop(&self) -> bool {
        matches!(self, Inbound::Message { msg, .. } if msg.is_motion_stop())
    }
}

/// Stable reorder: motion stops first, everything else in arrival order.
pub fn prioritize(batch: Vec<Inbound>) -> Vec<Inbound> {
    let (mut stops, rest): (Vec<_>, Vec<_>) = batch.into_iter().partition(Inbound::is_motion_stop);
    stops.extend(rest);
    stops
}

struct Session {
    outbox: Arc<Outbox>,
    role: Option<Role>,
    stream: TcpStream,
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    runtime: Option<JoinHandle<SimResult<RuntimeStats>>>,
    acceptor: Option<JoinHandle<()>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RuntimeStats {
    pub ticks: u64,
    pub deadline_misses: u64,
    pub sessions: u64,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Asks the runtime to stop and waits for it.
    pub fn shutdown(mut self) -> SimResult<RuntimeStats> {
        self.stop.store(true, Ordering::SeqCst);
        self.join_inner()
    }

    /// Waits until the runtime stops by itself.
    pub fn join(mut self) -> SimResult<RuntimeStats> {
        self.join_inner()
    }

    fn join_inner(&mut self) -> SimResult<RuntimeStats> {
        let stats = match self.runtime.take().map(|h| h.join()) {
            Some(Ok(r)) => r,
            Some(Err(_)) => Err(SimError::Protocol("runtime thread panicked".into())),
            None => Ok(RuntimeStats::default()),
        };
        self.stop.store(true, Ordering::SeqCst);
        // Unblock the acceptor.
        let _ = TcpStream::connect(self.addr);
        if let Some(a) = self.acceptor.take() {
            let _ = a.join();
        }
        stats
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.runtime.is_some() {
            self.stop.store(true, Ordering::SeqCst);
            let _ = self.join_inner();
        }
    }
}

pub fn serve(sim: Simulation, config: ServeConfig) -> SimResult<ServerHandle> {
    let listener = TcpListener::bind(&config.bind).map_err(|e| SimError::io(&config.bind, e))?;
    let addr = listener.local_addr().map_err(|e| SimError::io(&config.bind, e))?;
    let stop = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel::<Inbound>();
    let sessions: Arc<Mutex<BTreeMap<u64, Session>>> = Arc::default();

    let acceptor = {
        let (stop, sessions, tx, cap) = (stop.clone(), sessions.clone(), tx.clone(), config.queue_len);
        std::thread::spawn(move || accept_loop(listener, stop, sessions, tx, cap))
    };
    let runtime = {
        let (stop, sessions) = (stop.clone(), sessions.clone());
        std::thread::spawn(move || {
            let r = Runtime::new(sim, config, sessions.clone()).run(rx, &stop);
            stop.store(true, Ordering::SeqCst);
            for s in sessions.lock().expect("sessions").values() {
                s.outbox.close();
                let _ = s.stream.shutdown(Shutdown::Both);
            }
            r
        })
    };
    drop(tx);
    Ok(ServerHandle {
        addr,
        stop,
        runtime: Some(runtime),
        acceptor: Some(acceptor),
    })
}

fn accept_loop(
    listener: TcpListener,
    stop: Arc<AtomicBool>,
    sessions: Arc<Mutex<BTreeMap<u64, Session>>>,
    tx: Sender<Inbound>,
    cap: usize,
) {
    let ids = AtomicU64::new(1);
    for stream in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = stream else { continue };
        let _ = stream.set_nodelay(true);
        let session = ids.fetch_add(1, Ordering::SeqCst);
        let outbox = Arc::new(Outbox::new(cap));
        let (Ok(reader), Ok(writer), Ok(own)) = (stream.try_clone(), stream.try_clone(), stream.try_clone()) else {
            continue;
        };
        sessions.lock().expect("sessions").insert(
            session,
            Session {
                outbox: outbox.clone(),
                role: None,
                stream: own,
            },
        );
        if tx.send(Inbound::Connected { session }).is_err() {
            break;
        }
        std::thread::spawn(move || {
            let mut w = BufWriter::new(writer);
            while let Some(m) = outbox.pop() {
                if write_frame(&mut w, &encode(&m)).is_err() {
                    break;
                }
            }
        });
        let tx = tx.clone();
        std::thread::spawn(move || {
            let mut r = reader;
            while let Ok(Some(bytes)) = read_frame(&mut r) {
                let item = match decode_client(&bytes) {
                    Ok(msg) => Inbound::Message { session, msg },
                    Err(error) => Inbound::Malformed { session, error },
                };
                if tx.send(item).is_err() {
                    break;
                }
            }
            let _ = tx.send(Inbound::Closed { session });
        });
    }
}

struct Runtime {
    sim: Simulation,
    config: ServeConfig,
    sessions: Arc<Mutex<BTreeMap<u64, Session>>>,
    operator: Option<u64>,
    stats: RuntimeStats,
    last_reward: Option<f64>,
    last_show: ShowFunctionState,
    last_command: PolicyCommand,
    last_setpoint: Vec<f64>,
}

impl Runtime {
    fn new(sim: Simulation, config: ServeConfig, sessions: Arc<Mutex<BTreeMap<u64, Session>>>) -> Self {
        Self {
            sim,
            config,
            sessions,
            operator: None,
            stats: RuntimeStats::default(),
            last_reward: None,
            last_show: ShowFunctionState::default(),
            last_command: PolicyCommand::None,
            last_setpoint: vec![0.0; JOINT_NAMES.len()],
        }
    }

    fn send(&self, session: u64, msg: ServerMessage) {
        if let Some(s) = self.sessions.lock().expect("sessions").get(&session) {
            s.outbox.push(msg);
        }
    }

    fn error(&self, session: u64, message: impl Into<String>) {
        self.send(session, ServerMessage::Error { message: message.into() });
    }

    fn run(mut self, rx: Receiver<Inbound>, stop: &AtomicBool) -> SimResult<RuntimeStats> {
        let every = decimation(self.config.telemetry_rate);
        let start = Instant::now();
        let limit = self.config.max_duration.map(|d| (d / ACTUATION_DT).round() as u64);
        while !stop.load(Ordering::SeqCst) && limit.is_none_or(|l| self.sim.ticks() < l) {
            let mut batch = Vec::new();
            loop {
                match rx.try_recv() {
                    Ok(m) => batch.push(m),
                    Err(TryRecvError::Empty) => break,
                    Err(TryRecvError::Disconnected) => break,
                }
            }
            for item in prioritize(batch) {
                self.handle(item);
            }
            let tick = self.sim.ticks();
            let out = self.sim.step()?;
            if let Some(rec) = &out.decision {
                self.last_reward = Some(rec.sample.total);
                self.last_show = rec.decision.show;
                self.last_command = rec.decision.command;
            }
            self.last_setpoint = out.fast.setpoint.iter().copied().collect();
            if tick.is_multiple_of(every) {
                let frame = self.telemetry(out.fast.t);
                for s in self.sessions.lock().expect("sessions").values() {
                    if s.role.is_some() {
                        s.outbox.push(ServerMessage::Telemetry { frame: frame.clone() });
                    }
                }
            }
            self.stats.ticks += 1;
            if self.config.realtime {
                let due = Duration::from_secs_f64(self.sim.ticks() as f64 * ACTUATION_DT);
                let now = start.elapsed();
                if now > due + Duration::from_secs_f64(ACTUATION_DT) {
                    self.stats.deadline_misses += 1;
                } else if due > now {
                    std::thread::sleep(due - now);
                }
            }
        }
        Ok(self.stats)
    }

    fn telemetry(&self, t: f64) -> TelemetryFrame {
        let c = self.sim.controller();
        let dyn_ = self.sim.dynamics();
        let model = &self.sim.libraries().model;
        let poses = model.fk(&self.sim.base().base_pose(), &dyn_.q);
        TelemetryFrame {
            t,
            mode: mode_label(c.mode()),
            phi: c.phase().phi,
            stop_pending: c.stop_pending(),
            command: self.last_command,
            show: self.last_show,
            path: c.path_frame(),
            links: poses
                .poses
                .iter()
                .map(|p| {
                    let (x, r) = (p.translation.vector, p.rotation.quaternion());
                    [x.x, x.y, x.z, r.w, r.i, r.j, r.k]
                })
                .collect(),
            q: dyn_.q.iter().copied().collect(),
            qd: dyn_.qd.iter().copied().collect(),
            tau: self.sim.last_torque().iter().copied().collect(),
            setpoint: self.last_setpoint.clone(),
            reward: self.last_reward,
            deadline_misses: self.stats.deadline_misses,
        }
    }

    fn handle(&mut self, item: Inbound) {
        match item {
            Inbound::Connected { .. } => self.stats.sessions += 1,
            Inbound::Closed { session } => {
                if self.operator == Some(session) {
                    self.operator = None;
                }
                if let Some(s) = self.sessions.lock().expect("sessions").remove(&session) {
                    s.outbox.close();
                }
            }
            Inbound::Malformed { session, error } => self.error(session, error),
            Inbound::Message { session, msg } => self.message(session, msg),
        }
    }

    fn message(&mut self, session: u64, msg: ClientMessage) {
        let role = self.sessions.lock().expect("sessions").get(&session).and_then(|s| s.role);
        let kind = msg.kind();
        match msg {
            ClientMessage::Hello { role: wanted } => {
                if role.is_some() {
                    return self.error(session, "already greeted");
                }
                let granted = if wanted == Role::Operator && self.operator.is_none() {
                    self.operator = Some(session);
                    Role::Operator
                } else {
                    Role::Observer
                };
                if let Some(s) = self.sessions.lock().expect("sessions").get_mut(&session) {
                    s.role = Some(granted);
                }
                let model = &self.sim.libraries().model;
                self.send(
                    session,
                    ServerMessage::Welcome {
                        session,
                        role: granted,
                        telemetry_rate: self.config.telemetry_rate,
                        links: model.layout.links.iter().map(|l| l.name.clone()).collect(),
                        joints: JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
                    },
                );
            }
            ClientMessage::Bye => {
                if let Some(s) = self.sessions.lock().expect("sessions").get(&session) {
                    let _ = s.stream.shutdown(Shutdown::Read);
                }
            }
            _ if role.is_none() => self.error(session, "say hello first"),
            msg if msg.is_motion_stop() => {
                let r = self.sim.request(TransitionTarget::MotionStop);
                self.reply(session, kind, r);
            }
            _ if role != Some(Role::Operator) => self.error(session, "observer sessions cannot send commands"),
            ClientMessage::Joystick { input } => {
                self.sim.controller_mut().engine_mut().set_input(input);
            }
            ClientMessage::Event { event } => {
                let r = self.sim.handle(&event);
                self.reply(session, kind, r);
            }
            ClientMessage::Transition { target } => {
                let r = self.sim.request(target);
                self.reply(session, kind, r);
            }
            ClientMessage::MotionStop => unreachable!("handled above"),
        }
    }

    fn reply(&self, session: u64, of: &str, r: SimResult<stagebot_core::control::TransitionOutcome>) {
        match r {
            Ok(o) => self.send(
                session,
                ServerMessage::Ack {
                    of: of.into(),
                    outcome: format!("{o:?}").to_lowercase(),
                },
            ),
            Err(e) => self.error(session, e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use stagebot_core::animation::OperatorEvent;

    fn msg(session: u64, msg: ClientMessage) -> Inbound {
        Inbound::Message { session, msg }
    }

    #[test]
    fn thirty_hertz_is_every_twentieth_tick() {
        assert_eq!(decimation(30.0), 20);
        assert_eq!(decimation(600.0), 1);
        assert_eq!(decimation(1e6), 1);
    }

    #[test]
    fn motion_stop_jumps_the_queue() {
        let batch = vec![
            msg(1, ClientMessage::Transition { target: TransitionTarget::Walking }),
            Inbound::Closed { session: 3 },
            msg(2, ClientMessage::Event { event: OperatorEvent::MotionStop }),
            msg(1, ClientMessage::Bye),
            msg(2, ClientMessage::MotionStop),
        ];
        let out = prioritize(batch);
        assert!(out[0].is_motion_stop() && out[1].is_motion_stop());
        assert!(matches!(out[2], Inbound::Message { msg: ClientMessage::Transition { .. }, .. }));
        assert!(matches!(out[3], Inbound::Closed { session: 3 }));
        assert!(matches!(out[4], Inbound::Message { msg: ClientMessage::Bye, .. }));
    }

    #[test]
    fn outbox_drops_oldest_telemetry_only() {
        let o = Outbox::new(3);
        let frame = |t: f64| ServerMessage::Telemetry {
            frame: TelemetryFrame {
                t,
                mode: "standing".into(),
                phi: 0.0,
                stop_pending: false,
                command: PolicyCommand::None,
                show: ShowFunctionState::default(),
                path: Default::default(),
                links: vec![],
                q: vec![],
                qd: vec![],
                tau: vec![],
                setpoint: vec![],
                reward: None,
                deadline_misses: 0,
            },
        };
        o.push(ServerMessage::Error { message: "keep".into() });
        o.push(frame(1.0));
        o.push(frame(2.0));
        o.push(frame(3.0));
        o.close();
        let got: Vec<_> = std::iter::from_fn(|| o.pop()).collect();
        assert_eq!(got.len(), 3);
        assert!(matches!(&got[0], ServerMessage::Error { .. }));
        assert!(matches!(&got[1], ServerMessage::Telemetry { frame } if frame.t == 2.0));
        assert!(matches!(&got[2], ServerMessage::Telemetry { frame } if frame.t == 3.0));
    }
}
