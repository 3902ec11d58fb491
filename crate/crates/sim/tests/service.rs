use std::io::{BufReader, Write};
use std::net::TcpStream;
use std::time::{Duration, Instant};

use stagebot_core::animation::JoystickInput;
use stagebot_core::control::TransitionTarget;
use stagebot_sim::episode::Simulation;
use stagebot_sim::protocol::{decode_server, encode, read_frame, write_frame, ClientMessage, Role, ServerMessage, TelemetryFrame};
use stagebot_sim::scenario::Randomization;
use stagebot_sim::server::{serve, ServeConfig, ServerHandle};
use stagebot_sim::Libraries;

fn start() -> ServerHandle {
    let sim = Simulation::new(Libraries::builtin(), 0, Randomization::default(), None).unwrap();
    serve(
        sim,
        ServeConfig {
            bind: "127.0.0.1:0".into(),
            max_duration: Some(60.0),
            ..ServeConfig::default()
        },
    )
    .unwrap()
}

struct Client {
    w: TcpStream,
    r: BufReader<TcpStream>,
}

impl Client {
    fn connect(h: &ServerHandle) -> Self {
        let s = TcpStream::connect(h.local_addr()).unwrap();
        s.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
        Self {
            r: BufReader::new(s.try_clone().unwrap()),
            w: s,
        }
    }

    fn send(&mut self, m: &ClientMessage) {
        write_frame(&mut self.w, &encode(m)).unwrap();
    }

    fn raw(&mut self, bytes: &[u8]) {
        write_frame(&mut self.w, bytes).unwrap();
    }

    fn recv(&mut self) -> ServerMessage {
        decode_server(&read_frame(&mut self.r).unwrap().expect("open")).unwrap()
    }

    /// Next non-telemetry message.
    fn reply(&mut self) -> ServerMessage {
        loop {
            match self.recv() {
                ServerMessage::Telemetry { .. } => {}
                m => return m,
            }
        }
    }

    fn telemetry(&mut self) -> TelemetryFrame {
        loop {
            if let ServerMessage::Telemetry { frame } = self.recv() {
                return frame;
            }
        }
    }

    fn hello(&mut self, role: Role) -> Role {
        self.send(&ClientMessage::Hello { role });
        match self.reply() {
            ServerMessage::Welcome { role, links, joints, .. } => {
                assert_eq!(joints.len(), 14);
                assert!(links.iter().any(|l| l == "head"));
                role
            }
            m => panic!("{m:?}"),
        }
    }
}

#[test]
fn first_operator_wins_and_observers_only_watch() {
    let h = start();
    let mut a = Client::connect(&h);
    assert_eq!(a.hello(Role::Operator), Role::Operator);
    let mut b = Client::connect(&h);
    assert_eq!(b.hello(Role::Operator), Role::Observer);

    b.send(&ClientMessage::Transition { target: TransitionTarget::Walking });
    match b.reply() {
        ServerMessage::Error { message } => assert!(message.contains("observer"), "{message}"),
        m => panic!("{m:?}"),
    }
    assert_eq!(b.telemetry().mode, "standing");

    b.send(&ClientMessage::MotionStop);
    assert!(matches!(b.reply(), ServerMessage::Ack { of, .. } if of == "motion_stop"));
    let deadline = Instant::now() + Duration::from_secs(2);
    while a.telemetry().mode != "motion_stop" {
        assert!(Instant::now() < deadline);
    }
    h.shutdown().unwrap();
}

#[test]
fn transition_shows_up_in_telemetry() {
    let h = start();
    let mut c = Client::connect(&h);
    c.hello(Role::Operator);
    c.send(&ClientMessage::Joystick {
        input: JoystickInput { left: [0.0, 1.0], ..Default::default() },
    });
    let sent = Instant::now();
    c.send(&ClientMessage::Transition { target: TransitionTarget::Walking });
    let latency = loop {
        match c.recv() {
            ServerMessage::Telemetry { frame } if frame.mode == "walking" => break sent.elapsed(),
            ServerMessage::Ack { outcome, .. } => assert_eq!(outcome, "applied"),
            ServerMessage::Error { message } => panic!("{message}"),
            _ => assert!(sent.elapsed() < Duration::from_secs(2)),
        }
    };
    assert!(latency < Duration::from_millis(250), "{latency:?}");
    h.shutdown().unwrap();
}

#[test]
fn telemetry_at_thirty_hertz_of_sim_time() {
    let h = start();
    let mut c = Client::connect(&h);
    c.hello(Role::Observer);
    let frames: Vec<TelemetryFrame> = (0..15).map(|_| c.telemetry()).collect();
    for w in frames.windows(2) {
        assert!((w[1].t - w[0].t - 20.0 / 600.0).abs() < 1e-9, "{} -> {}", w[0].t, w[1].t);
    }
    let f = &frames[0];
    assert_eq!((f.q.len(), f.qd.len(), f.tau.len(), f.setpoint.len()), (14, 14, 14, 14));
    assert!(f.links.iter().all(|l| l.iter().all(|v| v.is_finite())));
    h.shutdown().unwrap();
}

#[test]
fn malformed_frames_get_an_error_and_the_session_survives() {
    let h = start();
    let mut c = Client::connect(&h);
    c.raw(b"{not json");
    assert!(matches!(c.reply(), ServerMessage::Error { message } if message.contains("malformed")));
    c.raw(br#"{"v":9,"type":"bye"}"#);
    assert!(matches!(c.reply(), ServerMessage::Error { message } if message.contains("version 9")));
    c.send(&ClientMessage::Transition { target: TransitionTarget::Walking });
    assert!(matches!(c.reply(), ServerMessage::Error { message } if message.contains("hello")));
    assert_eq!(c.hello(Role::Operator), Role::Operator);
    h.shutdown().unwrap();
}

#[test]
fn motion_stop_wins_over_a_queued_command() {
    let h = start();
    let mut c = Client::connect(&h);
    c.hello(Role::Operator);
    let mut both = Vec::new();
    write_frame(&mut both, &encode(&ClientMessage::Transition { target: TransitionTarget::Walking })).unwrap();
    write_frame(&mut both, &encode(&ClientMessage::MotionStop)).unwrap();
    c.w.write_all(&both).unwrap();
    let acks: Vec<(String, String)> = (0..2)
        .map(|_| match c.reply() {
            ServerMessage::Ack { of, outcome } => (of, outcome),
            m => panic!("{m:?}"),
        })
        .collect();
    assert!(acks.contains(&("motion_stop".into(), "applied".into())), "{acks:?}");
    let deadline = Instant::now() + Duration::from_secs(2);
    while c.telemetry().mode != "motion_stop" {
        assert!(Instant::now() < deadline);
    }
    h.shutdown().unwrap();
}

#[test]
fn bye_closes_the_session() {
    let h = start();
    let mut c = Client::connect(&h);
    c.hello(Role::Operator);
    c.send(&ClientMessage::Bye);
    let deadline = Instant::now() + Duration::from_secs(2);
    loop {
        match read_frame(&mut c.r) {
            Ok(None) | Err(_) => break,
            Ok(Some(_)) => assert!(Instant::now() < deadline),
        }
    }
    let mut d = Client::connect(&h);
    assert_eq!(d.hello(Role::Operator), Role::Operator, "operator slot freed");
    h.shutdown().unwrap();
}
