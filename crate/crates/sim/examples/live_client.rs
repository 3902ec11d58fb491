//! Starts the live service in-process, connects as the operator, starts
//! walking and prints a second of telemetry.

use std::io::BufReader;
use std::net::TcpStream;

use stagebot_core::animation::JoystickInput;
use stagebot_core::control::TransitionTarget;
use stagebot_sim::episode::Simulation;
use stagebot_sim::protocol::{decode_server, encode, read_frame, write_frame, ClientMessage, Role, ServerMessage};
use stagebot_sim::scenario::Randomization;
use stagebot_sim::server::{serve, ServeConfig};
use stagebot_sim::Libraries;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = Simulation::new(Libraries::builtin(), 0, Randomization::default(), None)?;
    let server = serve(sim, ServeConfig { bind: "127.0.0.1:0".into(), ..ServeConfig::default() })?;
    println!("listening on {}", server.local_addr());

    let mut w = TcpStream::connect(server.local_addr())?;
    let mut r = BufReader::new(w.try_clone()?);
    let mut send = |m: ClientMessage| write_frame(&mut w, &encode(&m));
    send(ClientMessage::Hello { role: Role::Operator })?;
    send(ClientMessage::Joystick { input: JoystickInput { left: [0.0, 1.0], ..Default::default() } })?;
    send(ClientMessage::Transition { target: TransitionTarget::Walking })?;

    let mut frames = 0;
    while frames < 30 {
        let Some(bytes) = read_frame(&mut r)? else { break };
        match decode_server(&bytes)? {
            ServerMessage::Telemetry { frame } => {
                frames += 1;
                if frames % 5 == 0 {
                    println!(
                        "t {:5.2}  {:8}  phi {:.2}  path ({:+.3}, {:+.3})  reward {:?}",
                        frame.t, frame.mode, frame.phi, frame.path.position.x, frame.path.position.y, frame.reward
                    );
                }
            }
            other => println!("{other:?}"),
        }
    }
    send(ClientMessage::Bye)?;
    let stats = server.shutdown()?;
    println!("{} ticks, {} missed deadlines", stats.ticks, stats.deadline_misses);
    Ok(())
}
