//! Drives the controller state machine with perfect tracking: stand, walk,
//! latch a stop, play an episodic clip, then a motion stop.

use stagebot_core::animation::{JoystickInput, OperatorEvent};
use stagebot_core::control::{Decision, MeasuredState, TransitionTarget};
use stagebot_core::reward::state_at_rest;
use stagebot_sim::Libraries;

fn measured(r: &stagebot_core::robot::KinematicTargetState) -> MeasuredState {
    MeasuredState {
        base: r.base_pose(),
        linear_velocity: r.linear_velocity,
        angular_velocity: r.angular_velocity,
        q: r.q,
        qd: r.qd,
    }
}

fn main() -> stagebot_sim::SimResult<()> {
    let mut c = Libraries::builtin().controller()?;
    let mut state = state_at_rest(&c.model().nominal_pose());
    let mut run = |c: &mut stagebot_core::control::Controller, n: usize| -> stagebot_sim::SimResult<Decision> {
        let mut last = None;
        for _ in 0..n {
            let d = c.decide(&measured(&state))?;
            if let Some(t) = &d.transition {
                println!("{:6.2}s  {} -> {} at phase {:.3}", d.time, t.from.name(), t.to.name(), t.phi);
            }
            state = d.reference.clone();
            last = Some(d);
        }
        Ok(last.expect("at least one decision"))
    };

    run(&mut c, 25)?;
    c.engine_mut().set_input(JoystickInput { left: [-0.4, 0.8], r1_held: true, ..Default::default() });
    println!("walk: {:?}", c.request(TransitionTarget::Walking)?);
    let d = run(&mut c, 100)?;
    println!("        path frame at ({:.2}, {:.2}), heading {:.2}", d.path_frame.position.x, d.path_frame.position.y, d.path_frame.heading);
    println!("stand: {:?}", c.request(TransitionTarget::Standing)?);
    run(&mut c, 50)?;
    println!("bow: {:?}", c.request(TransitionTarget::Episodic { clip: "bow".into() })?);
    println!("walk during bow: {:?}", c.request(TransitionTarget::Walking)?);
    run(&mut c, 200)?;
    println!("motion stop: {:?}", c.handle(&OperatorEvent::MotionStop)?);
    let d = run(&mut c, 40)?;
    println!("        gain scale {}", d.gain_scale);
    println!("home: {:?}", c.handle(&OperatorEvent::Home)?);
    run(&mut c, 100)?;
    Ok(())
}
