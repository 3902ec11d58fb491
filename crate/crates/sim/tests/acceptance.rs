//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Tolerances are pinned here.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stagebot_core::actuator::{measured_position, torque_limits, ActuatorDraw, ActuatorTable};
use stagebot_core::animation::blend::blend_ratios;
use stagebot_core::animation::joystick::joystick_perp;
use stagebot_core::animation::{
    AnimationCommand, AnimationEngine, BlendClock, EngineConfig, EngineMode, JoystickInput, JoystickRanges,
    ShowFunctionState, T_ALPHA, T_BETA,
};
use stagebot_core::control::{
    lpf_alpha, ActionPipeline, Controller, ControllerMode, Decision, MeasuredState, TransitionOutcome, TransitionTarget,
    ACTUATION_RATE,
};
use stagebot_core::math::{angle_diff, heading, rot2};
use stagebot_core::motion::{ClipCategory, CommandRanges, MotionClip};
use stagebot_core::reward::{evaluate, state_at_rest, RewardConfig, RewardInputs, RewardTerm, RewardWeights};
use stagebot_core::robot::{ActuatorType, JointVector, RobotModel, NUM_JOINTS};
use stagebot_sim::disturbance::{DisturbanceConfig, DisturbanceSampler};
use stagebot_sim::episode::Simulation;
use stagebot_sim::scenario::{Disturbances, EpisodeScenario, Randomization, ScriptAction, ScriptEntry};
use stagebot_sim::{run_episode, Libraries};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(name: &str, budget_s: f64, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let r = f();
    let secs = start.elapsed().as_secs_f64();
    let (mut ok, mut detail) = match r {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if secs > budget_s {
        ok = false;
        detail = format!("{detail}; over the {budget_s} s budget");
    }
    println!("{} {name:<24} {secs:>6.2}s  {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn actuator_limits() -> Check {
    let t = ActuatorTable::builtin();
    let a1 = t.get(ActuatorType::A1);
    let mut worst: f64 = 0.0;
    for (qd, want) in [(0.0, 34.0), (3.0, 34.0), (7.4, 34.0), (13.7, 17.0), (20.0, 0.0), (25.0, 0.0)] {
        let (lo, hi) = torque_limits(a1, qd);
        worst = worst.max((hi - want).abs());
        let (lo_neg, hi_neg) = torque_limits(a1, -qd);
        worst = worst.max((lo_neg + want).abs()).max((hi_neg - 34.0).abs()).max((lo + 34.0).abs());
    }
    for kind in ActuatorType::ALL {
        t.get(kind).validate().map_err(|e| e.to_string())?;
    }
    ensure(worst <= 1e-9, format!("A1 max limit error {worst:.1e}, 3 tables valid"))
}

fn noise_statistics() -> Check {
    let p = *ActuatorTable::builtin().get(ActuatorType::Go1);
    let want = 1.89e-4 + 5.47e-5 * 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| measured_position(&p, &ActuatorDraw::IDEAL, 0.0, 0.0, 10.0, &mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let rel = (std / want - 1.0).abs();
    ensure(rel <= 0.03, format!("std {std:.4e} vs {want:.4e} ({:.2}%)", rel * 100.0))
}

fn reward_sanity() -> Check {
    let model = RobotModel::builtin();
    let config = RewardConfig::builtin();
    let rest = state_at_rest(&model.nominal_pose());
    let zero = JointVector::zeros();
    let inputs = |sim| RewardInputs {
        sim,
        target: &rest,
        tau: &zero,
        qdd: &zero,
        actions: [&zero; 3],
    };
    let (b, term) = evaluate(&model, &inputs(&rest), &config, 0.0);
    if term.is_some() {
        return Err(format!("nominal pose terminates: {term:?}"));
    }
    let exp_ones = RewardTerm::ALL
        .iter()
        .filter(|t| t.exp_scale().is_some())
        .all(|t| b.get(*t).is_some_and(|v| v.value == 1.0));
    let contact = b.get(RewardTerm::Contact).map_or(f64::NAN, |v| v.value);
    let w = RewardWeights::default();
    let oracle = w.torso_position_xy
        + w.torso_orientation
        + w.linear_velocity_xy
        + w.linear_velocity_z
        + w.angular_velocity_xy
        + w.angular_velocity_z
        + 2.0 * w.contact
        + w.survival;
    let mut moved = rest.clone();
    moved.position.x += 0.1;
    let (b2, _) = evaluate(&model, &inputs(&moved), &config, 0.0);
    let pos = b2.get(RewardTerm::TorsoPositionXy).map_or(f64::NAN, |v| v.value);
    let pos_err = (pos - (-2.0f64).exp()).abs();
    ensure(
        exp_ones && contact == 2.0 && b.survival == 20.0 && b.total == oracle && oracle == 27.0 && pos_err <= 1e-12,
        format!(
            "exp terms 1: {exp_ones}, contact {contact}, survival {}, total {} (weight sum {oracle}), exp(-2) error {pos_err:.1e}",
            b.survival, b.total
        ),
    )
}

/// Closed loop with perfect tracking: the measured state is the last
/// reference.
struct Tracker {
    c: Controller,
    last: Option<Decision>,
}

impl Tracker {
    fn new() -> Self {
        Self {
            c: Libraries::builtin().controller().expect("controller"),
            last: None,
        }
    }

    fn step(&mut self) -> &Decision {
        let m = match &self.last {
            Some(d) => MeasuredState {
                base: d.reference.base_pose(),
                linear_velocity: d.reference.linear_velocity,
                angular_velocity: d.reference.angular_velocity,
                q: d.reference.q,
                qd: d.reference.qd,
            },
            None => {
                let r = state_at_rest(&self.c.model().nominal_pose());
                MeasuredState {
                    base: r.base_pose(),
                    linear_velocity: r.linear_velocity,
                    angular_velocity: r.angular_velocity,
                    q: r.q,
                    qd: r.qd,
                }
            }
        };
        self.last = Some(self.c.decide(&m).expect("decide"));
        self.last.as_ref().unwrap()
    }
}

/// Steady-state torso velocity in the path frame, averaged over whole gait
/// cycles: `(vx, vy, omega)`.
fn walk_velocity(input: JoystickInput) -> Result<[f64; 3], String> {
    let mut t = Tracker::new();
    t.c.engine_mut().set_input(input);
    if t.c.request(TransitionTarget::Walking).map_err(|e| e.to_string())? != TransitionOutcome::Applied {
        return Err("walk request not applied".into());
    }
    let settle = 150;
    let mut wraps = Vec::new();
    let mut prev_phi = f64::NAN;
    for k in 0..settle + 400 {
        let d = t.step();
        if d.mode != ControllerMode::Walking {
            return Err(format!("left walking at decision {k}"));
        }
        if k >= settle && d.phase.phi < prev_phi {
            wraps.push((d.time, d.reference.position, heading(&d.reference.orientation), d.path_frame.heading));
        }
        prev_phi = d.phase.phi;
    }
    if wraps.len() < 3 {
        return Err(format!("only {} gait cycles", wraps.len()));
    }
    let (t0, p0, h0, f0) = wraps[0];
    let mut yaw = 0.0;
    let mut last = h0;
    for w in &wraps[1..] {
        yaw += angle_diff(w.2, last);
        last = w.2;
    }
    let (t1, p1, _, _) = *wraps.last().unwrap();
    let dt = t1 - t0;
    let v = rot2(-f0, &Vector2::new(p1.x - p0.x, p1.y - p0.y)) / dt;
    Ok([v.x, v.y, yaw / dt])
}

fn velocity_tracking() -> Check {
    let full = |left: [f64; 2], l2: f64, r2: f64| JoystickInput {
        left,
        l2,
        r2,
        r1_held: true,
        ..Default::default()
    };
    let cases = [
        ("vx+0.7", full([0.0, 1.0], 0.0, 0.0), 0, 0.7),
        ("vx-0.7", full([0.0, -1.0], 0.0, 0.0), 0, -0.7),
        ("vy+0.4", full([0.0, 0.0], 1.0, 0.0), 1, 0.4),
        ("vy-0.4", full([0.0, 0.0], 0.0, 1.0), 1, -0.4),
        ("w+1.8", full([-1.0, 0.0], 0.0, 0.0), 2, 1.8),
        ("w-1.8", full([1.0, 0.0], 0.0, 0.0), 2, -1.8),
    ];
    let mut worst = (0.0, "");
    for (name, input, axis, want) in cases {
        let got = walk_velocity(input)?;
        let rel = (got[axis] / want - 1.0).abs();
        if rel > worst.0 {
            worst = (rel, name);
        }
    }
    ensure(worst.0 <= 0.05, format!("worst relative error {:.2}% ({})", worst.0 * 100.0, worst.1))
}

fn tracking_mae() -> Check {
    let r = run_episode(&Libraries::builtin(), &EpisodeScenario::standing(3, 10.0)).map_err(|e| e.to_string())?;
    let s = &r.summary;
    ensure(
        s.mae <= 0.05 && s.termination.is_none() && s.mae.is_finite(),
        format!("MAE {:.4} rad over {} decisions, termination {:?}", s.mae, s.decisions, s.termination),
    )
}

fn transition_continuity() -> Check {
    let libs = Libraries::builtin();
    let mut sim = Simulation::new(libs, 5, Randomization::default(), None).map_err(|e| e.to_string())?;
    let gait = sim.controller().gait().clone();
    let mut prev: Option<JointVector> = None;
    let mut jumps: Vec<(f64, f64)> = Vec::new();
    let mut ticks = |sim: &mut Simulation, n: usize, log: &mut Vec<Decision>| -> Result<(), String> {
        for _ in 0..n {
            let out = sim.step().map_err(|e| e.to_string())?;
            if let Some(p) = prev {
                jumps.push((out.fast.t, (out.fast.setpoint - p).amax()));
            }
            prev = Some(out.fast.setpoint);
            if let Some(rec) = out.decision {
                log.push(rec.decision);
            }
        }
        Ok(())
    };
    let mut log = Vec::new();
    ticks(&mut sim, 600, &mut log)?;
    sim.apply(&ScriptAction::Joystick {
        input: JoystickInput {
            left: [-0.3, 1.0],
            r1_held: true,
            ..Default::default()
        },
    })
    .map_err(|e| e.to_string())?;
    sim.request(TransitionTarget::Walking).map_err(|e| e.to_string())?;
    let walk_from = log.len();
    ticks(&mut sim, 2400, &mut log)?;
    let start_phi = log[walk_from].phase.phi;
    let steady_window = (sim.time() - 2.0, sim.time());
    if sim.request(TransitionTarget::Standing).map_err(|e| e.to_string())? != TransitionOutcome::Latched {
        return Err("stop was not latched".into());
    }
    let stop_from = log.len();
    ticks(&mut sim, 1200, &mut log)?;
    if sim.controller().mode() != &ControllerMode::Standing {
        return Err(format!("not standing after stop: {:?}", sim.controller().mode()));
    }
    sim.request(TransitionTarget::Episodic { clip: "bow".into() }).map_err(|e| e.to_string())?;
    ticks(&mut sim, 600 * 6, &mut log)?;
    if sim.controller().mode() != &ControllerMode::Standing {
        return Err(format!("episode did not return to standing: {:?}", sim.controller().mode()));
    }

    let steady = jumps
        .iter()
        .filter(|(t, _)| *t >= steady_window.0 && *t < steady_window.1)
        .map(|(_, j)| *j)
        .fold(0.0, f64::max);
    let worst = jumps.iter().map(|(_, j)| *j).fold(0.0, f64::max);

    let stop = log[stop_from..]
        .iter()
        .position(|d| d.transition.as_ref().is_some_and(|t| t.from == ControllerMode::Walking))
        .ok_or("no walking to standing switch")?
        + stop_from;
    let t = log[stop].transition.as_ref().unwrap();
    let cmd = match log[stop - 1].command {
        stagebot_core::animation::PolicyCommand::Periodic(c) => c,
        ref other => return Err(format!("walking command was {other:?}")),
    };
    let at = gait.evaluate(&cmd.velocity, cmd.omega, t.phi).pose.contacts;
    let before = &log[stop - 1].reference;
    let ds_onset = at == [true, true] && !(before.contact_left && before.contact_right);

    let right_start = {
        let mut tr = Tracker::new();
        tr.c.engine_mut().set_input(JoystickInput {
            left: [0.3, 1.0],
            r1_held: true,
            ..Default::default()
        });
        tr.c.request(TransitionTarget::Walking).map_err(|e| e.to_string())?;
        tr.step().phase.phi
    };
    let starts = start_phi == gait.left_step_onset() && right_start == gait.right_step_onset();
    ensure(
        worst <= 3.0 * steady && ds_onset && starts,
        format!(
            "max jump {worst:.4} vs steady {steady:.4} (x{:.2}), stop at double-support onset: {ds_onset}, walk-start phases: {starts}",
            worst / steady
        ),
    )
}

fn max_segment_speed(c: &MotionClip) -> JointVector {
    let dt = c.frame_dt();
    let n = c.frames.len();
    let pairs = if c.is_cyclic() { n } else { n - 1 };
    (0..pairs).fold(JointVector::zeros(), |acc, i| {
        let d = (c.frames[(i + 1) % n].q - c.frames[i].q).abs() / dt;
        acc.sup(&d)
    })
}

fn animation_blending() -> Check {
    let libs = Libraries::builtin();
    let model = libs.model.clone();
    let cfg = EngineConfig::default();
    let triggered: Vec<&MotionClip> = libs.clips.iter().filter(|c| c.category == ClipCategory::Triggered).collect();
    let bg = libs.clips.get(&cfg.background).ok_or("no background clip")?;

    // Per-tick bound: both layers move at most at their clip speed, and the
    // blend weight moves by at most dt / T_alpha across their separation.
    let mut speed = max_segment_speed(bg);
    let (mut lo, mut hi) = (JointVector::from_element(f64::INFINITY), JointVector::from_element(f64::NEG_INFINITY));
    for c in triggered.iter().copied().chain([bg]) {
        speed = speed.sup(&max_segment_speed(c));
        for f in &c.frames {
            lo = lo.inf(&f.q);
            hi = hi.sup(&f.q);
        }
    }
    let span = hi - lo;
    let dt = 0.02;
    let bound = speed * dt + span * (dt / cfg.t_alpha);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ratio_max: f64 = 0.0;
    for schedule in 0..20 {
        let mut e = AnimationEngine::new(model.clone(), libs.clips.clone(), cfg.clone()).map_err(|e| e.to_string())?;
        let mut prev = e.tick(dt, &EngineMode::Standing).y.config.q;
        for k in 0..400 {
            if rng.random_bool(0.04) {
                let name = &triggered[rng.random_range(0..triggered.len())].name;
                e.trigger(name).map_err(|e| e.to_string())?;
            } else if rng.random_bool(0.01) {
                e.cancel();
            }
            let q = e.tick(dt, &EngineMode::Standing).y.config.q;
            let d = (q - prev).abs();
            for j in 0..NUM_JOINTS {
                let r = d[j] / (bound[j] + 1e-9);
                ratio_max = ratio_max.max(r);
                if r > 1.0 {
                    return Err(format!("schedule {schedule} tick {k}: joint {j} moved {:.4} > bound {:.4}", d[j], bound[j]));
                }
            }
            prev = q;
        }
    }

    let dur = 2.0;
    let r = |t: f64| blend_ratios(&BlendClock::new(dur).at(t));
    let ramps = [
        (r(T_BETA / 2.0).0, 0.5),
        (r(T_ALPHA / 2.0).1, 0.5),
        (r(dur / 2.0).0, 1.0),
        (r(dur / 2.0).1, 1.0),
        (r(dur).0, 0.0),
        (r(dur).1, 0.0),
        (r(dur - T_ALPHA / 2.0).1, 0.5),
    ];
    let ramp_err = ramps.iter().map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);

    let ranges = JoystickRanges::default();
    let commands = CommandRanges::default();
    let mut gaze_err: f64 = 0.0;
    for k in 0..200 {
        let base = AnimationCommand {
            show: ShowFunctionState::NEUTRAL,
            config: if k % 2 == 0 {
                model.nominal_pose()
            } else {
                let e = AnimationEngine::new(model.clone(), libs.clips.clone(), cfg.clone()).map_err(|e| e.to_string())?;
                e.background_tick(rng.random_range(0.0..bg.duration)).config
            },
        };
        let u = JoystickInput {
            left: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            l2: rng.random_range(0.0..1.0),
            r2: rng.random_range(0.0..1.0),
            ..Default::default()
        };
        let out = joystick_perp(&model, &base, &u, &ranges, &commands);
        let a = model.head_pose(&base.config).rotation;
        let b = model.head_pose(&out.config).rotation;
        gaze_err = gaze_err.max(a.angle_to(&b));
    }
    ensure(
        ramp_err <= 1e-12 && gaze_err <= 1e-9,
        format!(
            "20 random schedules within {:.0}% of the continuity bound, ramp error {ramp_err:.1e}, gaze drift {gaze_err:.1e} rad",
            ratio_max * 100.0
        ),
    )
}

fn filter_characterization() -> Check {
    let cutoff = 37.5;
    let mut p = ActionPipeline::new(JointVector::zeros(), cutoff);
    // With a one-tick hold the pipeline is the bare filter.
    p.ticks = 1;
    let w = 2.0 * PI * cutoff / ACTUATION_RATE;
    let settle = 600;
    let periods = 20;
    let per = (ACTUATION_RATE / cutoff).round() as usize;
    let (mut s, mut c) = (0.0, 0.0);
    for n in 0..settle + periods * per {
        p.push(JointVector::from_element((w * n as f64).sin()));
        let y = p.tick()[0];
        if n >= settle {
            s += y * (w * n as f64).sin();
            c += y * (w * n as f64).cos();
        }
    }
    let m = (periods * per) as f64 / 2.0;
    let gain = ((s / m).powi(2) + (c / m).powi(2)).sqrt();
    let rel = (gain * 2f64.sqrt() - 1.0).abs();

    let mut p = ActionPipeline::new(JointVector::zeros(), cutoff);
    p.ticks = 1;
    let mut y = 0.0;
    for _ in 0..2000 {
        p.push(JointVector::from_element(1.0));
        y = p.tick()[0];
    }
    let dc = (y - 1.0).abs();
    ensure(
        rel <= 0.02 && dc <= 1e-6,
        format!(
            "gain at {cutoff} Hz {gain:.4} ({:+.2}% from 1/sqrt2), alpha {:.4}, DC error {dc:.1e}",
            (gain * 2f64.sqrt() - 1.0) * 100.0,
            lpf_alpha(cutoff, ACTUATION_RATE)
        ),
    )
}

fn determinism() -> Check {
    let libs = Libraries::builtin();
    let mut s = EpisodeScenario::standing(42, 6.0);
    s.disturbances = Disturbances {
        enabled: true,
        ..Default::default()
    };
    s.script = vec![
        ScriptEntry {
            t: 1.0,
            action: ScriptAction::Joystick {
                input: JoystickInput {
                    left: [0.2, 0.8],
                    r1_held: true,
                    ..Default::default()
                },
            },
        },
        ScriptEntry {
            t: 1.0,
            action: ScriptAction::Transition {
                to: "walking".into(),
                clip: None,
            },
        },
        ScriptEntry {
            t: 4.0,
            action: ScriptAction::Transition {
                to: "standing".into(),
                clip: None,
            },
        },
    ];
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    for d in &dirs {
        run_episode(&libs, &s).and_then(|r| r.write_dir(d.path())).map_err(|e| e.to_string())?;
    }
    let mut files = 0;
    for entry in std::fs::read_dir(dirs[0].path()).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let a = std::fs::read(dirs[0].path().join(&name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(&name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{} differs", name.to_string_lossy()));
        }
        files += 1;
    }
    ensure(files == 4, format!("{files} trace files bit-identical"))
}

struct Bounds {
    bodies: &'static [&'static str],
    force_xy: [f64; 2],
    force_z: [f64; 2],
    torque_xy: [f64; 2],
    torque_z: [f64; 2],
    on: [f64; 2],
    off: [f64; 2],
}

fn disturbance_sampler() -> Check {
    let table = [
        (
            "short_small",
            Bounds {
                bodies: &["left_hip_roll", "right_hip_roll", "left_foot", "right_foot"],
                force_xy: [0.0, 5.0],
                force_z: [0.0, 5.0],
                torque_xy: [0.0, 0.25],
                torque_z: [0.0, 0.25],
                on: [0.25, 2.0],
                off: [1.0, 3.0],
            },
        ),
        (
            "long_small",
            Bounds {
                bodies: &["torso", "head"],
                force_xy: [0.0, 5.0],
                force_z: [0.0, 5.0],
                torque_xy: [0.0, 0.25],
                torque_z: [0.0, 0.25],
                on: [2.0, 10.0],
                off: [1.0, 3.0],
            },
        ),
        (
            "short_large",
            Bounds {
                bodies: &["torso"],
                force_xy: [90.0, 150.0],
                force_z: [0.0, 10.0],
                torque_xy: [0.0, 15.0],
                torque_z: [0.0, 15.0],
                on: [0.1, 0.1],
                off: [12.0, 15.0],
            },
        ),
    ];
    let model = RobotModel::builtin();
    let mut s = DisturbanceSampler::new(DisturbanceConfig::builtin(), &model, ChaCha8Rng::seed_from_u64(9))
        .map_err(|e| e.to_string())?;
    let mut t = 0.0;
    while s.events().len() < 10_000 {
        t += 0.5;
        s.advance(t);
    }
    let inside = |v: f64, r: [f64; 2]| v.abs() >= r[0] && v.abs() <= r[1];
    let mut last_end: std::collections::BTreeMap<(String, String), f64> = Default::default();
    let mut large = 0;
    for (i, e) in s.events().iter().enumerate() {
        let b = &table.iter().find(|(n, _)| *n == e.category).ok_or(format!("unknown category {}", e.category))?.1;
        let (f, q): (Vector3<f64>, Vector3<f64>) = (e.wrench.force, e.wrench.torque);
        let ok = b.bodies.contains(&e.body.as_str())
            && inside(f.x, b.force_xy)
            && inside(f.y, b.force_xy)
            && inside(f.z, b.force_z)
            && inside(q.x, b.torque_xy)
            && inside(q.y, b.torque_xy)
            && inside(q.z, b.torque_z)
            && e.duration >= b.on[0]
            && e.duration <= b.on[1];
        if !ok {
            return Err(format!("event {i} out of bounds: {e:?}"));
        }
        if e.category == "short_large" {
            large += 1;
            if e.duration != 0.1 {
                return Err(format!("short_large event {i} lasts {}", e.duration));
            }
        }
        let key = (e.category.clone(), e.body.clone());
        let gap = e.start - last_end.get(&key).copied().unwrap_or(0.0);
        if gap < b.off[0] - 1e-9 || gap > b.off[1] + 1e-9 {
            return Err(format!("event {i}: off gap {gap} outside {:?}", b.off));
        }
        last_end.insert(key, e.start + e.duration);
    }
    ensure(
        large > 0,
        format!("{} events ({large} short_large) within bounds", s.events().len()),
    )
}

fn main() {
    let results = [
        run("actuator-limits", 1.0, actuator_limits),
        run("noise-statistics", 5.0, noise_statistics),
        run("reward-sanity", 1.0, reward_sanity),
        run("velocity-tracking", 30.0, velocity_tracking),
        run("tracking-mae", 30.0, tracking_mae),
        run("transition-continuity", 30.0, transition_continuity),
        run("animation-blending", 10.0, animation_blending),
        run("filter", 5.0, filter_characterization),
        run("determinism", 60.0, determinism),
        run("disturbance-sampler", 5.0, disturbance_sampler),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
