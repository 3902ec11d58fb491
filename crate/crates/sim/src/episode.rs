//! The closed loop at 600 Hz: controller decisions every 12 ticks,
//! actuator torques, joint dynamics, disturbances and rewards.
//!
//! The torso follows the reference kinematically; only the joints are
//! simulated.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stagebot_core::actuator::{sample_draw, Actuator, ActuatorDraw, ACTUATION_DT};
use stagebot_core::animation::{OperatorEvent, PolicyCommand};
use stagebot_core::control::{
    Controller, ControllerMode, Decision, MeasuredState, TransitionOutcome, TransitionTarget, TICKS_PER_ACTION,
};
use stagebot_core::reward::{evaluate, RewardBreakdown, RewardInputs, RewardTerm, Termination};
use stagebot_core::robot::{JointVector, KinematicTargetState, NUM_JOINTS};

use crate::disturbance::{DisturbanceEvent, DisturbanceSampler, WrenchMapping};
use crate::dynamics::{load_inertia, JointDynamics};
use crate::error::{SimError, SimResult};
use crate::libs::Libraries;
use crate::score::decision_acceleration;
use crate::scenario::{EpisodeScenario, Randomization, ScriptAction};
use crate::trace::{write_fast, write_slow_csv, FastSample, SlowSample};

/// RNG streams, one per consumer so that toggling one does not shift the
/// others.
mod stream {
    pub const DRAWS: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const DISTURBANCES: u64 = 3;
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn mode_label(mode: &ControllerMode) -> String {
    match mode {
        ControllerMode::Episodic { clip } => format!("episodic:{clip}"),
        m => m.name().to_string(),
    }
}

/// Outcome of one decision tick.
#[derive(Debug, Clone)]
pub struct DecisionRecord {
    pub decision: Decision,
    pub sample: SlowSample,
    pub breakdown: RewardBreakdown,
}

#[derive(Debug, Clone)]
pub struct TickOutput {
    pub fast: FastSample,
    pub decision: Option<DecisionRecord>,
}

pub struct Simulation {
    libs: Libraries,
    controller: Controller,
    actuators: Vec<Actuator>,
    dynamics: JointDynamics,
    mapping: WrenchMapping,
    sampler: Option<DisturbanceSampler<ChaCha8Rng>>,
    noise_rng: ChaCha8Rng,
    /// Kinematic torso: the latest reference.
    base: KinematicTargetState,
    tick: u64,
    tau: JointVector,
    tau_m: JointVector,
    prev_qd: Option<JointVector>,
    actions: Vec<JointVector>,
    termination: Option<(f64, Termination)>,
}

impl Simulation {
    pub fn new(libs: Libraries, seed: u64, randomization: Randomization, disturbances: Option<f64>) -> SimResult<Self> {
        let model = libs.model.clone();
        let mut controller = libs.controller()?;
        let start = model.nominal_pose();
        let mut draws_rng = rng(seed, stream::DRAWS);
        let actuators: Vec<Actuator> = model
            .layout
            .actuator_types()
            .iter()
            .map(|&kind| {
                let mut params = *libs.actuators.get(kind);
                let draw = if randomization.actuators {
                    sample_draw(&params, &mut draws_rng)
                } else {
                    ActuatorDraw::IDEAL
                };
                if !randomization.noise {
                    params.sigma_q0 = 0.0;
                    params.sigma_q1 = 0.0;
                }
                Actuator::new(params, draw)
            })
            .collect();
        let armature = JointVector::from_fn(|j, _| actuators[j].armature());
        let inertia = load_inertia(&model, &start) + armature;
        let dynamics = JointDynamics::new(inertia, start.q, model.layout.lower_limits(), model.layout.upper_limits());
        let sampler = match disturbances {
            Some(_) => Some(DisturbanceSampler::new(
                libs.disturbances.clone(),
                &model,
                rng(seed, stream::DISTURBANCES),
            )?),
            None => None,
        };
        let base = stagebot_core::reward::state_at_rest(&start);
        controller.initialize(&MeasuredState {
            base: base.base_pose(),
            linear_velocity: base.linear_velocity,
            angular_velocity: base.angular_velocity,
            q: start.q,
            qd: JointVector::zeros(),
        });
        Ok(Self {
            mapping: WrenchMapping::new(&model, disturbances.unwrap_or(0.0)),
            libs,
            controller,
            actuators,
            dynamics,
            sampler,
            noise_rng: rng(seed, stream::NOISE),
            base,
            tick: 0,
            tau: JointVector::zeros(),
            tau_m: JointVector::zeros(),
            prev_qd: None,
            actions: Vec::new(),
            termination: None,
        })
    }

    pub fn from_scenario(libs: Libraries, scenario: &EpisodeScenario) -> SimResult<Self> {
        scenario.validate(&libs.clips)?;
        let dist = scenario.disturbances.enabled.then_some(scenario.disturbances.coupling);
        Self::new(libs, scenario.seed, scenario.randomization, dist)
    }

    pub fn libraries(&self) -> &Libraries {
        &self.libs
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn controller_mut(&mut self) -> &mut Controller {
        &mut self.controller
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * ACTUATION_DT
    }

    pub fn ticks(&self) -> u64 {
        self.tick
    }

    pub fn dynamics(&self) -> &JointDynamics {
        &self.dynamics
    }

    pub fn actuators(&self) -> &[Actuator] {
        &self.actuators
    }

    pub fn base(&self) -> &KinematicTargetState {
        &self.base
    }

    pub fn last_torque(&self) -> JointVector {
        self.tau
    }

    pub fn termination(&self) -> Option<(f64, Termination)> {
        self.termination
    }

    pub fn disturbance_events(&self) -> &[DisturbanceEvent] {
        self.sampler.as_ref().map_or(&[], |s| s.events())
    }

    pub fn apply(&mut self, action: &ScriptAction) -> SimResult<TransitionOutcome> {
        match action {
            ScriptAction::Joystick { input } => {
                self.controller.engine_mut().set_input(*input);
                Ok(TransitionOutcome::Applied)
            }
            ScriptAction::Transition { .. } => {
                let target = action.target()?.expect("transition");
                Ok(self.controller.request(target)?)
            }
            ScriptAction::Event { event } => self.handle(event),
        }
    }

    pub fn handle(&mut self, event: &OperatorEvent) -> SimResult<TransitionOutcome> {
        Ok(self.controller.handle(event)?)
    }

    pub fn request(&mut self, target: TransitionTarget) -> SimResult<TransitionOutcome> {
        Ok(self.controller.request(target)?)
    }

    fn measured(&mut self) -> MeasuredState {
        let q = &self.dynamics.q;
        let qd = &self.dynamics.qd;
        let q_hat = JointVector::from_fn(|j, _| self.actuators[j].measure(q[j], self.tau_m[j], qd[j], &mut self.noise_rng));
        MeasuredState {
            base: self.base.base_pose(),
            linear_velocity: self.base.linear_velocity,
            angular_velocity: self.base.angular_velocity,
            q: q_hat,
            qd: *qd,
        }
    }

    fn decide(&mut self) -> SimResult<DecisionRecord> {
        let t = self.time();
        let measured = self.measured();
        let d = self.controller.decide(&measured)?;
        self.base = d.reference.clone();
        let sim = KinematicTargetState {
            q: self.dynamics.q,
            qd: self.dynamics.qd,
            ..self.base.clone()
        };
        let qdd = decision_acceleration(&sim.qd, self.prev_qd.as_ref());
        self.prev_qd = Some(sim.qd);
        self.actions.push(d.action);
        let n = self.actions.len();
        let a = |back: usize| &self.actions[n.saturating_sub(1 + back)];
        let inputs = RewardInputs {
            sim: &sim,
            target: &d.reference,
            tau: &self.tau,
            qdd: &qdd,
            actions: [a(0), a(1), a(2)],
        };
        let (breakdown, termination) = evaluate(&self.libs.model, &inputs, &self.libs.rewards, d.phase.phi);
        if n > 3 {
            self.actions.remove(0);
        }
        if let (Some(kind), None) = (termination, self.termination) {
            self.termination = Some((t, kind));
        }
        let command = match &d.command {
            PolicyCommand::Periodic(c) => [c.velocity.x, c.velocity.y, c.omega],
            _ => [0.0; 3],
        };
        let mut reward = [0.0; RewardTerm::ALL.len()];
        for (slot, term) in reward.iter_mut().zip(RewardTerm::ALL) {
            *slot = breakdown.get(term).map_or(0.0, |v| v.weighted);
        }
        let sample = SlowSample {
            t,
            mode: mode_label(&d.mode),
            phi: d.phase.phi,
            path: d.path_frame,
            command,
            reference: d.reference.clone(),
            sim,
            setpoint: d.setpoint,
            action: d.action,
            tau: self.tau,
            reward,
            total: breakdown.total,
            termination,
        };
        Ok(DecisionRecord {
            decision: d,
            sample,
            breakdown,
        })
    }

    /// One 600 Hz tick; every twelfth tick starts with a decision.
    pub fn step(&mut self) -> SimResult<TickOutput> {
        let t = self.time();
        let decision = if self.tick.is_multiple_of(TICKS_PER_ACTION as u64) {
            Some(self.decide()?)
        } else {
            None
        };
        let setpoint = self.controller.actuate();
        let gain = self.controller.gain_scale();
        let tau_disturbance = match &mut self.sampler {
            Some(s) => {
                s.advance(t);
                let active = s.active();
                if active.is_empty() {
                    JointVector::zeros()
                } else {
                    let poses = self.libs.model.fk(&self.base.base_pose(), &self.dynamics.q);
                    let contacts = [self.base.contact_left, self.base.contact_right];
                    self.mapping.joint_torques(&self.libs.model, &poses, &active, contacts)
                }
            }
            None => JointVector::zeros(),
        };
        let (q, qd) = (self.dynamics.q, self.dynamics.qd);
        for j in 0..NUM_JOINTS {
            let act = &mut self.actuators[j];
            act.gain_scale = gain;
            let out = act.step(setpoint[j], q[j], qd[j], ACTUATION_DT);
            self.tau[j] = out.tau;
            self.tau_m[j] = out.tau_m;
        }
        self.dynamics.step(&(self.tau + tau_disturbance), ACTUATION_DT);
        self.tick += 1;
        Ok(TickOutput {
            fast: FastSample {
                t,
                setpoint,
                q,
                qd,
                tau: self.tau,
                tau_disturbance,
            },
            decision,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Pace ticks to the wall clock and count missed deadlines.
    pub realtime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptOutcome {
    pub t: f64,
    pub action: ScriptAction,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub duration: f64,
    pub decisions: usize,
    /// Mean absolute joint position error against the reference.
    pub mae: f64,
    pub mae_per_joint: Vec<f64>,
    /// Mean weighted reward per term.
    pub reward_means: Vec<(String, f64)>,
    pub reward_total_mean: f64,
    pub termination: Option<(f64, Termination)>,
    pub disturbance_events: usize,
    pub script: Vec<ScriptOutcome>,
    pub deadline_misses: u64,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub slow: Vec<SlowSample>,
    pub fast: Vec<FastSample>,
    pub events: Vec<DisturbanceEvent>,
    pub summary: EpisodeSummary,
}

pub const SLOW_TRACE_FILE: &str = "trace_50hz.csv";
pub const FAST_TRACE_FILE: &str = "trace_600hz.bin";
pub const SUMMARY_FILE: &str = "summary.json";
pub const EVENTS_FILE: &str = "disturbances.json";

impl EpisodeResult {
    pub fn write_dir(&self, dir: &Path) -> SimResult<()> {
        std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        let create = |name: &str| {
            let p = dir.join(name);
            std::fs::File::create(&p)
                .map(std::io::BufWriter::new)
                .map_err(|e| SimError::io(p, e))
        };
        write_slow_csv(&self.slow, create(SLOW_TRACE_FILE)?)?;
        write_fast(&self.fast, create(FAST_TRACE_FILE)?).map_err(|e| SimError::io(dir.join(FAST_TRACE_FILE), e))?;
        let summary = serde_json::to_string_pretty(&self.summary).expect("plain data serializes");
        let events = serde_json::to_string_pretty(&self.events).expect("plain data serializes");
        for (name, text) in [(SUMMARY_FILE, summary), (EVENTS_FILE, events)] {
            let p = dir.join(name);
            std::fs::write(&p, text + "\n").map_err(|e| SimError::io(p, e))?;
        }
        Ok(())
    }
}

pub fn run_episode(libs: &Libraries, scenario: &EpisodeScenario) -> SimResult<EpisodeResult> {
    run_episode_with(libs, scenario, RunOptions::default())
}

pub fn run_episode_with(libs: &Libraries, scenario: &EpisodeScenario, options: RunOptions) -> SimResult<EpisodeResult> {
    let mut sim = Simulation::from_scenario(libs.clone(), scenario)?;
    let total_ticks = (scenario.duration / ACTUATION_DT).round() as u64;
    let mut slow = Vec::with_capacity(total_ticks as usize / TICKS_PER_ACTION + 1);
    let mut fast = Vec::with_capacity(total_ticks as usize);
    let mut script = Vec::new();
    let mut next = 0;
    let mut abs_err = JointVector::zeros();
    let mut reward_sum = [0.0; RewardTerm::ALL.len()];
    let mut total_sum = 0.0;
    let mut misses = 0;
    let wall = Instant::now();
    while sim.ticks() < total_ticks {
        let t = sim.time();
        while next < scenario.script.len() && scenario.script[next].t <= t + 1e-9 {
            let e = &scenario.script[next];
            let outcome = sim.apply(&e.action)?;
            script.push(ScriptOutcome {
                t,
                action: e.action.clone(),
                outcome: format!("{outcome:?}").to_lowercase(),
            });
            next += 1;
        }
        let out = sim.step()?;
        fast.push(out.fast);
        if let Some(rec) = out.decision {
            abs_err += (rec.sample.sim.q - rec.sample.reference.q).abs();
            for (acc, v) in reward_sum.iter_mut().zip(rec.sample.reward) {
                *acc += v;
            }
            total_sum += rec.sample.total;
            let stop = rec.sample.termination.is_some();
            slow.push(rec.sample);
            if stop {
                break;
            }
        }
        if options.realtime {
            let due = Duration::from_secs_f64(sim.time());
            let now = wall.elapsed();
            if now > due + Duration::from_secs_f64(ACTUATION_DT) {
                misses += 1;
            } else if due > now {
                std::thread::sleep(due - now);
            }
        }
    }
    let n = slow.len().max(1) as f64;
    let per_joint: Vec<f64> = abs_err.iter().map(|e| e / n).collect();
    let summary = EpisodeSummary {
        seed: scenario.seed,
        duration: sim.time(),
        decisions: slow.len(),
        mae: per_joint.iter().sum::<f64>() / NUM_JOINTS as f64,
        mae_per_joint: per_joint,
        reward_means: RewardTerm::ALL
            .iter()
            .zip(reward_sum)
            .map(|(t, s)| (t.name().to_string(), s / n))
            .collect(),
        reward_total_mean: total_sum / n,
        termination: sim.termination(),
        disturbance_events: sim.disturbance_events().len(),
        script,
        deadline_misses: misses,
    };
    Ok(EpisodeResult {
        slow,
        fast,
        events: sim.disturbance_events().to_vec(),
        summary,
    })
}
