//! Deployable control stack: observation, phase features, policy, action
//! pipeline and the mode state machine.

pub mod features;
pub mod observation;
pub mod pipeline;
pub mod policy;
pub mod runtime;

pub use features::{phase_features, PhaseFeatureParams};
pub use observation::{build_observation, ActionHistory, MeasuredState, Observation};
pub use pipeline::{lpf_alpha, ActionPipeline, ACTUATION_RATE, POLICY_RATE, TICKS_PER_ACTION};
pub use policy::{stub_policy, ActionTransform, PolicyKind, PolicyNet};
pub use runtime::{
    Controller, ControllerMode, Decision, Policies, RuntimeConfig, Transition, TransitionOutcome, TransitionTarget,
    DECISION_DT,
};
