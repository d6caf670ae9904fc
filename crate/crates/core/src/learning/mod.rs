//! Learners and the loop that drives them.

pub mod agent;
pub mod full_info;
pub mod inference;
pub mod opponent;
pub mod partial_info;
pub mod runner;
pub mod schedule;
pub mod tables;

pub use agent::{IndependentLearners, JointController, Learner, RandomAgent, StateView, UpdateStats};
pub use full_info::NashQLearner;
pub use inference::InferenceAgent;
pub use opponent::{
    em_estimate, em_iterate, em_posterior, empirical_frequency, log_likelihood, EmEstimate, OpponentModel,
    OpponentModelMethod, Posterior,
};
pub use partial_info::{partial_info_update, PartialInfoAgent};
pub use runner::{
    rollout, run, run_full_info, run_inference_learner, run_partial_info, Checkpoint, EpisodeSummary, Horizon,
    InferenceRun, LearnerSettings, RunOptions, RunOutput, TraceRow,
};
pub use schedule::{Exploration, ExplorationSchedule, LearningRateSchedule};
pub use tables::{JointQTable, MarginalQTable, VisitCounter};
