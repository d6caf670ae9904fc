//! Learning and certifying Nash equilibria of two-player general-sum
//! stochastic games.
//!
//! Players can learn with partial information (own state, action and reward
//! only), with full information (Nash-Q on joint tables), or with an inferred
//! opponent model. The [`verify`] module rebuilds full-information
//! Q-functions from any learned profile and certifies it as an epsilon-Nash
//! equilibrium.

pub mod envs;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod game;
pub mod learning;
pub mod rng;
pub mod simplex;
pub mod verify;

pub use error::{Error, Result};
pub use game::{
    step, value_of_profile, GameDocument, GameMetadata, Observation, Player, StochasticGame, StrategyProfile,
    TrajectoryRecord, TransitionRow,
};
pub use simplex::{sample_from, SimplexVector};
