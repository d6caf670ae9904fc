//! Concrete games.

pub mod canonical;
pub mod gridworld;
pub mod random_game;
pub mod spurious;

pub use canonical::{canonical_game, canonical_games, one_state_game, CanonicalGame};
pub use gridworld::{build_gridworld, Gridworld, GridworldSpec, Move};
pub use random_game::{generate_random_game, RandomGameSpec};
pub use spurious::{build_spurious_game, build_spurious_game_with_gamma};
