//! A repeated bi-matrix game dressed up with a random, payoff-irrelevant state.
//!
//! Rewards are identical in every state, so any state dependence in a learned
//! profile is an artifact of learning rather than of the game.

use crate::envs::random_game::random_rows;
use crate::equilibrium::BimatrixGame;
use crate::error::{Error, Result};
use crate::game::{Player, StochasticGame};
use crate::rng::rng_from_seed;

pub const SPURIOUS_DEFAULT_GAMMA: [f64; 2] = [0.9, 0.8];

pub fn build_spurious_game(base: &BimatrixGame, n_states: usize, seed: u64) -> Result<StochasticGame> {
    build_spurious_game_with_gamma(base, n_states, seed, SPURIOUS_DEFAULT_GAMMA)
}

pub fn build_spurious_game_with_gamma(
    base: &BimatrixGame,
    n_states: usize,
    seed: u64,
    gamma: [f64; 2],
) -> Result<StochasticGame> {
    if n_states == 0 {
        return Err(Error::invalid("spurious game needs at least one state"));
    }
    let (m, n) = (base.rows(), base.cols());
    let tile = |p: Player| -> Vec<f64> {
        std::iter::repeat(base.payoffs(p)).take(n_states).flatten().copied().collect()
    };
    let mut rng = rng_from_seed(seed, 0);
    let transitions = random_rows(&mut rng, n_states * m * n, n_states)?;
    StochasticGame::new(n_states, [m, n], [tile(Player::One), tile(Player::Two)], transitions, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::canonical::{battle_of_the_sexes, matching_pennies};

    #[test]
    fn rewards_are_state_independent() {
        let g = build_spurious_game(&battle_of_the_sexes(), 6, 3).unwrap();
        let cells = 4;
        for p in Player::BOTH {
            let r = g.rewards(p);
            for s in 1..6 {
                assert_eq!(&r[s * cells..(s + 1) * cells], &r[..cells]);
            }
        }
    }

    #[test]
    fn single_state_is_the_repeated_game() {
        let g = build_spurious_game(&matching_pennies(), 1, 0).unwrap();
        assert_eq!(g.n_states(), 1);
        for i in 0..4 {
            assert_eq!(g.transition_at(i).prob(0), 1.0);
        }
        assert_eq!(g.rewards(Player::One), matching_pennies().payoffs(Player::One));
    }
}
