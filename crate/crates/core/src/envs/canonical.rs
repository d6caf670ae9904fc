//! Small hand-checkable games with known equilibria.

use crate::equilibrium::BimatrixGame;
use crate::error::Result;
use crate::game::{StochasticGame, TransitionRow};
use crate::simplex::SimplexVector;

pub fn matching_pennies() -> BimatrixGame {
    BimatrixGame::new(
        vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
        vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
    )
    .expect("fixture")
}

/// Actions: 0 = cooperate, 1 = defect.
pub fn prisoners_dilemma() -> BimatrixGame {
    BimatrixGame::new(
        vec![vec![-1.0, -3.0], vec![0.0, -2.0]],
        vec![vec![-1.0, 0.0], vec![-3.0, -2.0]],
    )
    .expect("fixture")
}

pub fn battle_of_the_sexes() -> BimatrixGame {
    BimatrixGame::new(vec![vec![2.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0, 0.0], vec![0.0, 2.0]])
        .expect("fixture")
}

pub fn zero_game(rows: usize, cols: usize) -> BimatrixGame {
    BimatrixGame::from_flat(rows, cols, vec![0.0; rows * cols], vec![0.0; rows * cols]).expect("fixture")
}

#[derive(Debug, Clone)]
pub struct CanonicalGame {
    pub name: &'static str,
    pub game: BimatrixGame,
    /// Every equilibrium of the game. For `zero` (where every profile is an
    /// equilibrium) this lists the uniform profile as a representative.
    pub known_equilibria: Vec<(SimplexVector, SimplexVector)>,
}

pub const CANONICAL_NAMES: [&str; 4] = ["matching_pennies", "prisoners_dilemma", "battle_of_the_sexes", "zero"];

pub fn canonical_games() -> Vec<CanonicalGame> {
    let v = |w: &[f64]| SimplexVector::new(w.to_vec()).expect("fixture");
    vec![
        CanonicalGame {
            name: "matching_pennies",
            game: matching_pennies(),
            known_equilibria: vec![(v(&[0.5, 0.5]), v(&[0.5, 0.5]))],
        },
        CanonicalGame {
            name: "prisoners_dilemma",
            game: prisoners_dilemma(),
            known_equilibria: vec![(v(&[0.0, 1.0]), v(&[0.0, 1.0]))],
        },
        CanonicalGame {
            name: "battle_of_the_sexes",
            game: battle_of_the_sexes(),
            known_equilibria: vec![
                (v(&[1.0, 0.0]), v(&[1.0, 0.0])),
                (v(&[0.0, 1.0]), v(&[0.0, 1.0])),
                (v(&[2.0 / 3.0, 1.0 / 3.0]), v(&[1.0 / 3.0, 2.0 / 3.0])),
            ],
        },
        CanonicalGame {
            name: "zero",
            game: zero_game(3, 3),
            known_equilibria: vec![(SimplexVector::uniform(3), SimplexVector::uniform(3))],
        },
    ]
}

pub fn canonical_game(name: &str) -> Option<CanonicalGame> {
    canonical_games().into_iter().find(|g| g.name == name)
}

/// The bi-matrix game repeated forever in a single state.
pub fn one_state_game(stage: &BimatrixGame, gamma: [f64; 2]) -> Result<StochasticGame> {
    let (m, n) = (stage.rows(), stage.cols());
    StochasticGame::new(
        1,
        [m, n],
        [
            stage.payoffs(crate::game::Player::One).to_vec(),
            stage.payoffs(crate::game::Player::Two).to_vec(),
        ],
        vec![TransitionRow::deterministic(0); m * n],
        gamma,
    )
}
