use serde::{Deserialize, Serialize};

use crate::equilibrium::bimatrix::BimatrixGame;
use crate::equilibrium::lemke_howson::lemke_howson;
use crate::equilibrium::support_enumeration::support_enumeration;
use crate::error::{Error, Result};
use crate::game::Player;
use crate::simplex::SimplexVector;

/// A rule for picking one equilibrium of a bi-matrix game.
pub trait EquilibriumSelector: Send + Sync {
    fn select(&self, game: &BimatrixGame) -> Result<(SimplexVector, SimplexVector)>;
}

/// Lemke–Howson from a fixed label; on failure, the first support-enumeration result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LemkeHowsonSelector {
    pub initial_label: usize,
}

impl EquilibriumSelector for LemkeHowsonSelector {
    fn select(&self, game: &BimatrixGame) -> Result<(SimplexVector, SimplexVector)> {
        lemke_howson(game, self.initial_label).or_else(|_| FirstSupportSelector.select(game))
    }
}

/// The first equilibrium in support-enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FirstSupportSelector;

impl EquilibriumSelector for FirstSupportSelector {
    fn select(&self, game: &BimatrixGame) -> Result<(SimplexVector, SimplexVector)> {
        let max = game.rows().min(game.cols());
        support_enumeration(game, max)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Solver("support enumeration found no equilibrium".into()))
    }
}

/// Serializable name of a selector, used in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectorKind {
    LemkeHowson { initial_label: usize },
    FirstSupport,
}

impl Default for SelectorKind {
    fn default() -> Self {
        SelectorKind::LemkeHowson { initial_label: 0 }
    }
}

impl SelectorKind {
    pub fn build(self) -> Box<dyn EquilibriumSelector> {
        match self {
            SelectorKind::LemkeHowson { initial_label } => Box::new(LemkeHowsonSelector { initial_label }),
            SelectorKind::FirstSupport => Box::new(FirstSupportSelector),
        }
    }
}

/// Selected equilibrium of the stage game `(Q1(s), Q2(s))` and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct NashValue {
    pub values: [f64; 2],
    pub pi: [SimplexVector; 2],
}

/// `(pi1 pi2 Q1, pi1 pi2 Q2, pi1, pi2)` for the selected equilibrium.
pub fn nash_q_value(stage: &BimatrixGame, selector: &dyn EquilibriumSelector) -> Result<NashValue> {
    let (x, y) = selector.select(stage)?;
    Ok(NashValue {
        values: [stage.expected(Player::One, &x, &y), stage.expected(Player::Two, &x, &y)],
        pi: [x, y],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::canonical::{matching_pennies, prisoners_dilemma};

    #[test]
    fn examples() {
        let sel = LemkeHowsonSelector { initial_label: 0 };
        let one = BimatrixGame::new(vec![vec![1.0]], vec![vec![1.0]]).unwrap();
        let v = nash_q_value(&one, &sel).unwrap();
        assert_eq!(v.values, [1.0, 1.0]);

        let v = nash_q_value(&matching_pennies(), &sel).unwrap();
        assert!(v.values[0].abs() < 1e-12 && v.values[1].abs() < 1e-12);
        assert!((v.pi[0].weights()[0] - 0.5).abs() < 1e-12);

        let v = nash_q_value(&prisoners_dilemma(), &sel).unwrap();
        assert_eq!(v.values, [-2.0, -2.0]);
        assert_eq!(v.pi[1].weights(), &[0.0, 1.0]);
    }

    #[test]
    fn fallback_on_bad_label() {
        let sel = LemkeHowsonSelector { initial_label: 99 };
        let v = nash_q_value(&prisoners_dilemma(), &sel).unwrap();
        assert_eq!(v.pi[0].weights(), &[0.0, 1.0]);
    }
}
