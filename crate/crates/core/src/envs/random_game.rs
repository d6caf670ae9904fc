use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{StochasticGame, TransitionRow};
use crate::rng::rng_from_seed;

/// Parameters of the random bi-matrix stochastic game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomGameSpec {
    pub d1: usize,
    pub d2: usize,
    pub d_s: usize,
    /// Correlation weight of player 2's reward on player 1's.
    pub h: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub seed: u64,
}

impl Default for RandomGameSpec {
    fn default() -> Self {
        RandomGameSpec {
            d1: 5,
            d2: 7,
            d_s: 10,
            h: 0.8,
            gamma_1: 0.9,
            gamma_2: 0.8,
            seed: 0,
        }
    }
}

impl RandomGameSpec {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("d1", self.d1), ("d2", self.d2), ("d_s", self.d_s)] {
            if v == 0 {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.h) {
            return Err(Error::config("h", format!("{} is outside [0, 1]", self.h)));
        }
        for (field, g) in [("gamma_1", self.gamma_1), ("gamma_2", self.gamma_2)] {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::config(field, format!("{g} is outside (0, 1)")));
            }
        }
        Ok(())
    }
}

/// `r1 ~ U(0,1)`, `r2 = h r1 + (1-h) U(0,1)`, transition rows proportional to
/// `U(0,1)` draws. Draw order: all `r1` cells, then all `r2` noise cells, then
/// transition rows, each in `(s, a1, a2)` row-major order.
pub fn generate_random_game(spec: &RandomGameSpec) -> Result<StochasticGame> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed, 0);
    let cells = spec.d_s * spec.d1 * spec.d2;
    let r1: Vec<f64> = (0..cells).map(|_| rng.gen()).collect();
    let r2: Vec<f64> = r1
        .iter()
        .map(|&x| {
            let u: f64 = rng.gen();
            spec.h * x + (1.0 - spec.h) * u
        })
        .collect();
    let transitions = random_rows(&mut rng, cells, spec.d_s)?;
    StochasticGame::new(
        spec.d_s,
        [spec.d1, spec.d2],
        [r1, r2],
        transitions,
        [spec.gamma_1, spec.gamma_2],
    )
}

pub(crate) fn random_rows<R: Rng>(rng: &mut R, count: usize, n_states: usize) -> Result<Vec<TransitionRow>> {
    (0..count)
        .map(|_| {
            let raw: Vec<f64> = (0..n_states).map(|_| rng.gen()).collect();
            let total: f64 = raw.iter().sum();
            if total > 0.0 {
                TransitionRow::from_dense(raw.iter().map(|u| u / total).collect())
            } else {
                TransitionRow::from_dense(vec![1.0 / n_states as f64; n_states])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Player;

    #[test]
    fn default_shape_and_ranges() {
        let g = generate_random_game(&RandomGameSpec::default()).unwrap();
        assert_eq!(g.n_states(), 10);
        assert_eq!(g.action_counts(), [5, 7]);
        for p in Player::BOTH {
            assert!(g.rewards(p).iter().all(|&r| (0.0..=1.0).contains(&r)));
        }
        for i in 0..g.n_states() * 35 {
            let total: f64 = g.transition_at(i).iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert_eq!(g.gammas(), [0.9, 0.8]);
    }

    #[test]
    fn h_one_copies_rewards() {
        let g = generate_random_game(&RandomGameSpec { h: 1.0, ..Default::default() }).unwrap();
        assert_eq!(g.rewards(Player::One), g.rewards(Player::Two));
    }

    #[test]
    fn h_zero_uncorrelated() {
        let g = generate_random_game(&RandomGameSpec { h: 0.0, seed: 17, ..Default::default() }).unwrap();
        let (a, b) = (g.rewards(Player::One), g.rewards(Player::Two));
        assert_eq!(a.len(), 350);
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let sa = (a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n).sqrt();
        let sb = (b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n).sqrt();
        let corr = cov / (sa * sb);
        assert!(corr.abs() < 0.15, "correlation {corr}");
    }

    #[test]
    fn pure_function_of_spec() {
        let spec = RandomGameSpec { seed: 5, ..Default::default() };
        assert_eq!(generate_random_game(&spec).unwrap(), generate_random_game(&spec).unwrap());
        let other = RandomGameSpec { seed: 6, ..Default::default() };
        assert_ne!(generate_random_game(&spec).unwrap(), generate_random_game(&other).unwrap());
    }

    #[test]
    fn rejects_bad_gamma() {
        let err = generate_random_game(&RandomGameSpec { gamma_1: 1.2, ..Default::default() }).unwrap_err();
        assert!(err.to_string().contains("gamma_1"));
    }
}
