//! Q-learning on the marginal table `Q̄(s, a_own)`: each player sees the
//! state, its own action and its own reward, nothing of the opponent.

use crate::equilibrium::best_response::{best_response_set, max_of};
use crate::error::{Error, Result};
use crate::game::Observation;
use crate::learning::agent::{Learner, UpdateStats};
use crate::learning::schedule::LearningRateSchedule;
use crate::learning::tables::{MarginalQTable, VisitCounter};
use crate::rng::GameRng;
use crate::simplex::{sample_from, SimplexVector};

/// `Q̄(s,a) <- (1 - alpha) Q̄(s,a) + alpha (r + gamma next_best)` at the
/// observed `(s, a)`. Returns the new entry.
pub fn partial_info_update(
    qbar: &mut MarginalQTable,
    obs: &Observation,
    next_best: f64,
    alpha: f64,
    gamma: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("learning rate {alpha} is outside (0, 1]")));
    }
    if obs.s >= qbar.n_states() || obs.action >= qbar.n_actions() {
        return Err(Error::invalid(format!("observation ({}, {}) is outside the table", obs.s, obs.action)));
    }
    let old = qbar.get(obs.s, obs.action);
    let new = (1.0 - alpha) * old + alpha * (obs.reward + gamma * next_best);
    qbar.set(obs.s, obs.action, new);
    Ok(new)
}

pub struct PartialInfoAgent {
    qbar: MarginalQTable,
    visits: VisitCounter,
    schedule: LearningRateSchedule,
    gamma: f64,
    tie_tol: f64,
    rng: GameRng,
    peak: f64,
}

impl PartialInfoAgent {
    pub fn new(
        n_obs: usize,
        n_actions: usize,
        gamma: f64,
        schedule: LearningRateSchedule,
        tie_tol: f64,
        rng: GameRng,
    ) -> Self {
        PartialInfoAgent {
            qbar: MarginalQTable::zeros(n_obs, n_actions),
            visits: VisitCounter::new(n_obs * n_actions),
            schedule,
            gamma,
            tie_tol,
            rng,
            peak: 0.0,
        }
    }

    pub fn table(&self) -> &MarginalQTable {
        &self.qbar
    }

    pub fn visits(&self) -> &VisitCounter {
        &self.visits
    }
}

impl Learner for PartialInfoAgent {
    fn act(&mut self, s: usize, epsilon: f64) -> usize {
        let behavior = self.strategy(s).mix_uniform(epsilon);
        sample_from(&behavior, &mut self.rng)
    }

    fn observe(&mut self, t: u64, obs: &Observation, terminal: bool) -> Result<UpdateStats> {
        // uniform-over-ties times the row equals the row max
        let next_best = if terminal { 0.0 } else { max_of(self.qbar.row(obs.s_next)) };
        let k = self.visits.increment(self.qbar.index(obs.s, obs.action));
        let alpha = self.schedule.rate(t, k);
        let old = self.qbar.get(obs.s, obs.action);
        let new = partial_info_update(&mut self.qbar, obs, next_best, alpha, self.gamma)?;
        self.peak = self.peak.max(new.abs());
        Ok(UpdateStats { alpha, delta: (new - old).abs() })
    }

    fn strategy(&self, s: usize) -> SimplexVector {
        best_response_set(self.qbar.row(s), self.tie_tol).canonical_strategy
    }

    fn marginal_q(&self) -> Option<MarginalQTable> {
        Some(self.qbar.clone())
    }

    fn peak_abs_q(&self) -> f64 {
        self.peak
    }
}
