//! Inference-based learner: a joint table `Q̂(s, a_own, a_opp)` averaged over
//! an estimated opponent strategy. The estimate comes either from EM over the
//! hidden opponent actions (known kernel) or from observed action frequencies.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::equilibrium::best_response::{best_response_set, max_of};
use crate::error::{Error, Result};
use crate::game::{Observation, Player, StochasticGame};
use crate::learning::agent::{Learner, UpdateStats};
use crate::learning::opponent::{
    em_estimate, em_posterior, FrequencyCounts, OpponentModel, OpponentModelMethod,
};
use crate::learning::schedule::LearningRateSchedule;
use crate::learning::tables::{MarginalQTable, VisitCounter};
use crate::rng::GameRng;
use crate::simplex::{sample_from, SimplexVector};

pub const EM_REFRESH_EVERY: u64 = 100;
pub const HISTORY_CAP: usize = 100_000;
pub const EM_REFRESH_TOL: f64 = 1e-8;
pub const EM_REFRESH_MAX_ITER: usize = 500;

/// Diagnostics accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InferenceStats {
    pub refreshes: u64,
    /// Refreshes whose EM log-likelihood sequence decreased beyond slack.
    pub non_monotone_refreshes: u64,
    /// Updates where the observed successor was impossible under the model.
    pub flagged_posteriors: u64,
}

pub struct InferenceAgent {
    player: Player,
    game: Arc<StochasticGame>,
    method: OpponentModelMethod,
    n_own: usize,
    n_opp: usize,
    q: Vec<f64>,
    model: OpponentModel,
    counts: FrequencyCounts,
    history: VecDeque<Observation>,
    visits: VisitCounter,
    schedule: LearningRateSchedule,
    tie_tol: f64,
    rng: GameRng,
    peak: f64,
    steps: u64,
    stats: InferenceStats,
}

impl InferenceAgent {
    pub fn new(
        player: Player,
        game: Arc<StochasticGame>,
        method: OpponentModelMethod,
        schedule: LearningRateSchedule,
        tie_tol: f64,
        rng: GameRng,
    ) -> Result<Self> {
        if method == OpponentModelMethod::EmFilter && !game.reward_depends_only_on_own_action(player) {
            return Err(Error::config(
                "learners",
                format!("EM inference for player {} needs rewards that ignore the opponent's action", player.index() + 1),
            ));
        }
        let n = game.n_states();
        let (n_own, n_opp) = (game.n_actions(player), game.n_actions(player.other()));
        Ok(InferenceAgent {
            player,
            method,
            n_own,
            n_opp,
            q: vec![0.0; n * n_own * n_opp],
            model: OpponentModel::uniform(n, n_opp, method),
            counts: FrequencyCounts::new(n, n_opp),
            history: VecDeque::new(),
            visits: VisitCounter::new(n * n_own),
            schedule,
            tie_tol,
            rng,
            peak: 0.0,
            steps: 0,
            stats: InferenceStats::default(),
            game,
        })
    }

    pub fn model(&self) -> OpponentModel {
        match self.method {
            OpponentModelMethod::EmFilter => self.model.clone(),
            OpponentModelMethod::EmpiricalFrequency => self.counts.model(),
        }
    }

    pub fn stats(&self) -> InferenceStats {
        self.stats
    }

    pub fn q_hat(&self, s: usize, own: usize, opp: usize) -> f64 {
        self.q[self.slot(s, own, opp)]
    }

    fn slot(&self, s: usize, own: usize, opp: usize) -> usize {
        (s * self.n_own + own) * self.n_opp + opp
    }

    fn opponent(&self, s: usize) -> SimplexVector {
        match self.method {
            OpponentModelMethod::EmFilter => self.model.pi_hat[s].clone(),
            OpponentModelMethod::EmpiricalFrequency => self.counts.strategy(s),
        }
    }

    /// `sum_b pi_hat(s, b) Q̂(s, own, b)` for every own action.
    fn marginal_row(&self, s: usize) -> Vec<f64> {
        let pi = self.opponent(s);
        (0..self.n_own)
            .map(|own| {
                let start = self.slot(s, own, 0);
                let cells = &self.q[start..start + self.n_opp];
                // a convex combination of equal entries is that entry, exactly
                if cells.iter().all(|&c| c == cells[0]) {
                    cells[0]
                } else {
                    pi.dot(cells)
                }
            })
            .collect()
    }

    fn refresh(&mut self) {
        let history = self.history.make_contiguous();
        let est = em_estimate(&self.game, self.player, history, EM_REFRESH_TOL, EM_REFRESH_MAX_ITER)
            .expect("history records come from the same game");
        self.stats.refreshes += 1;
        self.stats.non_monotone_refreshes += u64::from(!est.is_monotone());
        self.model = est.model;
    }
}

impl Learner for InferenceAgent {
    fn act(&mut self, s: usize, epsilon: f64) -> usize {
        let behavior = self.strategy(s).mix_uniform(epsilon);
        sample_from(&behavior, &mut self.rng)
    }

    fn observe(&mut self, t: u64, obs: &Observation, terminal: bool) -> Result<UpdateStats> {
        let weights: Vec<f64> = match self.method {
            OpponentModelMethod::EmFilter => {
                let post = em_posterior(&self.game, self.player, obs, &self.model.pi_hat[obs.s]);
                self.stats.flagged_posteriors += u64::from(post.flagged);
                post.dist.weights().to_vec()
            }
            OpponentModelMethod::EmpiricalFrequency => {
                self.counts.record(obs)?;
                let a = obs.opponent_action.expect("recorded above");
                (0..self.n_opp).map(|b| if b == a { 1.0 } else { 0.0 }).collect()
            }
        };
        let next_best = if terminal { 0.0 } else { max_of(&self.marginal_row(obs.s_next)) };
        let target = obs.reward + self.game.gamma(self.player) * next_best;
        let k = self.visits.increment(obs.s * self.n_own + obs.action);
        let alpha = self.schedule.rate(t, k);
        let w_max = weights.iter().copied().fold(0.0, f64::max);
        let mut delta: f64 = 0.0;
        for (b, w) in weights.iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            let step = if *w == w_max { alpha } else { alpha * w / w_max };
            let i = self.slot(obs.s, obs.action, b);
            let new = (1.0 - step) * self.q[i] + step * target;
            delta = delta.max((new - self.q[i]).abs());
            self.q[i] = new;
            self.peak = self.peak.max(new.abs());
        }
        if self.method == OpponentModelMethod::EmFilter {
            if self.history.len() == HISTORY_CAP {
                self.history.pop_front();
            }
            self.history.push_back(*obs);
            self.steps += 1;
            if self.steps % EM_REFRESH_EVERY == 0 {
                self.refresh();
            }
        }
        Ok(UpdateStats { alpha, delta })
    }

    fn strategy(&self, s: usize) -> SimplexVector {
        best_response_set(&self.marginal_row(s), self.tie_tol).canonical_strategy
    }

    fn marginal_q(&self) -> Option<MarginalQTable> {
        let rows = (0..self.game.n_states()).map(|s| self.marginal_row(s)).collect();
        MarginalQTable::from_nested(rows).ok()
    }

    fn peak_abs_q(&self) -> f64 {
        self.peak
    }

    fn sees_opponent_actions(&self) -> bool {
        self.method == OpponentModelMethod::EmpiricalFrequency
    }

    fn opponent_model(&self) -> Option<OpponentModel> {
        Some(self.model())
    }
}
