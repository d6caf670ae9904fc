//! Opponent-strategy estimation: EM filtering over hidden opponent actions
//! (transition kernel known) and plain empirical frequencies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Observation, Player, StochasticGame};
use crate::simplex::SimplexVector;

/// Slack allowed on the per-iteration log-likelihood increase.
pub const LOG_LIKELIHOOD_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpponentModelMethod {
    EmFilter,
    EmpiricalFrequency,
}

/// Estimated opponent strategy per state. Unvisited states stay uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpponentModel {
    pub pi_hat: Vec<SimplexVector>,
    pub method: OpponentModelMethod,
}

impl OpponentModel {
    pub fn uniform(n_states: usize, n_opponent_actions: usize, method: OpponentModelMethod) -> Self {
        OpponentModel { pi_hat: vec![SimplexVector::uniform(n_opponent_actions); n_states], method }
    }

    pub fn strategy(&self, s: usize) -> &SimplexVector {
        &self.pi_hat[s]
    }

    pub fn max_change(&self, other: &OpponentModel) -> f64 {
        self.pi_hat.iter().zip(&other.pi_hat).fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub dist: SimplexVector,
    /// The observed successor had zero likelihood under the prior; `dist` is the prior.
    pub flagged: bool,
}

/// `p(s' | s, a_own, a)` for every opponent action `a`.
fn likelihoods(game: &StochasticGame, observer: Player, s: usize, own: usize, s_next: usize) -> Vec<f64> {
    (0..game.n_actions(observer.other()))
        .map(|a| {
            let i = game.index_for(observer, s, own, a);
            game.transition_at(i).prob(s_next)
        })
        .collect()
}

fn posterior_from(lik: &[f64], prior: &SimplexVector) -> Posterior {
    let joint: Vec<f64> = lik.iter().zip(prior.weights()).map(|(l, p)| l * p).collect();
    let z: f64 = joint.iter().sum();
    if z > 0.0 {
        let dist = SimplexVector::new(joint.iter().map(|j| j / z).collect())
            .expect("normalized posterior is a distribution");
        Posterior { dist, flagged: false }
    } else {
        Posterior { dist: prior.clone(), flagged: true }
    }
}

/// Bayes posterior over the opponent's action at one observed step.
pub fn em_posterior(game: &StochasticGame, observer: Player, obs: &Observation, prior: &SimplexVector) -> Posterior {
    posterior_from(&likelihoods(game, observer, obs.s, obs.action, obs.s_next), prior)
}

/// Observed-data log-likelihood `sum_t log sum_a p(s'|s,a_own,a) pi(s,a)`.
/// Steps with zero likelihood are skipped.
pub fn log_likelihood(game: &StochasticGame, observer: Player, history: &[Observation], model: &OpponentModel) -> f64 {
    history
        .iter()
        .map(|o| {
            let lik = likelihoods(game, observer, o.s, o.action, o.s_next);
            model.strategy(o.s).dot(&lik)
        })
        .filter(|&z| z > 0.0)
        .map(f64::ln)
        .sum()
}

/// One EM step over a raw history: average the posteriors per visited state.
pub fn em_iterate(
    game: &StochasticGame,
    observer: Player,
    history: &[Observation],
    current: &OpponentModel,
) -> OpponentModel {
    let n_opp = game.n_actions(observer.other());
    let mut sums = vec![vec![0.0; n_opp]; game.n_states()];
    let mut visits = vec![0u64; game.n_states()];
    for o in history {
        let post = em_posterior(game, observer, o, current.strategy(o.s));
        for (acc, w) in sums[o.s].iter_mut().zip(post.dist.weights()) {
            *acc += w;
        }
        visits[o.s] += 1;
    }
    finish(sums, &visits, current)
}

fn finish(sums: Vec<Vec<f64>>, visits: &[u64], current: &OpponentModel) -> OpponentModel {
    let pi_hat = sums
        .into_iter()
        .zip(visits)
        .enumerate()
        .map(|(s, (row, &n))| {
            if n == 0 {
                return current.pi_hat[s].clone();
            }
            SimplexVector::new(row.iter().map(|x| x / n as f64).collect()).expect("average of distributions")
        })
        .collect();
    OpponentModel { pi_hat, method: current.method }
}

/// Result of running EM to convergence.
#[derive(Debug, Clone, PartialEq)]
pub struct EmEstimate {
    pub model: OpponentModel,
    pub converged: bool,
    pub iterations: usize,
    /// Log-likelihood of the initial model and of every iterate.
    pub log_likelihoods: Vec<f64>,
    /// Records whose successor had zero likelihood under the final model.
    pub flagged_records: u64,
}

impl EmEstimate {
    /// Largest decrease of the log-likelihood between consecutive iterates.
    pub fn worst_decrease(&self) -> f64 {
        self.log_likelihoods.windows(2).fold(0.0, |m, w| m.max(w[0] - w[1]))
    }

    pub fn is_monotone(&self) -> bool {
        self.worst_decrease() <= LOG_LIKELIHOOD_SLACK
    }
}

/// Sufficient statistics: counts per `(s, a_own, s')`.
struct Aggregated {
    cells: Vec<(usize, Vec<f64>, u64)>,
    visits: Vec<u64>,
}

impl Aggregated {
    fn new(game: &StochasticGame, observer: Player, history: &[Observation]) -> Self {
        let mut counts: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
        let mut visits = vec![0u64; game.n_states()];
        for o in history {
            *counts.entry((o.s, o.action, o.s_next)).or_default() += 1;
            visits[o.s] += 1;
        }
        let cells = counts
            .into_iter()
            .map(|((s, own, sn), c)| (s, likelihoods(game, observer, s, own, sn), c))
            .collect();
        Aggregated { cells, visits }
    }

    fn log_likelihood(&self, model: &OpponentModel) -> f64 {
        self.cells
            .iter()
            .map(|(s, lik, c)| (model.strategy(*s).dot(lik), *c))
            .filter(|&(z, _)| z > 0.0)
            .map(|(z, c)| c as f64 * z.ln())
            .sum()
    }

    fn iterate(&self, current: &OpponentModel, n_opp: usize) -> (OpponentModel, u64) {
        let mut sums = vec![vec![0.0; n_opp]; self.visits.len()];
        let mut flagged = 0;
        for (s, lik, c) in &self.cells {
            let post = posterior_from(lik, current.strategy(*s));
            flagged += u64::from(post.flagged) * c;
            for (acc, w) in sums[*s].iter_mut().zip(post.dist.weights()) {
                *acc += *c as f64 * w;
            }
        }
        (finish(sums, &self.visits, current), flagged)
    }
}

/// EM from the uniform model until the max-norm change drops below `tol`
/// or `max_iter` iterations have run.
pub fn em_estimate(
    game: &StochasticGame,
    observer: Player,
    history: &[Observation],
    tol: f64,
    max_iter: usize,
) -> Result<EmEstimate> {
    let n_opp = game.n_actions(observer.other());
    let start = OpponentModel::uniform(game.n_states(), n_opp, OpponentModelMethod::EmFilter);
    em_estimate_from(game, observer, history, start, tol, max_iter)
}

/// As [`em_estimate`], warm-started from `start`.
pub fn em_estimate_from(
    game: &StochasticGame,
    observer: Player,
    history: &[Observation],
    start: OpponentModel,
    tol: f64,
    max_iter: usize,
) -> Result<EmEstimate> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("EM tolerance {tol} must be positive")));
    }
    check_history(game, observer, history)?;
    let n_opp = game.n_actions(observer.other());
    if history.is_empty() {
        return Ok(EmEstimate {
            model: start,
            converged: true,
            iterations: 0,
            log_likelihoods: vec![0.0],
            flagged_records: 0,
        });
    }
    let agg = Aggregated::new(game, observer, history);
    let mut model = start;
    let mut lls = vec![agg.log_likelihood(&model)];
    let mut converged = false;
    let mut flagged = 0;
    let mut iterations = 0;
    while iterations < max_iter {
        let (next, f) = agg.iterate(&model, n_opp);
        iterations += 1;
        flagged = f;
        let change = next.max_change(&model);
        model = next;
        lls.push(agg.log_likelihood(&model));
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(EmEstimate { model, converged, iterations, log_likelihoods: lls, flagged_records: flagged })
}

fn check_history(game: &StochasticGame, observer: Player, history: &[Observation]) -> Result<()> {
    let n_own = game.n_actions(observer);
    for o in history {
        if o.s >= game.n_states() || o.s_next >= game.n_states() || o.action >= n_own {
            return Err(Error::invalid(format!("history record ({}, {}, {}) is outside the game", o.s, o.action, o.s_next)));
        }
    }
    Ok(())
}

/// Empirical frequency of the opponent's observed actions per state.
pub fn empirical_frequency(n_states: usize, n_opponent_actions: usize, history: &[Observation]) -> Result<OpponentModel> {
    let mut counts = FrequencyCounts::new(n_states, n_opponent_actions);
    for o in history {
        counts.record(o)?;
    }
    Ok(counts.model())
}

/// Incremental form of [`empirical_frequency`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyCounts {
    counts: Vec<Vec<u64>>,
}

impl FrequencyCounts {
    pub fn new(n_states: usize, n_opponent_actions: usize) -> Self {
        FrequencyCounts { counts: vec![vec![0; n_opponent_actions]; n_states] }
    }

    pub fn record(&mut self, obs: &Observation) -> Result<()> {
        let a = obs
            .opponent_action
            .ok_or_else(|| Error::invalid("empirical frequencies need the opponent's actions"))?;
        let row = self
            .counts
            .get_mut(obs.s)
            .ok_or_else(|| Error::invalid(format!("state {} is outside the model", obs.s)))?;
        let slot = row
            .get_mut(a)
            .ok_or_else(|| Error::invalid(format!("opponent action {a} is outside the model")))?;
        *slot += 1;
        Ok(())
    }

    pub fn strategy(&self, s: usize) -> SimplexVector {
        let row = &self.counts[s];
        let n: u64 = row.iter().sum();
        if n == 0 {
            return SimplexVector::uniform(row.len());
        }
        SimplexVector::new(row.iter().map(|&c| c as f64 / n as f64).collect()).expect("frequencies")
    }

    pub fn model(&self) -> OpponentModel {
        OpponentModel {
            pi_hat: (0..self.counts.len()).map(|s| self.strategy(s)).collect(),
            method: OpponentModelMethod::EmpiricalFrequency,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::TransitionRow;

    /// 2 states, player 1 has one action, player 2 has two; opponent action
    /// `a` moves to state `a` with probability `p[a]`.
    fn informative(p: [f64; 2]) -> StochasticGame {
        let rows: Vec<TransitionRow> = (0..2)
            .flat_map(|_| (0..2).map(|a| TransitionRow::from_dense(vec![1.0 - p[a], p[a]]).unwrap()))
            .collect();
        StochasticGame::new(2, [1, 2], [vec![0.0; 4], vec![0.0; 4]], rows, [0.9, 0.9]).unwrap()
    }

    fn obs(s: usize, s_next: usize) -> Observation {
        Observation { s, action: 0, reward: 0.0, s_next, opponent_action: None }
    }

    #[test]
    fn posterior_examples() {
        let g = informative([0.2, 0.6]);
        let prior = SimplexVector::uniform(2);
        let post = em_posterior(&g, Player::One, &obs(0, 1), &prior);
        assert!((post.dist.weights()[0] - 0.25).abs() < 1e-15);
        assert!((post.dist.weights()[1] - 0.75).abs() < 1e-15);

        let g = informative([0.0, 0.5]);
        let post = em_posterior(&g, Player::One, &obs(0, 1), &prior);
        assert_eq!(post.dist.weights(), &[0.0, 1.0]);
        assert!(!post.flagged);

        let g = informative([0.5, 0.5]);
        let post = em_posterior(&g, Player::One, &obs(0, 1), &prior);
        assert_eq!(post.dist, prior);
    }

    #[test]
    fn zero_denominator_keeps_prior() {
        let g = informative([0.0, 1.0]);
        let prior = SimplexVector::point(2, 0);
        let post = em_posterior(&g, Player::One, &obs(0, 1), &prior);
        assert!(post.flagged);
        assert_eq!(post.dist, prior);
    }

    #[test]
    fn averaging_two_records() {
        // deterministic disjoint successors identify the action
        let g = informative([0.0, 1.0]);
        let current = OpponentModel::uniform(2, 2, OpponentModelMethod::EmFilter);
        let next = em_iterate(&g, Player::One, &[obs(0, 0), obs(0, 1)], &current);
        assert_eq!(next.pi_hat[0].weights(), &[0.5, 0.5]);
        assert_eq!(next.pi_hat[1], SimplexVector::uniform(2));
    }

    #[test]
    fn uninformative_is_fixed_point() {
        let g = informative([0.3, 0.3]);
        let hist = [obs(0, 1), obs(0, 0), obs(1, 1)];
        let est = em_estimate(&g, Player::One, &hist, 1e-12, 50).unwrap();
        assert!(est.converged);
        assert_eq!(est.iterations, 1);
        for s in 0..2 {
            assert!(est.model.pi_hat[s].max_abs_diff(&SimplexVector::uniform(2)) < 1e-15);
        }
    }

    #[test]
    fn empty_history() {
        let g = informative([0.2, 0.6]);
        let est = em_estimate(&g, Player::One, &[], 1e-6, 10).unwrap();
        assert!(est.converged);
        assert_eq!(est.model, OpponentModel::uniform(2, 2, OpponentModelMethod::EmFilter));
        assert!(em_estimate(&g, Player::One, &[], 0.0, 10).is_err());
        let f = empirical_frequency(2, 2, &[]).unwrap();
        assert_eq!(f.pi_hat[1], SimplexVector::uniform(2));
    }

    #[test]
    fn frequency_counting() {
        let rec = |a| Observation { opponent_action: Some(a), ..obs(0, 0) };
        let f = empirical_frequency(1, 2, &[rec(0), rec(1), rec(0)]).unwrap();
        assert!((f.pi_hat[0].weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(empirical_frequency(1, 2, &[obs(0, 0)]).is_err());
    }

    #[test]
    fn aggregated_matches_record_wise() {
        let g = informative([0.2, 0.7]);
        let hist: Vec<Observation> = (0..40).map(|i| obs(i % 2, (i / 3) % 2)).collect();
        let mut model = OpponentModel::uniform(2, 2, OpponentModelMethod::EmFilter);
        for _ in 0..5 {
            model = em_iterate(&g, Player::One, &hist, &model);
        }
        let est = em_estimate(&g, Player::One, &hist, 1e-300, 5).unwrap();
        assert!(est.model.max_change(&model) < 1e-12);
        let ll = log_likelihood(&g, Player::One, &hist, &model);
        assert!((ll - est.log_likelihoods[5]).abs() < 1e-9);
        assert!(est.is_monotone());
    }
}
