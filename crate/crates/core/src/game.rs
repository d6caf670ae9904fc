//! The two-player stochastic game model and exact policy evaluation.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::simplex::{sample_from, sample_index, SimplexVector};

/// Games with at most this many states are evaluated by a dense LU solve.
pub const DIRECT_SOLVE_MAX_STATES: usize = 2000;
/// Fixed-point tolerance for the iterative evaluation path.
pub const EVALUATION_TOL: f64 = 1e-10;

const DENSE_JSON_MAX_STATES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn from_index(i: usize) -> Player {
        match i {
            0 => Player::One,
            1 => Player::Two,
            _ => panic!("player index {i} out of range"),
        }
    }
}

/// A successor distribution stored by its support.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    support: Vec<usize>,
    probs: Vec<f64>,
}

impl TransitionRow {
    pub fn from_dense(weights: Vec<f64>) -> Result<Self> {
        let dist = SimplexVector::new(weights)?;
        let (support, probs) = dist
            .weights()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| (s, p))
            .unzip();
        Ok(TransitionRow { support, probs })
    }

    pub fn from_sparse(n_states: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        let mut dense = vec![0.0; n_states];
        for &(s, p) in &entries {
            if s >= n_states {
                return Err(Error::invalid(format!(
                    "successor state {s} out of range {n_states}"
                )));
            }
            dense[s] += p;
        }
        TransitionRow::from_dense(dense)
    }

    pub fn deterministic(s: usize) -> Self {
        TransitionRow {
            support: vec![s],
            probs: vec![1.0],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn prob(&self, s: usize) -> f64 {
        match self.support.binary_search(&s) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self, n_states: usize) -> Vec<f64> {
        let mut d = vec![0.0; n_states];
        for (s, p) in self.iter() {
            d[s] = p;
        }
        d
    }

    /// Same stream consumption and result as sampling the dense row.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.support[sample_index(&self.probs, rng)]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Human-readable map, one text line per grid row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
}

impl GameMetadata {
    fn is_empty(&self) -> bool {
        self.name.is_none() && self.map.is_none()
    }
}

/// `<S, A1, A2, r1, r2, p>` with per-player discount factors.
///
/// Rewards and transitions are stored flat in `(s, a1, a2)` row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGame {
    n_states: usize,
    n_actions: [usize; 2],
    rewards: [Vec<f64>; 2],
    transitions: Vec<TransitionRow>,
    gamma: [f64; 2],
    reward_bound: f64,
    terminal: Vec<bool>,
    metadata: GameMetadata,
}

impl StochasticGame {
    pub fn new(
        n_states: usize,
        n_actions: [usize; 2],
        rewards: [Vec<f64>; 2],
        transitions: Vec<TransitionRow>,
        gamma: [f64; 2],
    ) -> Result<Self> {
        if n_states == 0 || n_actions[0] == 0 || n_actions[1] == 0 {
            return Err(Error::invalid("state and action counts must be positive"));
        }
        let cells = n_states * n_actions[0] * n_actions[1];
        for (i, r) in rewards.iter().enumerate() {
            if r.len() != cells {
                return Err(Error::invalid(format!(
                    "reward table {} has {} entries, expected {cells}",
                    i + 1,
                    r.len()
                )));
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("reward table {} is not finite", i + 1)));
            }
        }
        if transitions.len() != cells {
            return Err(Error::invalid(format!(
                "transition table has {} rows, expected {cells}",
                transitions.len()
            )));
        }
        for row in &transitions {
            if row.support.iter().any(|&s| s >= n_states) {
                return Err(Error::invalid("transition successor out of range"));
            }
        }
        for (i, &g) in gamma.iter().enumerate() {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::invalid(format!(
                    "gamma_{} = {g} must lie strictly inside (0, 1)",
                    i + 1
                )));
            }
        }
        let reward_bound = rewards
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        Ok(StochasticGame {
            n_states,
            n_actions,
            rewards,
            transitions,
            gamma,
            reward_bound,
            terminal: vec![false; n_states],
            metadata: GameMetadata::default(),
        })
    }

    /// Marks absorbing terminal states. Each must self-loop with zero reward.
    pub fn with_terminal_states(mut self, states: &[usize]) -> Result<Self> {
        for &s in states {
            if s >= self.n_states {
                return Err(Error::invalid(format!("terminal state {s} out of range")));
            }
            for a1 in 0..self.n_actions[0] {
                for a2 in 0..self.n_actions[1] {
                    let i = self.index(s, a1, a2);
                    if self.transitions[i] != TransitionRow::deterministic(s)
                        || self.rewards[0][i] != 0.0
                        || self.rewards[1][i] != 0.0
                    {
                        return Err(Error::invalid(format!(
                            "terminal state {s} must be absorbing with zero reward"
                        )));
                    }
                }
            }
            self.terminal[s] = true;
        }
        Ok(self)
    }

    pub fn with_metadata(mut self, metadata: GameMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    #[inline]
    pub fn index(&self, s: usize, a1: usize, a2: usize) -> usize {
        (s * self.n_actions[0] + a1) * self.n_actions[1] + a2
    }

    /// Flat index with actions given from `player`'s perspective.
    #[inline]
    pub fn index_for(&self, player: Player, s: usize, own: usize, opp: usize) -> usize {
        match player {
            Player::One => self.index(s, own, opp),
            Player::Two => self.index(s, opp, own),
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self, player: Player) -> usize {
        self.n_actions[player.index()]
    }

    pub fn action_counts(&self) -> [usize; 2] {
        self.n_actions
    }

    pub fn gamma(&self, player: Player) -> f64 {
        self.gamma[player.index()]
    }

    pub fn gammas(&self) -> [f64; 2] {
        self.gamma
    }

    /// `M = max_i ||r^i||` (sup norm).
    pub fn reward_bound(&self) -> f64 {
        self.reward_bound
    }

    /// `M / (1 - gamma_i)`, the sup-norm bound on any discounted value of player `i`.
    pub fn value_bound(&self, player: Player) -> f64 {
        self.reward_bound / (1.0 - self.gamma(player))
    }

    pub fn reward(&self, player: Player, s: usize, a1: usize, a2: usize) -> f64 {
        self.rewards[player.index()][self.index(s, a1, a2)]
    }

    pub fn rewards(&self, player: Player) -> &[f64] {
        &self.rewards[player.index()]
    }

    pub fn transition(&self, s: usize, a1: usize, a2: usize) -> &TransitionRow {
        &self.transitions[self.index(s, a1, a2)]
    }

    pub fn transition_at(&self, flat: usize) -> &TransitionRow {
        &self.transitions[flat]
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminal_states(&self) -> Vec<usize> {
        (0..self.n_states).filter(|&s| self.terminal[s]).collect()
    }

    pub fn metadata(&self) -> &GameMetadata {
        &self.metadata
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, s: usize, a1: usize, a2: usize, rng: &mut R) -> usize {
        self.transition(s, a1, a2).sample(rng)
    }

    /// True when player `i`'s reward at every state ignores the opponent's action.
    pub fn reward_depends_only_on_own_action(&self, player: Player) -> bool {
        let n_own = self.n_actions(player);
        let n_opp = self.n_actions(player.other());
        let r = self.rewards(player);
        (0..self.n_states).all(|s| {
            (0..n_own).all(|own| {
                let base = r[self.index_for(player, s, own, 0)];
                (1..n_opp).all(|opp| (r[self.index_for(player, s, own, opp)] - base).abs() <= 1e-12)
            })
        })
    }

    pub fn to_document(&self) -> GameDocument {
        let [n1, n2] = self.n_actions;
        let nest = |r: &[f64]| -> Vec<Vec<Vec<f64>>> {
            (0..self.n_states)
                .map(|s| {
                    (0..n1)
                        .map(|a1| (0..n2).map(|a2| r[self.index(s, a1, a2)]).collect())
                        .collect()
                })
                .collect()
        };
        let dense = self.n_states <= DENSE_JSON_MAX_STATES;
        let transitions = (0..self.n_states)
            .map(|s| {
                (0..n1)
                    .map(|a1| {
                        (0..n2)
                            .map(|a2| {
                                let row = self.transition(s, a1, a2);
                                if dense {
                                    RowDocument::Dense(row.to_dense(self.n_states))
                                } else {
                                    RowDocument::Sparse {
                                        support: row.support.clone(),
                                        probs: row.probs.clone(),
                                    }
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        GameDocument {
            n_states: self.n_states,
            n_actions: self.n_actions,
            gamma: self.gamma,
            rewards: [nest(&self.rewards[0]), nest(&self.rewards[1])],
            transitions,
            terminal_states: self.terminal_states(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn from_document(doc: GameDocument) -> Result<Self> {
        let n = doc.n_states;
        let [n1, n2] = doc.n_actions;
        let flatten = |name: &str, r: Vec<Vec<Vec<f64>>>| -> Result<Vec<f64>> {
            if r.len() != n || r.iter().any(|m| m.len() != n1 || m.iter().any(|row| row.len() != n2)) {
                return Err(Error::invalid(format!("{name} must have shape {n}x{n1}x{n2}")));
            }
            Ok(r.into_iter().flatten().flatten().collect())
        };
        let [r1, r2] = doc.rewards;
        let rewards = [flatten("rewards[0]", r1)?, flatten("rewards[1]", r2)?];
        if doc.transitions.len() != n
            || doc
                .transitions
                .iter()
                .any(|m| m.len() != n1 || m.iter().any(|row| row.len() != n2))
        {
            return Err(Error::invalid(format!("transitions must have shape {n}x{n1}x{n2}xS")));
        }
        let mut transitions = Vec::with_capacity(n * n1 * n2);
        for row in doc.transitions.into_iter().flatten().flatten() {
            transitions.push(match row {
                RowDocument::Dense(w) => {
                    if w.len() != n {
                        return Err(Error::invalid(format!(
                            "dense transition row has {} entries, expected {n}",
                            w.len()
                        )));
                    }
                    TransitionRow::from_dense(w)?
                }
                RowDocument::Sparse { support, probs } => {
                    if support.len() != probs.len() {
                        return Err(Error::invalid("sparse row support/probs length mismatch"));
                    }
                    TransitionRow::from_sparse(n, support.into_iter().zip(probs).collect())?
                }
            });
        }
        StochasticGame::new(n, doc.n_actions, rewards, transitions, doc.gamma)?
            .with_terminal_states(&doc.terminal_states)
            .map(|g| g.with_metadata(doc.metadata))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("game document serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        StochasticGame::from_document(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        StochasticGame::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the compact JSON document, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_json_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A transition row in the JSON document: either all `n_states` probabilities,
/// or the support and probabilities of the nonzero entries (large games).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RowDocument {
    Dense(Vec<f64>),
    Sparse { support: Vec<usize>, probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub n_states: usize,
    pub n_actions: [usize; 2],
    pub gamma: [f64; 2],
    /// `rewards[i][s][a1][a2]`.
    pub rewards: [Vec<Vec<Vec<f64>>>; 2],
    /// `transitions[s][a1][a2]` is a distribution over successor states.
    pub transitions: Vec<Vec<Vec<RowDocument>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terminal_states: Vec<usize>,
    #[serde(default, skip_serializing_if = "GameMetadata::is_empty")]
    pub metadata: GameMetadata,
}

/// Stationary strategies for both players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub pi: [Vec<SimplexVector>; 2],
}

impl StrategyProfile {
    pub fn new(pi_1: Vec<SimplexVector>, pi_2: Vec<SimplexVector>) -> Self {
        StrategyProfile { pi: [pi_1, pi_2] }
    }

    pub fn uniform(game: &StochasticGame) -> Self {
        let rows = |p: Player| vec![SimplexVector::uniform(game.n_actions(p)); game.n_states()];
        StrategyProfile::new(rows(Player::One), rows(Player::Two))
    }

    pub fn strategy(&self, player: Player, s: usize) -> &SimplexVector {
        &self.pi[player.index()][s]
    }

    pub fn check_against(&self, game: &StochasticGame) -> Result<()> {
        for p in Player::BOTH {
            let rows = &self.pi[p.index()];
            if rows.len() != game.n_states() {
                return Err(Error::invalid(format!(
                    "profile for player {} has {} states, game has {}",
                    p.index() + 1,
                    rows.len(),
                    game.n_states()
                )));
            }
            if rows.iter().any(|r| r.len() != game.n_actions(p)) {
                return Err(Error::invalid(format!(
                    "profile for player {} has wrong action count",
                    p.index() + 1
                )));
            }
        }
        Ok(())
    }

    /// Largest per-state max-norm distance between the two profiles.
    pub fn distance(&self, other: &StrategyProfile) -> f64 {
        self.pi
            .iter()
            .zip(&other.pi)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)))
            .fold(0.0, f64::max)
    }
}

/// One realized transition of the game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: u64,
    pub s: usize,
    pub a1: usize,
    pub a2: usize,
    pub r1: f64,
    pub r2: f64,
    pub s_next: usize,
}

impl TrajectoryRecord {
    pub fn action(&self, player: Player) -> usize {
        match player {
            Player::One => self.a1,
            Player::Two => self.a2,
        }
    }

    pub fn reward(&self, player: Player) -> f64 {
        match player {
            Player::One => self.r1,
            Player::Two => self.r2,
        }
    }

    /// What `player` observes under partial information: no opponent action.
    pub fn view(&self, player: Player) -> Observation {
        Observation {
            s: self.s,
            action: self.action(player),
            reward: self.reward(player),
            s_next: self.s_next,
            opponent_action: None,
        }
    }

    /// Full-information view, including the opponent's action.
    pub fn full_view(&self, player: Player) -> Observation {
        Observation {
            opponent_action: Some(self.action(player.other())),
            ..self.view(player)
        }
    }
}

/// A single player's observation of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub s: usize,
    pub action: usize,
    pub reward: f64,
    pub s_next: usize,
    pub opponent_action: Option<usize>,
}

/// Draw both actions from `profile` at `s`, then the successor.
/// Stream order: player 1's action, player 2's action, successor.
pub fn step<R: Rng + ?Sized>(
    game: &StochasticGame,
    t: u64,
    s: usize,
    profile: &StrategyProfile,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    if s >= game.n_states() {
        return Err(Error::invalid(format!("state {s} out of range")));
    }
    let a1 = sample_from(profile.strategy(Player::One, s), rng);
    let a2 = sample_from(profile.strategy(Player::Two, s), rng);
    let s_next = game.sample_next(s, a1, a2, rng);
    Ok(TrajectoryRecord {
        t,
        s,
        a1,
        a2,
        r1: game.reward(Player::One, s, a1, a2),
        r2: game.reward(Player::Two, s, a1, a2),
        s_next,
    })
}

/// A finite Markov reward process in sparse form.
#[derive(Debug, Clone)]
pub(crate) struct MarkovChain {
    pub reward: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl MarkovChain {
    /// Solves `v = r + gamma P v`.
    pub fn evaluate(&self, gamma: f64) -> Result<Vec<f64>> {
        let n = self.reward.len();
        if n <= DIRECT_SOLVE_MAX_STATES {
            let mut m = DMatrix::<f64>::identity(n, n);
            for (s, row) in self.rows.iter().enumerate() {
                for &(t, p) in row {
                    m[(s, t)] -= gamma * p;
                }
            }
            let rhs = DVector::from_column_slice(&self.reward);
            let v = m
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Numerical("singular evaluation system".into()))?;
            let v: Vec<f64> = v.iter().copied().collect();
            let residual = self.residual(&v, gamma);
            if residual < EVALUATION_TOL {
                return Ok(v);
            }
            // polish with the contraction from the direct solution
            return self.iterate(gamma, v);
        }
        self.iterate(gamma, vec![0.0; n])
    }

    fn backup(&self, v: &[f64], gamma: f64, s: usize) -> f64 {
        self.reward[s] + gamma * self.rows[s].iter().map(|&(t, p)| p * v[t]).sum::<f64>()
    }

    pub fn residual(&self, v: &[f64], gamma: f64) -> f64 {
        (0..v.len())
            .map(|s| (self.backup(v, gamma, s) - v[s]).abs())
            .fold(0.0, f64::max)
    }

    fn iterate(&self, gamma: f64, mut v: Vec<f64>) -> Result<Vec<f64>> {
        let n = v.len();
        let mut next = vec![0.0; n];
        let stop = EVALUATION_TOL * (1.0 - gamma);
        let max_iter = 10 + ((stop / (1.0 + self.sup_reward())).ln() / gamma.ln()).ceil() as usize * 2;
        for _ in 0..max_iter.max(1000) {
            let mut change = 0.0f64;
            for s in 0..n {
                next[s] = self.backup(&v, gamma, s);
                change = change.max((next[s] - v[s]).abs());
            }
            std::mem::swap(&mut v, &mut next);
            if change < stop {
                return Ok(v);
            }
        }
        Err(Error::Numerical(format!(
            "policy evaluation did not reach tolerance {EVALUATION_TOL}"
        )))
    }

    fn sup_reward(&self) -> f64 {
        self.reward.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Accumulates weighted sparse rows into one sparse row without allocating per call.
pub(crate) struct RowMixer {
    dense: Vec<f64>,
    touched: Vec<usize>,
}

impl RowMixer {
    pub fn new(n_states: usize) -> Self {
        RowMixer {
            dense: vec![0.0; n_states],
            touched: Vec::new(),
        }
    }

    pub fn add(&mut self, row: &TransitionRow, weight: f64) {
        if weight == 0.0 {
            return;
        }
        for (s, p) in row.iter() {
            if self.dense[s] == 0.0 {
                self.touched.push(s);
            }
            self.dense[s] += weight * p;
        }
    }

    pub fn take(&mut self) -> Vec<(usize, f64)> {
        self.touched.sort_unstable();
        let out = self
            .touched
            .iter()
            .map(|&s| (s, std::mem::replace(&mut self.dense[s], 0.0)))
            .collect();
        self.touched.clear();
        out
    }
}

/// Strategy-averaged reward and transition chain seen by `player` under `profile`.
pub(crate) fn profile_chain(game: &StochasticGame, profile: &StrategyProfile, player: Player) -> MarkovChain {
    let n = game.n_states();
    let [n1, n2] = game.action_counts();
    let mut mixer = RowMixer::new(n);
    let mut reward = vec![0.0; n];
    let mut rows = Vec::with_capacity(n);
    for s in 0..n {
        let p1 = profile.strategy(Player::One, s).weights();
        let p2 = profile.strategy(Player::Two, s).weights();
        for a1 in 0..n1 {
            for a2 in 0..n2 {
                let w = p1[a1] * p2[a2];
                if w == 0.0 {
                    continue;
                }
                let i = game.index(s, a1, a2);
                reward[s] += w * game.rewards(player)[i];
                mixer.add(game.transition_at(i), w);
            }
        }
        rows.push(mixer.take());
    }
    MarkovChain { reward, rows }
}

/// `v^i(s, pi^1, pi^2)` for both players, solved exactly.
pub fn value_of_profile(game: &StochasticGame, profile: &StrategyProfile) -> Result<[Vec<f64>; 2]> {
    profile.check_against(game)?;
    let v1 = profile_chain(game, profile, Player::One).evaluate(game.gamma(Player::One))?;
    let v2 = profile_chain(game, profile, Player::Two).evaluate(game.gamma(Player::Two))?;
    Ok([v1, v2])
}
