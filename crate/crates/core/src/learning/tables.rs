use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Player, StrategyProfile};

/// `Q̄(s, a)` for one player, flat in `(s, a)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct MarginalQTable {
    n_states: usize,
    n_actions: usize,
    q: Vec<f64>,
}

impl MarginalQTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        MarginalQTable { n_states, n_actions, q: vec![0.0; n_states * n_actions] }
    }

    pub fn from_nested(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_actions = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n_actions == 0 || rows.iter().any(|r| r.len() != n_actions) {
            return Err(Error::invalid("marginal table must be a non-empty rectangular array"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("marginal table has non-finite entries"));
        }
        Ok(MarginalQTable { n_states: rows.len(), n_actions, q: rows.concat() })
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.n_actions).map(<[f64]>::to_vec).collect()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.q[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.n_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.q[s * self.n_actions + a] = v;
    }

    pub fn index(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn sup_norm(&self) -> f64 {
        self.q.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other|`; tables must share a shape.
    pub fn max_abs_diff(&self, other: &MarginalQTable) -> f64 {
        debug_assert_eq!(self.q.len(), other.q.len());
        self.q.iter().zip(&other.q).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Re-index through an observation map: row `s` of the result is row
    /// `map[s]` of `self`.
    pub fn lift(&self, map: &[usize]) -> MarginalQTable {
        let mut q = Vec::with_capacity(map.len() * self.n_actions);
        for &o in map {
            q.extend_from_slice(self.row(o));
        }
        MarginalQTable { n_states: map.len(), n_actions: self.n_actions, q }
    }
}

impl TryFrom<Vec<Vec<f64>>> for MarginalQTable {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        MarginalQTable::from_nested(rows)
    }
}

impl From<MarginalQTable> for Vec<Vec<f64>> {
    fn from(t: MarginalQTable) -> Self {
        t.to_nested()
    }
}

/// `Q(s, a1, a2)` for one player, flat in `(s, a1, a2)` order regardless of
/// which player owns it.
#[derive(Debug, Clone, PartialEq)]
pub struct JointQTable {
    n_states: usize,
    n_actions: [usize; 2],
    q: Vec<f64>,
}

impl JointQTable {
    pub fn zeros(n_states: usize, n_actions: [usize; 2]) -> Self {
        JointQTable { n_states, n_actions, q: vec![0.0; n_states * n_actions[0] * n_actions[1]] }
    }

    pub fn from_flat(n_states: usize, n_actions: [usize; 2], q: Vec<f64>) -> Result<Self> {
        if q.len() != n_states * n_actions[0] * n_actions[1] {
            return Err(Error::invalid("joint table length does not match its shape"));
        }
        Ok(JointQTable { n_states, n_actions, q })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> [usize; 2] {
        self.n_actions
    }

    pub fn index(&self, s: usize, a1: usize, a2: usize) -> usize {
        (s * self.n_actions[0] + a1) * self.n_actions[1] + a2
    }

    pub fn get(&self, s: usize, a1: usize, a2: usize) -> f64 {
        self.q[self.index(s, a1, a2)]
    }

    pub fn set(&mut self, s: usize, a1: usize, a2: usize, v: f64) {
        let i = self.index(s, a1, a2);
        self.q[i] = v;
    }

    /// The `n1 x n2` stage matrix at `s`, row-major.
    pub fn stage(&self, s: usize) -> &[f64] {
        let k = self.n_actions[0] * self.n_actions[1];
        &self.q[s * k..(s + 1) * k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn sup_norm(&self) -> f64 {
        self.q.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n_states)
            .map(|s| self.stage(s).chunks(self.n_actions[1]).map(<[f64]>::to_vec).collect())
            .collect()
    }

    /// Average out the opponent: `player`'s marginal table against the
    /// opponent's strategies in `profile`.
    pub fn marginalize(&self, player: Player, profile: &StrategyProfile) -> MarginalQTable {
        let [n1, n2] = self.n_actions;
        let own_n = self.n_actions[player.index()];
        let mut out = MarginalQTable::zeros(self.n_states, own_n);
        for s in 0..self.n_states {
            let opp = profile.strategy(player.other(), s).weights();
            let stage = self.stage(s);
            for own in 0..own_n {
                let v = match player {
                    Player::One => (0..n2).map(|b| stage[own * n2 + b] * opp[b]).sum(),
                    Player::Two => (0..n1).map(|a| stage[a * n2 + own] * opp[a]).sum(),
                };
                out.set(s, own, v);
            }
        }
        out
    }
}

/// Update counts per table entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitCounter {
    counts: Vec<u64>,
}

impl VisitCounter {
    pub fn new(len: usize) -> Self {
        VisitCounter { counts: vec![0; len] }
    }

    /// Count one more update at `i` and return the new count.
    pub fn increment(&mut self, i: usize) -> u64 {
        self.counts[i] += 1;
        self.counts[i]
    }

    pub fn get(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    /// Fraction of entries updated at least once.
    pub fn coverage(&self) -> f64 {
        if self.counts.is_empty() {
            return 0.0;
        }
        self.counts.iter().filter(|&&c| c > 0).count() as f64 / self.counts.len() as f64
    }
}
