//! Nash-Q with full information: both players' joint tables, updated from a
//! single equilibrium selection of the next-state stage game.

use crate::equilibrium::{nash_q_value, BimatrixGame, EquilibriumSelector, NashValue};
use crate::error::{Error, Result};
use crate::game::{Player, StochasticGame, StrategyProfile, TrajectoryRecord};
use crate::learning::agent::{JointController, UpdateStats};
use crate::learning::schedule::LearningRateSchedule;
use crate::learning::tables::{JointQTable, MarginalQTable, VisitCounter};
use crate::equilibrium::support_enumeration::MAX_ENUMERATION_ACTIONS;
use crate::rng::GameRng;
use crate::simplex::sample_from;

pub struct NashQLearner {
    q: [JointQTable; 2],
    visits: VisitCounter,
    schedule: LearningRateSchedule,
    gamma: [f64; 2],
    selector: Box<dyn EquilibriumSelector>,
    cache: Vec<Option<NashValue>>,
    rngs: [GameRng; 2],
    peak: [f64; 2],
    solves: u64,
}

impl NashQLearner {
    pub fn new(
        game: &StochasticGame,
        schedule: LearningRateSchedule,
        selector: Box<dyn EquilibriumSelector>,
        rngs: [GameRng; 2],
    ) -> Result<Self> {
        let na = game.action_counts();
        if na.iter().any(|&n| n > MAX_ENUMERATION_ACTIONS) {
            return Err(Error::config(
                "learners",
                format!("full information needs at most {MAX_ENUMERATION_ACTIONS} actions per player, got {na:?}"),
            ));
        }
        let n = game.n_states();
        Ok(NashQLearner {
            q: [JointQTable::zeros(n, na), JointQTable::zeros(n, na)],
            visits: VisitCounter::new(n * na[0] * na[1]),
            schedule,
            gamma: game.gammas(),
            selector,
            cache: vec![None; n],
            rngs,
            peak: [0.0; 2],
            solves: 0,
        })
    }

    pub fn table(&self, player: Player) -> &JointQTable {
        &self.q[player.index()]
    }

    /// Number of stage-game equilibrium computations so far.
    pub fn solves(&self) -> u64 {
        self.solves
    }

    fn stage(&self, s: usize) -> BimatrixGame {
        let [n1, n2] = self.q[0].n_actions();
        BimatrixGame::from_flat(n1, n2, self.q[0].stage(s).to_vec(), self.q[1].stage(s).to_vec())
            .expect("stage shapes agree")
    }

    fn solve(&self, s: usize) -> Result<NashValue> {
        nash_q_value(&self.stage(s), self.selector.as_ref())
            .map_err(|e| Error::Solver(format!("stage game at state {s}: {e}")))
    }

    fn equilibrium(&mut self, s: usize) -> Result<&NashValue> {
        if self.cache[s].is_none() {
            self.cache[s] = Some(self.solve(s)?);
            self.solves += 1;
        }
        Ok(self.cache[s].as_ref().expect("filled above"))
    }
}

impl JointController for NashQLearner {
    fn act(&mut self, s: usize, epsilon: f64) -> Result<[usize; 2]> {
        let pi = self.equilibrium(s)?.pi.clone();
        let a1 = sample_from(&pi[0].mix_uniform(epsilon), &mut self.rngs[0]);
        let a2 = sample_from(&pi[1].mix_uniform(epsilon), &mut self.rngs[1]);
        Ok([a1, a2])
    }

    fn observe(&mut self, t: u64, rec: &TrajectoryRecord, terminal: bool) -> Result<[UpdateStats; 2]> {
        let next = if terminal { [0.0; 2] } else { self.equilibrium(rec.s_next)?.values };
        let k = self.visits.increment(self.q[0].index(rec.s, rec.a1, rec.a2));
        let alpha = self.schedule.rate(t, k);
        let mut stats = [UpdateStats::default(); 2];
        for p in Player::BOTH {
            let i = p.index();
            let old = self.q[i].get(rec.s, rec.a1, rec.a2);
            let new = (1.0 - alpha) * old + alpha * (rec.reward(p) + self.gamma[i] * next[i]);
            self.q[i].set(rec.s, rec.a1, rec.a2, new);
            self.peak[i] = self.peak[i].max(new.abs());
            stats[i] = UpdateStats { alpha, delta: (new - old).abs() };
        }
        self.cache[rec.s] = None;
        Ok(stats)
    }

    fn profile(&self, game: &StochasticGame) -> Result<StrategyProfile> {
        let mut pi = [Vec::with_capacity(game.n_states()), Vec::with_capacity(game.n_states())];
        for s in 0..game.n_states() {
            let nv = match &self.cache[s] {
                Some(nv) => nv.clone(),
                None => self.solve(s)?,
            };
            let [x, y] = nv.pi;
            pi[0].push(x);
            pi[1].push(y);
        }
        let [p1, p2] = pi;
        Ok(StrategyProfile::new(p1, p2))
    }

    /// Joint tables averaged over the opponent's selected equilibrium strategy.
    fn marginal_tables(&self, game: &StochasticGame) -> Result<[Option<MarginalQTable>; 2]> {
        let profile = self.profile(game)?;
        Ok([
            Some(self.q[0].marginalize(Player::One, &profile)),
            Some(self.q[1].marginalize(Player::Two, &profile)),
        ])
    }

    fn peak_abs_q(&self) -> [f64; 2] {
        self.peak
    }
}
